import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_mm.grid import (
    Grid,
    GridFunction,
    GridMismatchError,
    check_same_grid,
    impose_dirichlet,
    lp_norm,
    project_nonneg,
)


def test_box_layout(small_grid):
    g = small_grid
    assert g.spacing == pytest.approx(1 / 6)
    assert g.n_interior == 6
    # collar of round(0.5 / (1/6)) = 3 nodes on each side
    assert g.n_nodes == 12
    assert np.allclose(g.points[g.interior, 0], (np.arange(6) + 0.5) / 6)
    assert g.cell_volume == pytest.approx(1 / 6)


def test_box_2d_includes_corners():
    g = Grid.box([0.0, 0.0], [1.0, 1.0], 4, trunc_radius=0.25)
    assert g.n_nodes == 36
    assert g.n_interior == 16


def test_box_rejects_incommensurate_sides():
    with pytest.raises(ValueError):
        Grid.box([0.0, 0.0], [1.0, 0.7], 4)


def test_grid_arrays_are_read_only(small_grid):
    with pytest.raises(ValueError):
        small_grid.points[0, 0] = 3.0


def test_gridfunction_rejects_bad_values(small_grid):
    with pytest.raises(ValueError):
        GridFunction(small_grid, np.zeros(5))
    with pytest.raises(ValueError):
        GridFunction(small_grid, np.full(12, np.nan))
    with pytest.raises(ValueError):
        GridFunction(small_grid, -np.ones(12), nonnegative=True)


def test_impose_dirichlet_constant_cases(small_grid):
    g = small_grid
    f = GridFunction(g, np.full(g.n_nodes, 5.0))
    out = impose_dirichlet(f, g.zeros())
    assert np.all(out.interior_values == 5.0)
    assert np.all(out.exterior_values == 0.0)
    same = impose_dirichlet(f, f)
    assert np.array_equal(same.values, f.values)


def test_impose_dirichlet_entrywise(rng):
    g = Grid.box([0.0], [1.0], 4, trunc_radius=0.5)
    assert g.n_nodes == 8
    f = GridFunction(g, rng.standard_normal(8))
    d = GridFunction(g, rng.standard_normal(8))
    out = impose_dirichlet(f, d)
    for i in range(8):
        expected = f.values[i] if g.interior[i] else d.values[i]
        assert out.values[i] == expected


def test_project_nonneg():
    g = Grid.box([0.0], [1.0], 1, trunc_radius=1.0)
    assert g.n_nodes == 3
    f = GridFunction(g, [-1.0, 0.0, 2.0])
    assert list(project_nonneg(f).values) == [0.0, 0.0, 2.0]
    ok = GridFunction(g, [1.0, 0.0, 2.0])
    assert np.array_equal(project_nonneg(ok).values, ok.values)


@given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3))
def test_project_nonneg_matches_max(vals):
    g = Grid.box([0.0], [1.0], 1, trunc_radius=1.0)
    out = project_nonneg(GridFunction(g, vals))
    assert np.array_equal(out.values, [max(v, 0.0) for v in vals])


def test_lp_norm_values():
    g = Grid.box([0.0], [2.0], 4, trunc_radius=0.5)
    assert g.spacing == 0.5
    f = GridFunction(g, np.where(g.interior, 1.0, 7.0))
    assert lp_norm(f, 1) == pytest.approx(2.0)
    assert lp_norm(g.zeros(), 2) == 0.0
    with pytest.raises(ValueError):
        lp_norm(f, 0.5)


def test_lp_norm_matches_sum(rng, small_grid):
    v = rng.standard_normal(small_grid.n_nodes)
    f = GridFunction(small_grid, v)
    total = 0.0
    for i in range(small_grid.n_nodes):
        if small_grid.interior[i]:
            total += v[i] ** 2 * small_grid.spacing
    assert lp_norm(f, 2) == pytest.approx(total**0.5, rel=1e-14)
    assert lp_norm(f, 2, "all") == pytest.approx((np.sum(v**2) / 6) ** 0.5, rel=1e-14)


@settings(max_examples=50)
@given(st.floats(1.0, 6.0), st.integers(0, 10_000))
def test_lp_norm_triangle_inequality(p, seed):
    g = Grid.box([0.0], [1.0], 5, trunc_radius=0.4)
    r = np.random.default_rng(seed)
    a = GridFunction(g, r.standard_normal(g.n_nodes))
    b = GridFunction(g, r.standard_normal(g.n_nodes))
    s = GridFunction(g, a.values + b.values)
    assert lp_norm(s, p) <= lp_norm(a, p) + lp_norm(b, p) + 1e-12


def test_grid_mismatch(small_grid):
    other = Grid.box([0.0], [1.0], 8, trunc_radius=0.5)
    with pytest.raises(GridMismatchError):
        check_same_grid(small_grid.zeros(), other.zeros())
