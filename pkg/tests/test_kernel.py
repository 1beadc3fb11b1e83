import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import dense_pair_energy
from nonlocal_mm.grid import Grid, GridFunction
from nonlocal_mm.kernel import (
    Coefficient,
    DoublePhase,
    FractionalP,
    H_eval,
    LogType,
    NotDifferentiableError,
    PairQuadrature,
    VariableExp,
    dH_dxi,
    energy_subgradient,
    gagliardo_p,
    nonlocal_energy,
)

ALL_VARIANTS = [FractionalP(1.0, 2.0, 0.5), FractionalP(0.7, 3.0, 0.4), DoublePhase(2.0, 3.0, 0.5, 0.4),
                LogType(2.0, 0.5), VariableExp(0.5, 3.0, 0.5)]
DIFFERENTIABLE = [FractionalP(1.0, 1.5, 0.5), FractionalP(1.0, 2.0, 0.5), FractionalP(1.0, 3.0, 0.3),
                  DoublePhase(2.0, 3.0, 0.5, 0.4, Coefficient("bump", 1.0, (0.5,), 0.2))]

# reference energies of u = (1 + cos 3x) / 2 on the 6-cell grid with collar 0.5,
# produced by the ordered-pair loop in tests/_oracles.py
FROZEN_1D = {
    "fp2": (FractionalP(1.0, 2.0, 0.5), 1.9108192910560826),
    "fp3": (FractionalP(0.7, 3.0, 0.4), 0.8127540861595601),
    "dp": (DoublePhase(2.0, 3.0, 0.5, 0.4), 3.0718965569983117),
    "log": (LogType(2.0, 0.5), 1.0365819918951575),
}


def _cos_field(grid):
    return GridFunction(grid, 0.5 * (1 + np.cos(3 * grid.points[:, 0])))


def test_h_eval_values():
    assert H_eval(FractionalP(1, 2, 0.5), [0.0], [1.0], 2.0) == pytest.approx(4.0)
    dp = DoublePhase(2, 3, 0.5, 0.5)
    assert H_eval(dp, [0.0], [1.0], 1.0) == pytest.approx(2.0)
    for sf in ALL_VARIANTS:
        assert H_eval(sf, [0.0], [0.3], 0.0) == 0.0


def test_h_eval_rejects_diagonal():
    with pytest.raises(ValueError):
        H_eval(FractionalP(), [0.2], [0.2], 1.0)


def test_dh_values():
    assert dH_dxi(FractionalP(1, 2, 0.5), [0.0], [1.0], 3.0) == pytest.approx(6.0)
    assert dH_dxi(FractionalP(1, 2, 0.5), [0.0], [1.0], 0.0) == 0.0
    assert dH_dxi(FractionalP(1, 3, 0.5), [0.0], [1.0], 0.0) == 0.0
    for sf in (LogType(), VariableExp()):
        with pytest.raises(NotDifferentiableError):
            dH_dxi(sf, [0.0], [1.0], 1.0)


@pytest.mark.parametrize("sf", DIFFERENTIABLE)
def test_dh_matches_finite_difference(sf, rng):
    x = rng.uniform(0, 1, (50, 1))
    y = x + rng.uniform(0.05, 1, (50, 1))
    xi = rng.uniform(-3, 3, 50)
    d = 1e-6
    fd = (H_eval(sf, x, y, xi + d) - H_eval(sf, x, y, xi - d)) / (2 * d)
    assert np.allclose(dH_dxi(sf, x, y, xi), fd, rtol=1e-6, atol=1e-8)


def test_variable_exponent_is_frozen_below_e():
    sf = VariableExp(0.5, 3.0, 0.5)
    assert np.all(sf.exponent([0.5, 1.0, 2.7]) == 3.0)
    assert sf.exponent(100.0) == pytest.approx(3.0 + 0.5 * math.sin(math.log(math.log(100.0))))


def test_coefficient_is_symmetric(rng):
    c = Coefficient("bump", 1.0, (0.5,), 0.2)
    x = rng.uniform(0, 1, (20, 1))
    y = rng.uniform(0, 1, (20, 1))
    assert np.array_equal(c(x, y), c(y, x))
    ramp = Coefficient("ramp", 2.0, (0.5,), 0.1)
    assert np.all((ramp(x, y) >= 0) & (ramp(x, y) <= 2.0))


def test_two_node_energy_and_gradient(two_node_grid):
    pq = PairQuadrature(two_node_grid)
    u = GridFunction(two_node_grid, [0.0, 1.0])
    sf = FractionalP(1.0, 2.0, 0.5)
    assert nonlocal_energy(sf, u, pq) == pytest.approx(2.0)
    g = energy_subgradient(sf, u, pq)
    # d/du_0 of 2 (u_0 - u_1)^2 at (0, 1)
    assert g.values[0] == pytest.approx(-4.0)
    assert g.values[1] == 0.0


@pytest.mark.parametrize("key", sorted(FROZEN_1D))
def test_energy_matches_pair_loop(key, small_grid):
    sf, frozen = FROZEN_1D[key]
    pq = PairQuadrature(small_grid)
    assert nonlocal_energy(sf, _cos_field(small_grid), pq) == pytest.approx(frozen, rel=1e-12)


def test_energy_matches_pair_loop_live(small_grid, rng):
    u = rng.uniform(0, 2, small_grid.n_nodes)
    pts = [tuple(p) for p in small_grid.points]
    sf = FractionalP(1.3, 2.5, 0.3)
    ref = dense_pair_energy(pts, small_grid.interior, small_grid.spacing, 1, u,
                            lambda xi, r: 1.3 * abs(xi) ** 2.5 / r ** (2.5 * 0.3))
    got = nonlocal_energy(sf, GridFunction(small_grid, u), PairQuadrature(small_grid))
    assert got == pytest.approx(ref, rel=1e-12)


def test_energy_2d_matches_pair_loop():
    g = Grid.box([0.0, 0.0], [1.0, 1.0], 3, trunc_radius=0.4)
    u = GridFunction(g, g.points[:, 0] + 0.5 * g.points[:, 1] ** 2)
    assert nonlocal_energy(FractionalP(1, 2, 0.5), u, PairQuadrature(g)) == pytest.approx(4.609103495837896, rel=1e-12)


def test_energy_scaling_and_constants(small_grid):
    pq = PairQuadrature(small_grid)
    u = _cos_field(small_grid)
    sf = FractionalP(1, 2, 0.5)
    assert nonlocal_energy(sf, u.with_values(2 * u.values), pq) == pytest.approx(4 * nonlocal_energy(sf, u, pq), rel=1e-13)
    const = GridFunction(small_grid, np.full(small_grid.n_nodes, 0.7))
    for v in ALL_VARIANTS:
        assert nonlocal_energy(v, const, pq) == 0.0
    for v in DIFFERENTIABLE:
        assert np.all(energy_subgradient(v, const, pq).values == 0.0)


@pytest.mark.parametrize("sf", DIFFERENTIABLE)
def test_gradient_matches_finite_difference(sf, rng):
    g = Grid.box([0.0], [1.0], 16, trunc_radius=0.5)
    pq = PairQuadrature(g)
    op = pq.operator(sf)
    u = rng.uniform(0, 1, g.n_nodes)
    grad = op.gradient(u)
    d = 1e-6
    for i in g.interior_index[::3]:
        e = np.zeros(g.n_nodes)
        e[i] = d
        fd = (op.energy(u + e) - op.energy(u - e)) / (2 * d)
        assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-10)


def test_gagliardo_matches_fractional_energy(small_grid, rng):
    pq = PairQuadrature(small_grid)
    u = GridFunction(small_grid, rng.uniform(0, 1, small_grid.n_nodes))
    assert gagliardo_p(u, 0.4, 3.0, pq) == pytest.approx(nonlocal_energy(FractionalP(1, 3.0, 0.4), u, pq), rel=1e-14)
    const = GridFunction(small_grid, np.ones(small_grid.n_nodes))
    assert gagliardo_p(const, 0.4, 3.0, pq) == 0.0


def test_gagliardo_matches_pair_loop(small_grid, rng):
    u = rng.uniform(0, 1, small_grid.n_nodes)
    pts = [tuple(p) for p in small_grid.points]
    ref = dense_pair_energy(pts, small_grid.interior, small_grid.spacing, 1, u,
                            lambda xi, r: abs(xi) ** 1.5 / r ** (1.5 * 0.7))
    got = gagliardo_p(GridFunction(small_grid, u), 0.7, 1.5, PairQuadrature(small_grid))
    assert got == pytest.approx(ref, rel=1e-12)


def test_pair_set_structure(small_grid):
    pq = PairQuadrature(small_grid)
    n_in = small_grid.n_interior
    n_ex = small_grid.n_nodes - n_in
    assert pq.n_pairs == n_in * (n_in - 1) // 2 + n_in * n_ex
    assert np.all(small_grid.interior[pq.I])


def test_threaded_reductions_are_bitwise_equal(rng):
    g = Grid.box([0.0], [1.0], 128)
    assert PairQuadrature(g).n_pairs > 65536
    u = rng.uniform(0, 1, g.n_nodes)
    sf = DoublePhase(2.0, 3.0, 0.5, 0.4)
    one = PairQuadrature(g, threads=1).operator(sf)
    four = PairQuadrature(g, threads=4).operator(sf)
    assert one.energy(u) == four.energy(u)
    assert np.array_equal(one.gradient(u), four.gradient(u))


def test_node_energy_matches_full_energy(small_grid, rng):
    sf = LogType(2.0, 0.5)
    op = PairQuadrature(small_grid).operator(sf)
    u = rng.uniform(0, 1, small_grid.n_nodes)
    k = 2
    node = small_grid.interior_index[k]
    z = np.array([0.1, 0.9])
    base = op.energy(u) - op.node_energy(k, u[node], u)
    for zi, val in zip(z, op.node_energy(k, z, u)):
        w = u.copy()
        w[node] = zi
        assert op.energy(w) == pytest.approx(base + val, rel=1e-12)


def _pair_points():
    return st.tuples(st.floats(0.0, 1.0), st.floats(0.01, 1.0))


@settings(max_examples=200)
@given(_pair_points(), st.floats(-5, 5), st.floats(-5, 5), st.sampled_from(range(len(DIFFERENTIABLE))))
def test_convexity_bridge(xy, a, b, which):
    sf = DIFFERENTIABLE[which]
    x, off = xy
    X, Y = [x], [x + off]
    lhs = H_eval(sf, X, Y, b) - H_eval(sf, X, Y, a)
    rhs = dH_dxi(sf, X, Y, a) * (b - a)
    assert lhs >= rhs - 1e-9 * (1 + abs(lhs) + abs(rhs))


@settings(max_examples=200)
@given(st.floats(0.01, 2.0), st.floats(-8, 8), st.floats(-8, 8), st.floats(0, 1),
       st.sampled_from(range(len(ALL_VARIANTS))))
def test_h_convex_in_xi(r, a, b, t, which):
    sf = ALL_VARIANTS[which]
    X, Y = [0.0], [r]
    mid = H_eval(sf, X, Y, t * a + (1 - t) * b)
    chord = t * H_eval(sf, X, Y, a) + (1 - t) * H_eval(sf, X, Y, b)
    assert mid <= chord + 1e-10 * (1 + abs(chord))


@settings(max_examples=100)
@given(st.floats(0.01, 2.0), st.floats(-5, 5), st.sampled_from(range(len(ALL_VARIANTS))))
def test_h_even_and_nonnegative(r, xi, which):
    sf = ALL_VARIANTS[which]
    v = H_eval(sf, [0.0], [r], xi)
    assert v >= 0
    assert v == pytest.approx(H_eval(sf, [0.0], [r], -xi), rel=1e-14)
