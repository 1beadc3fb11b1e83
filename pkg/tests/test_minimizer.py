import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import linear_implicit_euler
from nonlocal_mm.grid import Grid, GridFunction
from nonlocal_mm.kernel import DoublePhase, FractionalP, LogType, PairQuadrature, VariableExp
from nonlocal_mm.minimizer import (
    AdmissibilityError,
    SolverOptions,
    StepProblem,
    first_variation_residual,
    minimality_audit,
    objective,
    random_competitors,
    solve_step,
)
from nonlocal_mm.orlicz import PowerLaw, boundary_integral

LINEAR = FractionalP(1.0, 2.0, 0.5)
IDENTITY = PowerLaw(1.0, 1.0)

# two implicit-Euler steps (h = 0.05) from the quartic bump on the 6-cell grid,
# from the dense normal-equation solve in tests/_oracles.py
FROZEN_EULER = [0.06473015662491595, 0.1088996330210302, 0.1576256044676685,
                0.15762560446766852, 0.10889963302103013, 0.06473015662491592]


def _bump(grid, width=0.3):
    x = grid.points[:, 0]
    return GridFunction(grid, np.maximum(1 - ((x - 0.5) / width) ** 2, 0.0) ** 2, nonnegative=True)


def _problem(grid, sf=LINEAR, nl=IDENTITY, h=0.05, u_prev=None, datum=None):
    datum = datum or _bump(grid)
    return StepProblem(sf, nl, u_prev or datum, datum, h, PairQuadrature(grid))


@pytest.fixture
def three_node_grid():
    # interior nodes at 0 and 1, exterior node at 2, unit spacing
    return Grid(1, 1.0, np.array([[0.0], [1.0], [2.0]]), np.array([True, True, False]), (-0.5,), (1.5,), 1.0)


def test_objective_at_previous_is_energy(small_grid):
    p = _problem(small_grid)
    assert objective(p, p.u_prev) == pytest.approx(p.pq.operator(LINEAR).energy(p.u_prev.values), rel=1e-15)


def test_objective_hand_value(three_node_grid):
    g = three_node_grid
    datum = GridFunction(g, [0.5, 0.5, 0.0])
    prev = GridFunction(g, [1.0, 0.0, 0.0])
    p = StepProblem(LINEAR, IDENTITY, prev, datum, 0.5, PairQuadrature(g))
    # pairs (0,1),(0,2),(1,2): 2 xi^2 / d^2 -> 0 + 0.125 + 0.5; boundary 0.25 / h
    assert objective(p, datum) == pytest.approx(0.625 + 0.5, rel=1e-14)


def test_halving_h_doubles_boundary_part(small_grid, rng):
    p1 = _problem(small_grid, h=0.1)
    p2 = _problem(small_grid, h=0.05)
    v = random_competitors(p1, p1.u_prev, 1, rng)[0]
    e = p1.pq.operator(LINEAR).energy(v.values)
    assert objective(p2, v) - e == pytest.approx(2 * (objective(p1, v) - e), rel=1e-13)


def test_admissibility_errors(small_grid):
    p = _problem(small_grid)
    bad = GridFunction(small_grid, np.where(small_grid.interior, -1.0, p.u_prev.values))
    with pytest.raises(AdmissibilityError):
        objective(p, bad)
    moved = GridFunction(small_grid, p.u_prev.values + 1.0)
    with pytest.raises(AdmissibilityError):
        objective(p, moved)


def test_problem_validation(small_grid):
    d = _bump(small_grid)
    shifted = GridFunction(small_grid, d.values + 1.0)
    with pytest.raises(ValueError):
        StepProblem(LINEAR, IDENTITY, shifted, d, 0.1, PairQuadrature(small_grid))
    with pytest.raises(ValueError):
        StepProblem(LINEAR, IDENTITY, d, d, 0.0, PairQuadrature(small_grid))


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(tol_grad=-1.0)
    with pytest.raises(ValueError):
        SolverOptions(step_rule="newton")


def test_linear_step_matches_frozen_euler(small_grid):
    datum = _bump(small_grid)
    u = datum
    for _ in range(2):
        res = solve_step(_problem(small_grid, u_prev=u, datum=datum))
        assert res.converged
        u = res.u_next
    got = u.interior_values
    ref = np.array(FROZEN_EULER)
    assert np.linalg.norm(got - ref) <= 1e-6 * np.linalg.norm(ref)


def test_linear_step_matches_live_oracle():
    g = Grid.box([0.0], [1.0], 20, trunc_radius=0.5)
    datum = _bump(g)
    pts = [tuple(x) for x in g.points]
    ref = linear_implicit_euler(pts, g.interior, g.spacing, 1, 1.0, 0.5, datum.values, 0.02, 3)
    u = datum
    for i in range(1, 4):
        u = solve_step(_problem(g, h=0.02, u_prev=u, datum=datum)).u_next
        assert np.linalg.norm(u.interior_values - ref[i]) <= 1e-6 * np.linalg.norm(ref[i])


def test_constant_datum_is_fixed_point(small_grid):
    c = GridFunction(small_grid, np.full(small_grid.n_nodes, 0.4), nonnegative=True)
    for sf in (LINEAR, LogType()):
        res = solve_step(_problem(small_grid, sf=sf, datum=c))
        assert res.converged
        assert np.allclose(res.u_next.values, 0.4, rtol=0, atol=1e-14)


def test_small_h_keeps_minimizer_near_previous(small_grid):
    prev = []
    for h in (1e-2, 1e-4):
        p = _problem(small_grid, h=h)
        res = solve_step(p)
        B = boundary_integral(p.nl, p.u_prev, res.u_next)
        assert B <= h * p.pq.operator(LINEAR).energy(p.u_prev.values) * (1 + 1e-8)
        prev.append(B)
    assert prev[1] < prev[0]


def test_history_is_nonincreasing(small_grid):
    for sf in (FractionalP(1.0, 3.0, 0.4), DoublePhase(2.0, 3.0, 0.5, 0.4), VariableExp()):
        res = solve_step(_problem(small_grid, sf=sf, nl=PowerLaw(1.0, 2.0)))
        assert np.all(np.diff(res.history) <= 0.0)


@pytest.mark.parametrize("sf", [FractionalP(1.0, 1.5, 0.5), DoublePhase(2.0, 3.0, 0.5, 0.4), LogType(2.0, 0.5),
                                VariableExp(0.5, 3.0, 0.5)],
                         ids=["fp1.5", "dp", "log", "varexp"])
def test_minimality_and_first_variation(sf, small_grid, rng):
    p = _problem(small_grid, sf=sf, nl=PowerLaw(1.0, 0.5))
    res = solve_step(p)
    assert res.converged
    audit = minimality_audit(p, res, rng)
    assert audit["pass"], audit
    scale = 1.0 + abs(res.objective)
    assert first_variation_residual(p, res.u_next, res.u_next) == 0.0
    assert first_variation_residual(p, res.u_next, p.u_prev) >= -1e-8 * scale
    for v in random_competitors(p, res.u_next, 100, rng):
        assert first_variation_residual(p, res.u_next, v) >= -1e-7 * scale


def test_competitors_are_admissible(small_grid, rng):
    p = _problem(small_grid)
    for v in random_competitors(p, p.u_prev, 10, rng):
        assert np.all(v.values >= 0)
        assert np.array_equal(v.exterior_values, p.datum.exterior_values)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_objective_convex_midpoint(seed, t):
    g = Grid.box([0.0], [1.0], 6, trunc_radius=0.5)
    p = _problem(g, sf=DoublePhase(2.0, 3.0, 0.5, 0.4), nl=PowerLaw(1.0, 2.0))
    r = np.random.default_rng(seed)
    a, b = random_competitors(p, p.u_prev, 2, r)
    mid = GridFunction(g, t * a.values + (1 - t) * b.values)
    lhs = objective(p, mid)
    rhs = t * objective(p, a) + (1 - t) * objective(p, b)
    assert lhs <= rhs + 1e-12 * (1 + abs(rhs))
