"""One minimizing-movements step.

Minimizes ``E(v) + (1/h) * bterm_integral[u_prev, v]`` over nonnegative ``v``
that agree with the datum outside the domain. Only interior values are free.
Differentiable structure functions use projected gradient descent with
monotone Armijo backtracking. The others use cyclic coordinate descent with a
golden-section search per node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._optim import golden_section_min
from .grid import GridFunction, check_same_grid
from .kernel import PairQuadrature, StructureFunction
from .orlicz import Nonlinearity, boundary_integral


# BB steps alternate large and tiny decreases, so the objective test compares
# the decrease over this many accepted iterations with the step's total progress
OBJ_WINDOW = 5


class SolverError(RuntimeError):
    """Non-finite objective or otherwise unrecoverable solver state."""


class AdmissibilityError(ValueError):
    """Competitor is negative inside the domain or departs from the datum outside."""


@dataclass(frozen=True)
class SolverOptions:
    tol_grad: float = 1e-8
    tol_obj: float = 1e-12
    max_iters: int = 20000
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    init_step: float = 1.0
    step_rule: str = "bb"
    cd_tol: float = 1e-11

    def __post_init__(self):
        if not self.tol_grad > 0 or not self.tol_obj >= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not self.init_step > 0:
            raise ValueError("init_step must be positive")
        if self.step_rule not in ("bb", "fixed"):
            raise ValueError("step_rule must be 'bb' or 'fixed'")


@dataclass(frozen=True, eq=False)
class StepProblem:
    sf: StructureFunction
    nl: Nonlinearity
    u_prev: GridFunction
    datum: GridFunction
    h: float
    pq: PairQuadrature

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("time step h must be positive")
        grid = check_same_grid(self.u_prev, self.datum)
        if not grid.same_as(self.pq.grid):
            raise ValueError("pair quadrature built on a different grid")
        if np.any(self.u_prev.values < 0) or np.any(self.datum.values < 0):
            raise ValueError("u_prev and datum must be nonnegative")
        if not np.array_equal(self.u_prev.exterior_values, self.datum.exterior_values):
            raise ValueError("u_prev must agree with the datum outside the domain")

    @property
    def grid(self):
        return self.u_prev.grid

    def full(self, x: np.ndarray) -> np.ndarray:
        vals = self.datum.values.copy()
        vals[self.grid.interior] = x
        return vals


@dataclass(frozen=True, eq=False)
class StepResult:
    u_next: GridFunction
    objective: float
    iterations: int
    converged: bool
    grad_norm: float
    stop_reason: str = ""
    history: tuple = field(default=(), repr=False)


def check_admissible(p: StepProblem, v: GridFunction) -> None:
    check_same_grid(v, p.datum)
    if np.any(v.interior_values < 0):
        raise AdmissibilityError("competitor is negative inside the domain")
    if not np.array_equal(v.exterior_values, p.datum.exterior_values):
        raise AdmissibilityError("competitor departs from the datum outside the domain")


def objective(p: StepProblem, v: GridFunction) -> float:
    check_admissible(p, v)
    return p.pq.operator(p.sf).energy(v.values) + boundary_integral(p.nl, p.u_prev, v) / p.h


class _Objective:
    """Objective and gradient in the interior unknowns only."""

    def __init__(self, p: StepProblem):
        self.p = p
        self.op = p.pq.operator(p.sf)
        self.w = p.grid.cell_volume / p.h
        self.prev = p.u_prev.interior_values
        self.b_prev = p.nl.b(self.prev)
        self.phi_prev = p.nl.phi(self.prev)

    def gap(self, x):
        nl = self.p.nl
        return np.maximum(nl.phi(x) - self.phi_prev - self.b_prev * (x - self.prev), 0.0)

    def value(self, x):
        val = self.op.energy(self.p.full(x)) + self.w * np.sum(self.gap(x))
        if not np.isfinite(val):
            raise SolverError(f"non-finite objective {val!r}")
        return float(val)

    def grad(self, x):
        g = self.op.gradient(self.p.full(x))[self.p.grid.interior]
        return g + self.w * (self.p.nl.b(x) - self.b_prev)


def _proj_grad_norm(x, g):
    return float(np.max(np.abs(x - np.maximum(x - g, 0.0)))) if x.size else 0.0


def _projected_gradient(p: StepProblem, opts: SolverOptions) -> StepResult:
    f = _Objective(p)
    x = p.u_prev.interior_values.copy()
    fx = f.value(x)
    g = f.grad(x)
    pg0 = _proj_grad_norm(x, g)
    history = [fx]
    pg = pg0
    step = opts.init_step
    reason = "max_iters"
    converged = False
    it = 0
    if pg0 == 0.0:
        reason, converged = "stationary_start", True
    while not converged and it < opts.max_iters:
        it += 1
        alpha = step
        accepted = False
        for _ in range(200):
            x_new = np.maximum(x - alpha * g, 0.0)
            d = x_new - x
            f_new = f.value(x_new)
            if f_new <= fx + opts.armijo_c * float(g @ d):
                accepted = True
                break
            alpha *= opts.backtrack_factor
        if not accepted or not np.any(d):
            # no representable decrease left along the projected arc
            reason, converged = "no_decrease", True
            break
        g_new = f.grad(x_new)
        if opts.step_rule == "bb":
            y = g_new - g
            sy = float(d @ y)
            step = float(d @ d) / sy if sy > 0 else opts.init_step
            step = min(max(step, 1e-20), 1e20)
        x, fx, g = x_new, f_new, g_new
        history.append(fx)
        pg = _proj_grad_norm(x, g)
        if pg <= opts.tol_grad * pg0:
            reason, converged = "tol_grad", True
        elif len(history) > OBJ_WINDOW and (
            history[-OBJ_WINDOW - 1] - fx <= opts.tol_obj * (history[0] - fx)
        ):
            reason, converged = "tol_obj", True
    u_next = GridFunction(p.grid, p.full(x), nonnegative=True)
    return StepResult(u_next, fx, it, converged, pg, reason, tuple(history))


def _coordinate_descent(p: StepProblem, opts: SolverOptions) -> StepResult:
    f = _Objective(p)
    op = f.op
    nl = p.nl
    idx = p.grid.interior_index
    u = p.u_prev.values.copy()
    fx = f.value(u[idx])
    history = [fx]
    move0 = None
    move = 0.0
    reason = "max_iters"
    converged = False
    it = 0
    while it < opts.max_iters:
        it += 1
        move = 0.0
        for k, node in enumerate(idx):
            up, bp, phip = f.prev[k], f.b_prev[k], f.phi_prev[k]

            def local(z, k=k, up=up, bp=bp, phip=phip):
                gap = np.maximum(nl.phi(z) - phip - bp * (z - up), 0.0)
                return op.node_energy(k, z, u) + f.w * gap

            z0 = u[node]
            others = np.delete(u, node)
            lo = max(0.0, min(others.min(), up))
            hi = max(others.max(), up)
            z, fz = golden_section_min(local, lo, hi, tol=opts.cd_tol)
            if fz < local(z0):
                u[node] = z
                move = max(move, abs(z - z0))
        f_new = f.value(u[idx])
        if not f_new <= fx + 1e-14 * max(1.0, abs(fx)):
            raise SolverError("coordinate sweep increased the objective")
        decrease = fx - f_new
        fx = min(fx, f_new)
        history.append(fx)
        if move0 is None:
            move0 = move
        if move == 0.0 or move <= opts.tol_grad * move0:
            reason, converged = "tol_step", True
            break
        if decrease <= opts.tol_obj * (history[0] - fx):
            reason, converged = "tol_obj", True
            break
    u_next = GridFunction(p.grid, u, nonnegative=True)
    return StepResult(u_next, fx, it, converged, move, reason, tuple(history))


def solve_step(p: StepProblem, opts: SolverOptions | None = None) -> StepResult:
    opts = opts or SolverOptions()
    if p.sf.differentiable:
        return _projected_gradient(p, opts)
    return _coordinate_descent(p, opts)


def first_variation_residual(p: StepProblem, u_star: GridFunction, v: GridFunction) -> float:
    """Convexity residual of the step's necessary condition at ``u_star``.

    ``R(v) = E(v) - E(u*) + (1/h) sum (b(u*) - b(u_prev)) (v - u*) dx^N``.
    The bracket is the gradient of the boundary integral at ``u*``, so for
    an exact minimizer ``R(v) >= 0`` for every admissible ``v``.
    """
    check_admissible(p, v)
    check_admissible(p, u_star)
    op = p.pq.operator(p.sf)
    us, vv = u_star.interior_values, v.interior_values
    pull = np.sum((p.nl.b(us) - p.nl.b(p.u_prev.interior_values)) * (vv - us))
    return float(op.energy(v.values) - op.energy(u_star.values) + pull * p.grid.cell_volume / p.h)


def random_competitors(p: StepProblem, center: GridFunction, n: int, rng: np.random.Generator):
    """Admissible fields ``max(center + delta, 0)`` with delta at several amplitudes."""
    base = center.interior_values
    scale = max(float(np.max(np.abs(base))), float(np.max(p.datum.values)), 1e-3)
    amps = np.geomspace(1e-4, 1.0, n) * scale
    out = []
    for a in amps:
        x = np.maximum(base + a * rng.standard_normal(base.shape), 0.0)
        out.append(GridFunction(p.grid, p.full(x), nonnegative=True))
    return out


def minimality_audit(p: StepProblem, result: StepResult, rng: np.random.Generator,
                     n_random: int = 20, rel_tol: float = 1e-8) -> dict:
    """Compare the step's minimizer against ``u_prev``, the datum and random competitors."""
    comps = [("u_prev", p.u_prev), ("datum", p.datum)]
    comps += [(f"random_{i}", v) for i, v in enumerate(random_competitors(p, result.u_next, n_random, rng))]
    f_star = objective(p, result.u_next)
    tol = rel_tol * (1.0 + abs(f_star))
    worst = np.inf
    worst_name = None
    for name, v in comps:
        slack = objective(p, v) - f_star
        if slack < worst:
            worst, worst_name = slack, name
    return {"objective": f_star, "competitors": len(comps), "worst_slack": float(worst),
            "worst_competitor": worst_name, "tol": tol, "pass": bool(worst >= -tol)}
