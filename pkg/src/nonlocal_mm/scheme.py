"""The outer minimizing-movements loop and trajectory-level estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import SchemeConfig
from .grid import Grid, GridFunction
from .kernel import PairQuadrature, StructureFunction, nonlocal_energy
from .minimizer import SolverOptions, StepProblem, StepResult, minimality_audit, solve_step
from .orlicz import Nonlinearity, boundary_integral, orlicz_modular
from .reports import check_report


class StepNotConvergedError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Setup:
    """Domain objects built once from a config and shared by every step."""

    cfg: SchemeConfig
    grid: Grid
    pq: PairQuadrature
    sf: StructureFunction
    nl: Nonlinearity
    datum: GridFunction
    opts: SolverOptions

    @classmethod
    def from_config(cls, cfg: SchemeConfig) -> "Setup":
        grid = cfg.grid.build()
        return cls(cfg, grid, PairQuadrature(grid, cfg.threads), cfg.sf.build(),
                   cfg.nl.build(), cfg.datum.sample(grid), cfg.solver.build())


@dataclass(frozen=True)
class EnergyReport:
    step: int
    time: float
    energy: float
    boundary_increment: float
    modular: float
    sqrtphi_l2_increment: float
    solver_iters: int = 0
    grad_norm: float = 0.0
    converged: bool = True
    stop_reason: str = ""

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


CSV_COLUMNS = ("step", "time", "energy", "boundary_increment", "modular",
               "sqrtphi_l2_increment", "solver_iters", "grad_norm")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots ``u_0 .. u_k``; ``u(t) = u_i`` on ``((i-1)h, ih]``."""

    snapshots: tuple
    h: float
    reports: tuple
    setup: Setup
    steps: tuple = ()
    audits: tuple = ()
    startup: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.snapshots) - 1

    @property
    def T(self) -> float:
        return self.k * self.h

    @property
    def datum(self) -> GridFunction:
        return self.setup.datum

    @property
    def nl(self):
        return self.setup.nl

    @property
    def sf(self):
        return self.setup.sf

    @property
    def pq(self):
        return self.setup.pq

    @property
    def grid(self):
        return self.setup.grid

    def index_at(self, t: float) -> int:
        """Snapshot index active at time ``t`` (right-closed intervals, clamped)."""
        if t <= 0:
            return 0
        i = int(np.ceil(t / self.h - 1e-12))
        return min(max(i, 1), self.k)

    def values(self) -> np.ndarray:
        return np.stack([u.values for u in self.snapshots])


def _sqrtphi_increment(nl, a: GridFunction, b: GridFunction) -> float:
    d = np.sqrt(nl.phi(b.interior_values)) - np.sqrt(nl.phi(a.interior_values))
    return float(np.sum(d * d) * a.grid.cell_volume)


def make_report(setup: Setup, i: int, h: float, prev: GridFunction | None,
                u: GridFunction, res: StepResult | None = None) -> EnergyReport:
    nl = setup.nl
    energy = nonlocal_energy(setup.sf, u, setup.pq)
    if prev is None:
        inc = sq = 0.0
    else:
        inc = boundary_integral(nl, prev, u) / h
        sq = _sqrtphi_increment(nl, prev, u)
    return EnergyReport(
        i, i * h, energy, inc, orlicz_modular(nl, u), sq,
        res.iterations if res else 0, res.grad_norm if res else 0.0,
        res.converged if res else True, res.stop_reason if res else "",
    )


def datum_report(setup: Setup) -> dict:
    u0 = setup.datum
    e0 = nonlocal_energy(setup.sf, u0, setup.pq)
    mod = orlicz_modular(setup.nl, u0)
    ok = bool(np.all(u0.values >= 0) and np.isfinite(e0) and np.isfinite(mod))
    return {"nonnegative": bool(np.all(u0.values >= 0)), "energy": e0, "modular": mod, "finite": ok}


def trajectory_from_snapshots(setup: Setup, snaps, h: float, steps=(), audits=()) -> Trajectory:
    """Wrap given snapshots as a trajectory and fill its energy reports."""
    snaps = tuple(snaps)
    reports = [make_report(setup, 0, h, None, snaps[0])]
    for i in range(1, len(snaps)):
        res = steps[i - 1] if steps else None
        reports.append(make_report(setup, i, h, snaps[i - 1], snaps[i], res))
    return Trajectory(snaps, h, tuple(reports), setup, tuple(steps), tuple(audits), datum_report(setup))


def run_mm(cfg: SchemeConfig, strict: bool = True, audit: bool = True, seed: int = 0,
           setup: Setup | None = None, opts: SolverOptions | None = None) -> Trajectory:
    """Run ``k`` steps of size ``T/k`` from the datum.

    With ``audit`` each step's minimizer is compared against ``u_prev``, the
    datum and ``cfg.audit_competitors`` random admissible fields.
    """
    setup = setup or Setup.from_config(cfg)
    start = datum_report(setup)
    if not start["finite"]:
        raise ValueError(f"datum fails the startup checks: {start}")
    opts = opts or setup.opts
    h = cfg.h
    rng = np.random.default_rng(seed)
    u = setup.datum
    snaps = [u]
    steps, audits = [], []
    for i in range(1, cfg.k + 1):
        prob = StepProblem(setup.sf, setup.nl, u, setup.datum, h, setup.pq)
        res = solve_step(prob, opts)
        if strict and not res.converged:
            raise StepNotConvergedError(
                f"step {i} stopped after {res.iterations} iterations ({res.stop_reason}), "
                f"grad_norm={res.grad_norm:.3e}"
            )
        if audit:
            audits.append({"step": i, **minimality_audit(prob, res, rng, cfg.audit_competitors)})
        steps.append(res)
        u = res.u_next
        snaps.append(u)
    return trajectory_from_snapshots(setup, snaps, h, steps, audits)


def energy_decay_check(traj: Trajectory) -> dict:
    """Telescoped and per-step energy inequality with the boundary increments."""
    E = np.array([r.energy for r in traj.reports])
    inc = np.array([r.boundary_increment for r in traj.reports])
    e0 = E[0]
    tol = 1e-7 * (1.0 + e0)
    telescoped = e0 - (E[-1] + traj.h * np.sum(inc[1:]))
    per_step = E[:-1] - (E[1:] + traj.h * inc[1:]) if traj.k else np.zeros(0)
    worst_step = float(per_step.min()) if per_step.size else 0.0
    passed = telescoped >= -tol and worst_step >= -tol
    audits_ok = all(a["pass"] for a in traj.audits)
    return check_report(
        "energy_decay", {"k": traj.k, "h": traj.h, "tol": tol}, float(telescoped), passed and audits_ok,
        per_step_slack=per_step, worst_step_slack=worst_step, energy=E,
        minimality_audits_pass=audits_ok, n_audits=len(traj.audits),
    )


def continuity_check(traj: Trajectory, c_emp: float) -> dict:
    """Square-root time continuity and the modular sup bound.

    Continuity: ``sum_i |sqrt(phi(u_i)) - sqrt(phi(u_{i-1}))|^2 <= c sum_i B_i <= c h E(u_0)``
    with ``B_i`` the boundary integral between consecutive snapshots.

    Sup bound: by the triangle inequality and Cauchy-Schwarz over the first
    ``i`` increments, ``modular(u_i) <= 2 modular(u_0) + 2 c t_i E(u_0)``.
    """
    reps = traj.reports
    e0 = reps[0].energy
    mod0 = reps[0].modular
    sq = np.array([r.sqrtphi_l2_increment for r in reps[1:]])
    B = np.array([r.boundary_increment for r in reps[1:]]) * traj.h
    lhs = float(np.sum(sq))
    mid = c_emp * float(np.sum(B))
    rhs = c_emp * traj.h * e0
    tol = 1e-7 * (1.0 + abs(rhs))
    cont_ok = lhs <= mid + tol and mid <= rhs + tol
    mods = np.array([r.modular for r in reps])
    times = np.array([r.time for r in reps])
    bound = 2.0 * mod0 + 2.0 * c_emp * times * e0
    sup_slack = bound - mods
    sup_ok = bool(np.all(sup_slack >= -1e-9 * (1.0 + bound)))
    return check_report(
        "continuity", {"c_emp": c_emp, "h": traj.h, "k": traj.k}, float(rhs - lhs), cont_ok and sup_ok,
        sqrtphi_sum=lhs, c_times_boundary=mid, c_h_energy=rhs,
        continuity_pass=cont_ok, sup_pass=sup_ok, sup_bound=bound, modular=mods,
        max_modular=float(mods.max()), sup_bound_without_factor_two=c_emp * e0 * traj.T + 2.0 * mod0,
        sup_pass_without_factor_two=bool(mods.max() <= c_emp * e0 * traj.T + 2.0 * mod0),
    )


def piecewise_distance(fine: Trajectory, coarse: Trajectory, fn=None) -> float:
    """Time integral of ``sum_x |fn(u_fine(t)) - fn(u_coarse(t))| dx^N``, exact for piecewise constants.

    The coarse step must be an integer multiple of the fine step.
    """
    ratio = fine.k // coarse.k
    if coarse.k * ratio != fine.k:
        raise ValueError("step counts must divide each other")
    fn = fn or (lambda v: v)
    dv = fine.grid.cell_volume
    total = 0.0
    for j in range(1, fine.k + 1):
        i = (j - 1) // ratio + 1
        a = fn(fine.snapshots[j].interior_values)
        b = fn(coarse.snapshots[i].interior_values)
        total += fine.h * float(np.sum(np.abs(a - b))) * dv
    return total


def refinement_cauchy_study(cfg: SchemeConfig, k_list, audit: bool = False,
                            runs: dict | None = None) -> dict:
    """Distances between square-root trajectories of consecutive step counts.

    ``runs`` may map step counts to trajectories already computed; missing
    ones are added to it.
    """
    ks = [int(k) for k in k_list]
    if len(ks) < 2:
        raise ValueError("need at least two step counts")
    for a, b in zip(ks, ks[1:]):
        if b <= a or b % a:
            raise ValueError("k_list must be increasing with each entry dividing the next")
    setup = Setup.from_config(cfg)
    trajs = {} if runs is None else runs
    for k in ks:
        if k not in trajs:
            trajs[k] = run_mm(cfg.with_(k=k), audit=audit, setup=setup)
    nl = setup.nl
    root = lambda v: np.sqrt(nl.phi(v))  # noqa: E731
    dists = [piecewise_distance(trajs[b], trajs[a], root) for a, b in zip(ks, ks[1:])]
    decreasing = all(d2 < d1 for d1, d2 in zip(dists, dists[1:]))
    ratios = [d1 / d2 if d2 > 0 else float("inf") for d1, d2 in zip(dists, dists[1:])]
    const = all(d == 0 for d in dists)
    return check_report(
        "refinement_cauchy", {"k_list": ks}, dists[-1], decreasing or const,
        distances=dists, ratios=ratios, strictly_decreasing=decreasing,
    )
