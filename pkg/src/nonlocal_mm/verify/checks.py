"""Trajectory audits: variational inequalities, weak forms, integration by parts,
initial-datum attainment, coercivity and the time-mollifier properties.

Each check returns a JSON-ready block (see ``reports.check_report``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from ..grid import GridFunction
from ..kernel import DoublePhase, FractionalP, LogType, PairQuadrature, VariableExp
from ..minimizer import StepProblem, first_variation_residual, random_competitors
from ..orlicz import lemma_suite
from ..reports import check_report
from .timefields import (
    ConstantField,
    MollifiedField,
    MollifierState,
    PiecewiseConstantField,
    ShiftedField,
    gauss_cells,
    merged_edges,
)

VI_TOL = 1e-6
IBP_TOL = 1e-9


def quartic_bump(x, center, width):
    """Product over axes of ``(1 - ((x - c) / w)^2)^2`` on its support, zero elsewhere."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    c = np.broadcast_to(np.asarray(center, dtype=float), (x.shape[1],))
    s = (x - c) / width
    return np.prod(np.where(np.abs(s) < 1, (1 - s * s) ** 2, 0.0), axis=1)


def quartic_bump_integral(a, b, center, width):
    """Exact ``int_a^b`` of the 1D quartic bump."""
    def prim(t):
        s = np.clip((t - center) / width, -1.0, 1.0)
        return width * (s - 2 * s**3 / 3 + s**5 / 5)
    return prim(b) - prim(a)


def trajectory_field(traj) -> PiecewiseConstantField:
    return PiecewiseConstantField(traj.values(), traj.h)


def _interior_direction(grid, center, width):
    psi = quartic_bump(grid.points, center, width)
    psi[~grid.interior] = 0.0
    return psi


# --- comparison maps --------------------------------------------------------

@dataclass(frozen=True)
class ConstantInTime:
    """The datum (or another admissible field) held fixed in time."""

    field: GridFunction | None = None

    def realize(self, traj):
        f = traj.datum if self.field is None else self.field
        return ConstantField(np.asarray(f.values, dtype=float))

    def describe(self):
        return {"kind": "constant_in_time", "field": "datum" if self.field is None else "custom"}


@dataclass(frozen=True)
class MollifiedSolution:
    """The trajectory mollified in time, started from the datum."""

    h_moll: float

    def realize(self, traj):
        return MollifiedField(trajectory_field(traj), MollifierState(self.h_moll, traj.datum))

    def describe(self):
        return {"kind": "mollified_solution", "h_moll": self.h_moll}


@dataclass(frozen=True)
class Perturbation:
    """Mollified trajectory plus a nonnegative interior bump.

    ``center`` is given as a fraction of the domain box along every axis and
    ``width`` is a fraction of the first side length.
    """

    h_moll: float
    center: float
    width: float
    amplitude: float
    rate: float = 0.0

    def direction(self, grid):
        lo = np.asarray(grid.lower)
        hi = np.asarray(grid.upper)
        c = lo + self.center * (hi - lo)
        return _interior_direction(grid, c, self.width * (hi[0] - lo[0]))

    def realize(self, traj):
        base = MollifiedField(trajectory_field(traj), MollifierState(self.h_moll, traj.datum))
        return ShiftedField(base, self.direction(traj.grid), self.amplitude, self.rate)

    def describe(self):
        return {"kind": "perturbation", "h_moll": self.h_moll, "center": self.center,
                "width": self.width, "amplitude": self.amplitude, "rate": self.rate}


@dataclass(frozen=True)
class SmoothInTime:
    """Datum plus a bump growing linearly in time; defined for every ``t >= -T``."""

    center: float = 0.5
    width: float = 0.2
    amplitude: float = 0.25

    def realize(self, traj):
        p = Perturbation(traj.T, self.center, self.width, self.amplitude)
        base = ConstantField(np.asarray(traj.datum.values, dtype=float))
        return ShiftedField(base, p.direction(traj.grid), self.amplitude, 1.0 / traj.T)

    def describe(self):
        return {"kind": "smooth_in_time", "center": self.center, "width": self.width,
                "amplitude": self.amplitude}


def _check_admissible(traj, field, times):
    ext = ~traj.grid.interior
    d = traj.datum.values[ext]
    for t in times:
        v = field.at(t)
        if np.any(v < -1e-14):
            raise ValueError(f"comparison map negative at t={t}")
        if not np.allclose(v[ext], d, rtol=0, atol=1e-14):
            raise ValueError(f"comparison map departs from the datum outside the domain at t={t}")


def comparison_registry(traj) -> list:
    """Fixed audit set: the datum, two self-mollifications and five bump perturbations."""
    T = traj.T
    amp = 0.25 * max(float(np.max(traj.datum.values)), 0.4)
    maps = [("constant_datum", ConstantInTime()),
            ("mollified_T/4", MollifiedSolution(T / 4)),
            ("mollified_T/16", MollifiedSolution(T / 16))]
    for i, c in enumerate((0.5, 0.3, 0.7, 0.4, 0.6)):
        maps.append((f"bump_{i}", Perturbation(T / 4, c, 0.2, amp)))
    return maps


# --- variational inequalities -----------------------------------------------

def _vi_terms(traj, cmap, sub=2, weak=False):
    """Cumulative terms of the variational inequality at every ``tau = i h``."""
    field = cmap.realize(traj)
    T, h, k = traj.T, traj.h, traj.k
    edges = merged_edges(h * np.arange(k + 1), field.breakpoints, lo=0.0, hi=T)
    _check_admissible(traj, field, edges)
    nl = traj.nl
    grid = traj.grid
    inside = grid.interior
    dv = grid.cell_volume
    op = traj.pq.operator(traj.sf)
    snaps = traj.values()
    e_u = np.array([r.energy for r in traj.reports])
    mids = 0.5 * (edges[:-1] + edges[1:])
    owner = np.array([traj.index_at(m) for m in mids])

    time_term = np.zeros(len(mids))
    for c, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        va, vb = field.at(a)[inside], field.at(b)[inside]
        bu = nl.b(snaps[owner[c]][inside])
        time_term[c] = np.sum(nl.phi(vb) - nl.phi(va) - bu * (vb - va)) * dv
    e_v = gauss_cells(lambda t: op.energy(field.at(t)), edges, sub)
    e_uc = e_u[owner] * np.diff(edges)
    grad_term = None
    if weak:
        grads = {j: op.gradient(snaps[j]) for j in set(owner.tolist())}
        v_int = gauss_cells(lambda t: field.at(t), edges, sub)
        grad_term = np.array([
            float(grads[owner[c]] @ (v_int[c] - (edges[c + 1] - edges[c]) * snaps[owner[c]]))
            for c in range(len(mids))
        ])

    taus = h * np.arange(1, k + 1)
    cum = lambda arr: np.array([arr[edges[1:] <= tau + 1e-12 * T].sum() for tau in taus])  # noqa: E731
    out = {"tau": taus, "time": cum(time_term), "energy_v": cum(e_v), "energy_u": cum(e_uc)}
    if weak:
        out["grad"] = cum(grad_term)
    v0 = field.at(0.0)[inside]
    u0 = snaps[0][inside]
    b0 = np.sum(_bterm(nl, u0, v0)) * dv
    out["rhs"] = np.array([
        np.sum(_bterm(nl, snaps[i][inside], field.at(tau)[inside])) * dv - b0
        for i, tau in zip(range(1, k + 1), taus)
    ])
    return out


def _bterm(nl, u, v):
    return np.maximum(nl.phi(v) - nl.phi(u) - nl.b(u) * (v - u), 0.0)


def _tau_index(traj, tau):
    i = int(round(tau / traj.h))
    if i < 1 or i > traj.k or abs(i * traj.h - tau) > 1e-9 * traj.T:
        raise ValueError(f"tau={tau} is not a step time i*h of the trajectory")
    return i - 1


def vi_residuals(traj, cmap, sub=2) -> dict:
    """Residual ``LHS - RHS`` of the variational inequality at every step time."""
    t = _vi_terms(traj, cmap, sub)
    lhs = t["time"] + t["energy_v"] - t["energy_u"]
    res = lhs - t["rhs"]
    scale = 1.0 + np.abs(lhs) + np.abs(t["rhs"])
    return {"tau": t["tau"], "lhs": lhs, "rhs": t["rhs"], "residual": res, "scale": scale}


def variational_inequality_residual(traj, v, tau: float) -> float:
    return float(vi_residuals(traj, v)["residual"][_tau_index(traj, tau)])


def _require_differentiable(traj):
    if not traj.sf.differentiable:
        raise TypeError(f"{type(traj.sf).__name__} is not differentiable; weak forms need a derivative")


def weak_vi_residuals(traj, cmap, sub=2) -> dict:
    _require_differentiable(traj)
    t = _vi_terms(traj, cmap, sub, weak=True)
    lhs = t["grad"] + t["time"]
    res = lhs - t["rhs"]
    vi_lhs = t["time"] + t["energy_v"] - t["energy_u"]
    scale = 1.0 + np.abs(lhs) + np.abs(t["rhs"])
    return {"tau": t["tau"], "lhs": lhs, "rhs": t["rhs"], "residual": res, "scale": scale,
            "vi_residual": vi_lhs - t["rhs"]}


def weak_variational_inequality_check(traj, v, tau: float) -> float:
    return float(weak_vi_residuals(traj, v)["residual"][_tau_index(traj, tau)])


def vi_audit(traj, registry=None, tol=VI_TOL) -> dict:
    """Variational-inequality residuals for every map in the registry and every step time."""
    registry = registry or comparison_registry(traj)
    rows = []
    worst = np.inf
    ok = True
    for name, cmap in registry:
        r = vi_residuals(traj, cmap)
        norm = r["residual"] / r["scale"]
        w = float(norm.min())
        passed = bool(np.all(r["residual"] >= -tol * r["scale"]))
        ok &= passed
        worst = min(worst, w)
        rows.append({"map": name, "spec": cmap.describe(), "worst_scaled_residual": w, "pass": passed,
                     "residual": r["residual"], "scale": r["scale"]})
    return check_report("variational_inequality", {"tol": tol, "maps": len(rows)}, worst, ok, maps=rows)


def weak_vi_audit(traj, registry=None, tol=VI_TOL) -> dict:
    """Weak-form inequality per map, plus the convexity bridge to the energy form."""
    _require_differentiable(traj)
    registry = registry or comparison_registry(traj)
    rows = []
    worst = np.inf
    ok = True
    bridge_ok = True
    for name, cmap in registry:
        r = weak_vi_residuals(traj, cmap)
        norm = r["residual"] / r["scale"]
        passed = bool(np.all(r["residual"] >= -tol * r["scale"]))
        bridge = bool(np.all(r["residual"] <= r["vi_residual"] + tol * r["scale"]))
        ok &= passed
        bridge_ok &= bridge
        worst = min(worst, float(norm.min()))
        rows.append({"map": name, "worst_scaled_residual": float(norm.min()), "pass": passed,
                     "bridge": bridge, "residual": r["residual"], "vi_residual": r["vi_residual"]})
    return check_report("weak_variational_inequality", {"tol": tol}, worst, ok and bridge_ok,
                        bridge_pass=bridge_ok, maps=rows)


def first_variation_check(traj, n_random: int = 20, seed: int = 0, tol: float = 1e-7) -> dict:
    """Per-step first-variation residual against ``u_prev`` and random admissible fields."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    rows = []
    for i in range(1, traj.k + 1):
        p = StepProblem(traj.sf, traj.nl, traj.snapshots[i - 1], traj.datum, traj.h, traj.pq)
        u = traj.snapshots[i]
        # magnitude of the step objective E(u_i) + B(u_{i-1}, u_i) / h
        scale = 1.0 + traj.reports[i].energy + traj.reports[i].boundary_increment
        vals = [first_variation_residual(p, u, p.u_prev)]
        vals += [first_variation_residual(p, u, v) for v in random_competitors(p, u, n_random, rng)]
        w = min(vals) / scale
        worst = min(worst, w)
        rows.append({"step": i, "worst_scaled_residual": w})
    return check_report("first_variation", {"n_random": n_random, "tol": tol}, worst, worst >= -tol, steps=rows)


# --- distributional identity ------------------------------------------------

@dataclass(frozen=True)
class SpaceTimeBump:
    """Quartic bump in space (fractions of the box) times a quartic bump in time (fractions of T)."""

    x_center: float
    x_width: float
    t_center: float
    t_width: float

    def space(self, grid):
        lo = np.asarray(grid.lower)
        hi = np.asarray(grid.upper)
        return _interior_direction(grid, lo + self.x_center * (hi - lo), self.x_width * (hi[0] - lo[0]))


BUMP_REGISTRY = (
    SpaceTimeBump(0.5, 0.2, 0.5, 0.3),
    SpaceTimeBump(0.3, 0.2, 0.4, 0.3),
    SpaceTimeBump(0.7, 0.2, 0.6, 0.3),
    SpaceTimeBump(0.4, 0.2, 0.45, 0.3),
    SpaceTimeBump(0.6, 0.2, 0.55, 0.3),
)


def weak_form_residual(traj, psi: SpaceTimeBump | None) -> float:
    """Absolute residual of ``int -b(u) dpsi/dt + int <DE(u), psi>`` for a space-time bump.

    Both time integrals are exact: ``u`` is constant per step and the time
    profile of the bump is a polynomial with a closed-form primitive.
    """
    if traj.nl.l < 1:
        raise ValueError("the distributional identity needs a nonlinearity with l >= 1")
    if not isinstance(traj.sf, (FractionalP, DoublePhase)):
        raise TypeError("the distributional identity needs p-growth from above (fractional_p or double_phase)")
    if psi is None:
        return 0.0
    T, h = traj.T, traj.h
    tc, tw = psi.t_center * T, psi.t_width * T
    if tc - tw < 0 or tc + tw > T:
        raise ValueError("time bump must vanish near t = 0 and t = T")
    grid = traj.grid
    space = psi.space(grid)
    op = traj.pq.operator(traj.sf)
    nl = traj.nl
    inside = grid.interior
    total = 0.0
    for j in range(1, traj.k + 1):
        a, b = (j - 1) * h, j * h
        u = traj.snapshots[j].values
        pa, pb = quartic_bump(np.array([[a]]), tc, tw)[0], quartic_bump(np.array([[b]]), tc, tw)[0]
        time_part = -np.sum(nl.b(u[inside]) * space[inside]) * grid.cell_volume * (pb - pa)
        space_part = float(op.gradient(u) @ space) * quartic_bump_integral(a, b, tc, tw)
        total += time_part + space_part
    return abs(float(total))


def weak_form_report(traj, registry=BUMP_REGISTRY) -> dict:
    vals = [weak_form_residual(traj, psi) for psi in registry]
    return check_report("weak_form_residual", {"k": traj.k, "nodes": traj.grid.n_interior},
                        float(sum(vals)), True, per_bump=vals)


def weak_form_ladder(runs, min_ratio=1.5) -> dict:
    """Aggregate weak-form residuals along a ladder of refined runs (coarse first)."""
    agg = [sum(weak_form_residual(t, psi) for psi in BUMP_REGISTRY) for t in runs]
    ratios = [a / b if b > 0 else float("inf") for a, b in zip(agg, agg[1:])]
    ok = all(r >= min_ratio for r in ratios)
    return check_report("weak_form_ladder", {"min_ratio": min_ratio,
                                             "k": [t.k for t in runs],
                                             "nodes": [t.grid.n_interior for t in runs]},
                        min(ratios) if ratios else float("inf"), ok, residuals=agg, ratios=ratios)


# --- discrete integration by parts ------------------------------------------

def discrete_ibp_terms(traj, cmap, h_shift: float, sub=2) -> dict:
    """Every term of the shifted-difference integration-by-parts inequality.

    ``u`` equals the datum for ``t <= 0``; the comparison map must be defined
    on ``(-h_shift, T + h_shift)``.
    """
    T = traj.T
    hs = float(h_shift)
    if not 0 < hs <= T:
        raise ValueError("h_shift must lie in (0, T]")
    field = cmap.realize(traj)
    if isinstance(field.base if isinstance(field, ShiftedField) else field, MollifiedField):
        raise ValueError("comparison map is not defined before t = 0; use a map with padding")
    src = trajectory_field(traj)
    nl = traj.nl
    grid = traj.grid
    inside = grid.interior
    dv = grid.cell_volume
    nodes = traj.h * np.arange(traj.k + 1)
    edges = merged_edges(nodes, nodes + hs, nodes - hs, [T - hs, -hs], lo=-hs, hi=T)
    _check_admissible(traj, field, np.concatenate([edges, edges + hs]))

    def u(t):
        return src.at(t)[inside]

    def v(t):
        return field.at(t)[inside]

    def lhs_integrand(t):
        return np.sum((nl.b(u(t)) - nl.b(u(t - hs))) / hs * (v(t) - u(t))) * dv

    def r1(t):
        return np.sum((v(t + hs) - v(t)) / hs * (nl.b(v(t)) - nl.b(u(t)))) * dv

    def r2(t):
        return -np.sum(_bterm(nl, u(t), v(t + hs))) * dv / hs

    def r3(t):
        return np.sum(_bterm(nl, u(t), v(t))) * dv / hs

    def d1(t):
        return np.sum(_bterm(nl, v(t), v(t + hs))) * dv / hs

    def d2(t):
        return np.sum((v(t + hs) - v(t)) / hs * (nl.b(v(t + hs)) - nl.b(u(t)))) * dv

    def over(fn, lo, hi):
        sel = edges[(edges >= lo - 1e-14) & (edges <= hi + 1e-14)]
        return float(np.sum(gauss_cells(fn, sel, sub)))

    terms = {
        "lhs": over(lhs_integrand, 0.0, T),
        "r_main": over(r1, 0.0, T),
        "r_end": over(r2, T - hs, T),
        "r_start": over(r3, -hs, 0.0),
        "delta1": over(d1, 0.0, T),
        "delta2": over(d2, -hs, 0.0),
    }
    rhs = terms["r_main"] + terms["r_end"] + terms["r_start"] + terms["delta1"] + terms["delta2"]
    terms["rhs"] = rhs
    terms["slack"] = rhs - terms["lhs"]
    terms["scale"] = 1.0 + sum(abs(terms[k]) for k in ("lhs", "r_main", "r_end", "r_start", "delta1", "delta2"))
    return terms


def discrete_ibp_check(traj, v, h_shift: float) -> dict:
    t = discrete_ibp_terms(traj, v, h_shift)
    ok = t["slack"] >= -IBP_TOL * t["scale"]
    return check_report("discrete_ibp", {"h_shift": h_shift, "map": v.describe()}, t["slack"], ok, **t)


def discrete_ibp_ladder(traj, v=None, shifts=None) -> dict:
    """Inequality slack and the two correction terms along a dyadic ladder of shifts."""
    v = v or SmoothInTime()
    T = traj.T
    shifts = shifts or [T / 8, T / 16, T / 32]
    rows = [discrete_ibp_terms(traj, v, s) for s in shifts]
    slack_ok = all(r["slack"] >= -IBP_TOL * r["scale"] for r in rows)
    d1 = [abs(r["delta1"]) for r in rows]
    d2 = [abs(r["delta2"]) for r in rows]
    dec1 = all(b < a for a, b in zip(d1, d1[1:]))
    dec2 = all(b < a for a, b in zip(d2, d2[1:]))
    worst = min(r["slack"] / r["scale"] for r in rows)
    return check_report("discrete_ibp_ladder", {"shifts": shifts, "map": v.describe()}, worst,
                        slack_ok and dec1 and dec2, slack_pass=slack_ok, delta1=d1, delta2=d2,
                        delta1_decreasing=dec1, delta2_decreasing=dec2, rows=rows)


# --- initial datum ----------------------------------------------------------

def initial_condition_check(traj, reference: GridFunction | None = None, c_emp: float | None = None) -> dict:
    """Boundary-integral distance to the datum against the linear envelope ``tau E(u_0)``.

    ``reference`` replaces the datum in both the distance and the envelope; a
    wrong reference is the negative control. The second curve is the
    Cauchy-Schwarz bound on the L1 distance of the primitives.
    """
    nl = traj.nl
    grid = traj.grid
    inside = grid.interior
    dv = grid.cell_volume
    ref = traj.datum if reference is None else reference
    r = ref.values[inside]
    e_ref = traj.pq.operator(traj.sf).energy(ref.values)
    c = c_emp if c_emp is not None else lemma_suite(nl)["c_emp"]
    taus, dist, env, l1, l1_bound = [], [], [], [], []
    ok = True
    for i in range(1, traj.k + 1):
        tau = i * traj.h
        u = traj.snapshots[i].values[inside]
        B = float(np.sum(_bterm(nl, u, r)) * dv)
        bound = tau * e_ref * (1 + 1e-6)
        ok &= B <= bound
        pu, pr = nl.phi(u), nl.phi(r)
        d = float(np.sum(np.abs(pu - pr)) * dv)
        # |phi(a) - phi(b)| = |sqrt a - sqrt b| (sqrt a + sqrt b), then Cauchy-Schwarz and the chain lemma
        cs = math.sqrt(c * B) * math.sqrt(float(np.sum((np.sqrt(pu) + np.sqrt(pr)) ** 2) * dv))
        ok &= d <= cs * (1 + 1e-9) + 1e-15
        taus.append(tau)
        dist.append(B)
        env.append(tau * e_ref)
        l1.append(d)
        l1_bound.append(cs)
    worst = min((e - b for e, b in zip(env, dist)), default=0.0)
    return check_report("initial_condition", {"reference": "datum" if reference is None else "custom",
                                              "c_emp": c}, worst, ok,
                        tau=taus, boundary_distance=dist, envelope=env, l1_distance=l1, l1_bound=l1_bound)


# --- coercivity -------------------------------------------------------------

_POINCARE_CACHE: dict = {}


def poincare_constant(pq: PairQuadrature, s: float, p: float, seed: int = 0) -> float:
    """Largest ``||w||_p^p / [w]^p`` over fields vanishing outside the domain.

    Exact generalized eigenvalue for ``p = 2``; otherwise the best of several
    local maximizations started from smooth and random fields.
    """
    key = (id(pq), s, p)
    if key in _POINCARE_CACHE:
        return _POINCARE_CACHE[key]
    grid = pq.grid
    idx = grid.interior_index
    n = idx.size
    pos = -np.ones(grid.n_nodes, dtype=np.int64)
    pos[idx] = np.arange(n)
    dv = grid.cell_volume
    kpair = pq.weight * pq.dist ** (-s * p)
    if p == 2:
        Q = np.zeros((n, n))
        a, b = pos[pq.I], pos[pq.J]
        both = b >= 0
        np.add.at(Q, (a, a), kpair)
        np.add.at(Q, (b[both], b[both]), kpair[both])
        np.add.at(Q, (a[both], b[both]), -kpair[both])
        np.add.at(Q, (b[both], a[both]), -kpair[both])
        lam = linalg.eigh(Q, eigvals_only=True, subset_by_index=[0, 0])[0]
        val = dv / lam
    else:
        sf = FractionalP(1.0, p, s)
        op = pq.operator(sf)

        def ratio(w):
            full = np.zeros(grid.n_nodes)
            full[idx] = w
            num = op.energy(full)
            den = np.sum(np.abs(w) ** p) * dv
            g_num = op.gradient(full)[idx]
            g_den = p * np.sign(w) * np.abs(w) ** (p - 1) * dv
            return num / den, (g_num * den - num * g_den) / den**2

        rng = np.random.default_rng(seed)
        x = grid.points[idx]
        lo, hi = np.asarray(grid.lower), np.asarray(grid.upper)
        smooth = np.prod(np.sin(np.pi * (x - lo) / (hi - lo)), axis=1)
        starts = [smooth, smooth**2] + [np.abs(rng.standard_normal(n)) + 0.1 for _ in range(3)]
        best = np.inf
        for w0 in starts:
            res = optimize.minimize(ratio, w0 / np.max(np.abs(w0)), jac=True, method="L-BFGS-B",
                                    options={"maxiter": 500})
            best = min(best, float(res.fun))
        val = 1.0 / best
    _POINCARE_CACHE[key] = float(val)
    return float(val)


def coercivity_check(traj) -> dict:
    """Fractional Sobolev norm of each snapshot against ``C1 E(u) + C2 ||u_0||^p``.

    ``C1 = (1 + 4^(p-1) C_P) / A`` and ``C2 = 4^(p-1) C_P + 2^(p-1)`` follow from
    the lower bound on H, the triangle inequality and the discrete Poincare
    constant ``C_P``. The lower bound only holds for fractional_p and
    double_phase; other variants are reported without failing.
    """
    from ..kernel import gagliardo_p
    from ..grid import lp_norm

    sf = traj.sf
    A, s, p = sf.lower_params
    pq = traj.pq
    cp = poincare_constant(pq, s, p)
    c1 = (1.0 + 4 ** (p - 1) * cp) / A
    c2 = 4 ** (p - 1) * cp + 2 ** (p - 1)
    u0 = traj.datum
    norm0 = lp_norm(u0, p, "all") ** p + gagliardo_p(u0, s, p, pq)
    lhs, rhs, ratio = [], [], []
    for u, rep in zip(traj.snapshots, traj.reports):
        left = lp_norm(u, p, "all") ** p + gagliardo_p(u, s, p, pq)
        right = c1 * rep.energy + c2 * norm0
        lhs.append(left)
        rhs.append(right)
        semi = gagliardo_p(u, s, p, pq)
        ratio.append(semi / rep.energy if rep.energy > 0 else 0.0)
    holds = all(a <= b * (1 + 1e-12) for a, b in zip(lhs, rhs))
    enforced = isinstance(sf, (FractionalP, DoublePhase))
    return check_report("coercivity", {"C_P": cp, "C1": c1, "C2": c2, "p": p, "s": s,
                                       "enforced": enforced},
                        min(b - a for a, b in zip(lhs, rhs)), holds or not enforced,
                        bound_holds=holds, lhs=lhs, rhs=rhs, seminorm_over_energy=ratio)


# --- mollifier properties ---------------------------------------------------

def _fd4(fn, t, d):
    return (-fn(t + 2 * d) + 8 * fn(t + d) - 8 * fn(t - d) + fn(t - 2 * d)) / (12 * d)


def mollifier_suite(n_inputs: int = 100, seed: int = 0, grid=None, fd_tol=1e-10) -> dict:
    """Derivative identity, L^p contraction and pairwise Jensen bound on random piecewise-constant inputs."""
    from ..grid import Grid

    rng = np.random.default_rng(seed)
    grid = grid or Grid.box([0.0], [1.0], 8, trunc_radius=0.25)
    pq = PairQuadrature(grid)
    variants = [FractionalP(1.0, 1.5, 0.4), FractionalP(1.0, 2.0, 0.5), FractionalP(1.0, 3.0, 0.3),
                DoublePhase(2.0, 3.0, 0.5, 0.4), LogType(2.0, 0.5), VariableExp(0.5, 3.0, 0.5)]
    inside = grid.interior
    dv = grid.cell_volume
    worst_id, worst_con, worst_jen = 0.0, np.inf, np.inf
    for trial in range(n_inputs):
        k = int(rng.integers(3, 11))
        T = float(rng.uniform(0.2, 2.0))
        h = T / k
        vals = rng.uniform(0.0, 2.0, size=(k + 1, grid.n_nodes)) * rng.uniform(0.2, 3.0)
        v0 = GridFunction(grid, rng.uniform(0.0, 2.0, grid.n_nodes))
        h_m = float(rng.uniform(0.05, 1.0)) * T
        src = PiecewiseConstantField(vals, h)
        mf = MollifiedField(src, MollifierState(h_m, v0))

        scale = 1.0 + np.max(np.abs(vals)) / h_m
        for j in range(1, k + 1):
            t = (j - 0.5) * h
            fd = _fd4(mf.at, t, 1e-3 * min(h, h_m))
            ident = -(mf.at(t) - vals[j]) / h_m
            worst_id = max(worst_id, float(np.max(np.abs(fd - ident))) / scale)

        p = float(rng.uniform(1.0, 4.0))
        edges = h * np.arange(k + 1)
        norm_m = float(np.sum(gauss_cells(lambda t: np.sum(np.abs(mf.at(t)[inside]) ** p) * dv, edges, 4))) ** (1 / p)
        norm_v = float(h * np.sum(np.abs(vals[1:, inside]) ** p) * dv) ** (1 / p)
        norm_0 = float(np.sum(np.abs(v0.values[inside]) ** p) * dv) ** (1 / p)
        bound = norm_v + h_m ** (1 / p) * norm_0
        worst_con = min(worst_con, (bound - norm_m) / (1.0 + bound))

        sf = variants[trial % len(variants)]
        op = pq.operator(sf)
        e_src = PiecewiseConstantField(
            np.array([[op.energy(vals[j])] for j in range(k + 1)]), h)
        e_moll = MollifiedField(e_src, MollifierState(h_m, GridFunction(_scalar_grid(), [op.energy(v0.values)])))
        for t in np.linspace(0.0, T, 2 * k + 1):
            lhs = op.energy(mf.at(t))
            rhs = float(e_moll.at(t)[0])
            worst_jen = min(worst_jen, (rhs - lhs) / (1.0 + abs(rhs)))

    ok_id = worst_id <= fd_tol
    ok_con = worst_con >= -1e-12
    ok_jen = worst_jen >= -1e-10
    return check_report("mollifier_suite", {"inputs": n_inputs, "seed": seed},
                        min(worst_con, worst_jen), ok_id and ok_con and ok_jen,
                        identity_max_error=worst_id, identity_pass=ok_id,
                        contraction_min_slack=worst_con, contraction_pass=ok_con,
                        jensen_min_slack=worst_jen, jensen_pass=ok_jen)


_SCALAR_GRID = None


def _scalar_grid():
    # one-node carrier so scalar time series reuse the nodal mollifier
    global _SCALAR_GRID
    if _SCALAR_GRID is None:
        from ..grid import Grid
        _SCALAR_GRID = Grid(1, 1.0, np.array([[0.0]]), np.array([True]), (-0.5,), (0.5,), 1.0)
    return _SCALAR_GRID
