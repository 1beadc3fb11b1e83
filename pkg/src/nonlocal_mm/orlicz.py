"""The time nonlinearity b, its primitive, conjugate and boundary terms.

All scalar maps are vectorized over numpy arrays. The Bregman gap
``bterm[u, v] = phi(v) - phi(u) - b(u) (v - u)`` is clamped at zero so that
rounding never produces a negative distance.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from ._optim import golden_section_max
from .grid import GridFunction, check_same_grid


def _as_nonneg(u, what="u"):
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError(f"{what} must be nonnegative")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class PowerLaw:
    """``b(u) = coeff * u ** exponent``; the growth window defaults to the exponent."""

    coeff: float = 1.0
    exponent: float = 1.0
    l: float | None = None
    m: float | None = None

    def __post_init__(self):
        if not self.coeff > 0:
            raise ValueError("coeff must be positive")
        if not self.exponent > 0:
            raise ValueError("exponent must be positive")
        l = self.exponent if self.l is None else float(self.l)
        m = self.exponent if self.m is None else float(self.m)
        if not (0 < l <= self.exponent <= m):
            raise ValueError("growth window [l, m] must be positive and contain the exponent")
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "m", m)

    def b(self, u):
        return self.coeff * np.power(u, self.exponent)

    def db(self, u):
        return self.coeff * self.exponent * np.power(u, self.exponent - 1.0)

    def phi(self, u):
        e = self.exponent + 1.0
        return self.coeff * np.power(u, e) / e

    def inverse_b(self, w):
        return np.power(np.asarray(w, dtype=float) / self.coeff, 1.0 / self.exponent)

    def describe(self) -> dict:
        return {"kind": "power_law", "coeff": self.coeff, "exponent": self.exponent,
                "l": self.l, "m": self.m}


@dataclass(frozen=True)
class PiecewisePower:
    """Continuous piecewise power law.

    Piece ``j`` covers ``[breakpoints[j-1], breakpoints[j])`` with
    ``b(u) = c_j u ** exponents[j]``. Only the first coefficient is free;
    the rest follow from continuity at each breakpoint.
    """

    breakpoints: tuple[float, ...]
    exponents: tuple[float, ...]
    coeff: float = 1.0
    l: float | None = None
    m: float | None = None

    def __post_init__(self):
        bps = tuple(float(x) for x in self.breakpoints)
        exps = tuple(float(x) for x in self.exponents)
        if len(exps) != len(bps) + 1:
            raise ValueError("need exactly one more exponent than breakpoints")
        if any(x <= 0 for x in bps) or any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be positive and strictly increasing")
        if any(e <= 0 for e in exps):
            raise ValueError("exponents must be positive")
        if not self.coeff > 0:
            raise ValueError("coeff must be positive")
        l = min(exps) if self.l is None else float(self.l)
        m = max(exps) if self.m is None else float(self.m)
        if not (0 < l <= min(exps) and max(exps) <= m):
            raise ValueError("growth window [l, m] must contain every exponent")
        coeffs = [float(self.coeff)]
        for beta, e0, e1 in zip(bps, exps, exps[1:]):
            coeffs.append(coeffs[-1] * beta ** (e0 - e1))
        # phi at each breakpoint, accumulated piece by piece
        offsets = [0.0]
        left = 0.0
        for j, beta in enumerate(bps):
            e = exps[j] + 1.0
            offsets.append(offsets[-1] + coeffs[j] * (beta**e - left**e) / e)
            left = beta
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "_coeffs", np.array(coeffs))
        object.__setattr__(self, "_exps", np.array(exps))
        object.__setattr__(self, "_offsets", np.array(offsets))
        object.__setattr__(self, "_lefts", np.array((0.0,) + bps))

    def _piece(self, u):
        return np.searchsorted(np.asarray(self.breakpoints), u, side="right")

    def b(self, u):
        u = np.asarray(u, dtype=float)
        j = self._piece(u)
        return self._coeffs[j] * np.power(u, self._exps[j])

    def db(self, u):
        u = np.asarray(u, dtype=float)
        j = self._piece(u)
        return self._coeffs[j] * self._exps[j] * np.power(u, self._exps[j] - 1.0)

    def phi(self, u):
        u = np.asarray(u, dtype=float)
        j = self._piece(u)
        e = self._exps[j] + 1.0
        return self._offsets[j] + self._coeffs[j] * (np.power(u, e) - np.power(self._lefts[j], e)) / e

    def inverse_b(self, w):
        w = np.asarray(w, dtype=float)
        levels = self.b(np.asarray(self.breakpoints))
        j = np.searchsorted(levels, w, side="right")
        return np.power(w / self._coeffs[j], 1.0 / self._exps[j])

    def describe(self) -> dict:
        return {"kind": "piecewise_power", "coeff": self.coeff,
                "breakpoints": list(self.breakpoints), "exponents": list(self.exponents),
                "l": self.l, "m": self.m}


Nonlinearity = PowerLaw | PiecewisePower


def b_eval(nl: Nonlinearity, u):
    return _out(nl.b(_as_nonneg(u)))


def phi(nl: Nonlinearity, u):
    return _out(nl.phi(_as_nonneg(u)))


def phi_star_of_b(nl: Nonlinearity, u):
    """Conjugate evaluated on the range of b: ``b(u) u - phi(u)``."""
    u = _as_nonneg(u)
    return _out(np.maximum(nl.b(u) * u - nl.phi(u), 0.0))


def phi_star(nl: Nonlinearity, w, tol: float = 1e-13):
    """Standalone convex conjugate ``sup_x (x w - phi(x))`` for ``w >= 0``.

    Computed by golden-section maximization on a bracket grown until
    ``b`` exceeds ``w`` (the concave objective is decreasing beyond it).
    """
    w = _as_nonneg(w, "w")
    hi = np.ones_like(w)
    for _ in range(2000):
        short = nl.b(hi) < w
        if not np.any(short):
            break
        hi = np.where(short, 2.0 * hi, hi)
    _, val = golden_section_max(lambda x: x * w - nl.phi(x), np.zeros_like(w), hi, tol=tol)
    return _out(np.maximum(val, 0.0))


def boundary_term(nl: Nonlinearity, u, v):
    """Bregman gap of phi between ``u`` and ``v``, nonnegative."""
    u = _as_nonneg(u)
    v = _as_nonneg(v, "v")
    val = nl.phi(v) - nl.phi(u) - nl.b(u) * (v - u)
    return _out(np.maximum(val, 0.0))


def _interior_nonneg(f: GridFunction, what: str) -> np.ndarray:
    vals = f.interior_values
    if np.any(vals < 0):
        raise ValueError(f"{what} must be nonnegative on interior nodes")
    return vals


def boundary_integral(nl: Nonlinearity, u: GridFunction, v: GridFunction) -> float:
    grid = check_same_grid(u, v)
    uu = _interior_nonneg(u, "u")
    vv = _interior_nonneg(v, "v")
    return float(np.sum(boundary_term(nl, uu, vv)) * grid.cell_volume)


def orlicz_modular(nl: Nonlinearity, f: GridFunction) -> float:
    return float(np.sum(nl.phi(np.abs(f.interior_values))) * f.grid.cell_volume)


# --- inequality battery -----------------------------------------------------

SLACK_TOL = 1e-11


def default_samples(n: int = 10_000, seed: int = 0, lo: float = 1e-4, hi: float = 10.0) -> np.ndarray:
    """Log-spaced ``(u, v, lambda)`` triples with independent random pairings.

    A small fixed set of rows with ``u = 0`` or ``v = 0`` is appended so the
    extreme ratios of the chain estimates are present in every sample set.
    """
    rng = np.random.default_rng(seed)
    grid = np.geomspace(lo, hi, n)
    u = grid.copy()
    v = rng.permutation(grid)
    lam = 1.0 + rng.permutation(np.geomspace(1e-9, 9.0, n))
    anchors = np.geomspace(lo, hi, 16)
    extra_u = np.concatenate([anchors, np.zeros_like(anchors)])
    extra_v = np.concatenate([np.zeros_like(anchors), anchors])
    extra_l = np.full(extra_u.shape, 2.0)
    return np.column_stack([np.concatenate([u, extra_u]),
                            np.concatenate([v, extra_v]),
                            np.concatenate([lam, extra_l])])


def _check(name: str, lhs, rhs) -> dict:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    slack = (rhs - lhs) / scale
    worst = float(np.min(slack)) if slack.size else 0.0
    return {"name": name, "samples": int(slack.size), "worst_slack": worst,
            "pass": bool(worst >= -SLACK_TOL)}


def chain_constant(nl: Nonlinearity, u, v, rel_sep: float = 1e-6) -> float:
    """Smallest ``c`` closing the square-root chain on the given pairs.

    Pairs closer than ``rel_sep`` relative to their size are skipped since
    both ratios there are quotients of rounding noise.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    keep = np.abs(v - u) > rel_sep * np.maximum(u, v)
    u, v = u[keep], v[keep]
    if u.size == 0:
        return 1.0
    d_root_ub = (np.sqrt(v * nl.b(v)) - np.sqrt(u * nl.b(u))) ** 2
    d_root_phi = (np.sqrt(nl.phi(v)) - np.sqrt(nl.phi(u))) ** 2
    gap = np.asarray(boundary_term(nl, u, v))
    ok1 = d_root_phi > 0
    ok2 = gap > 0
    r1 = np.max(d_root_ub[ok1] / d_root_phi[ok1]) if ok1.any() else 0.0
    r2 = np.max(d_root_phi[ok2] / gap[ok2]) if ok2.any() else 0.0
    # the supremum often sits on the diagonal v -> u, where both ratios
    # have closed forms in b, b' and phi; kinks need both one-sided limits
    w = np.concatenate([u[u > 0], v[v > 0]])
    for beta in getattr(nl, "breakpoints", ()):
        w = np.concatenate([w, [beta * (1 - 1e-12), beta * (1 + 1e-12)]])
    if w.size:
        bw, dbw, pw = nl.b(w), nl.db(w), nl.phi(w)
        d1 = pw * (bw + w * dbw) ** 2 / (w * bw**3)
        d2 = bw**2 / (2.0 * pw * dbw)
        r1 = max(r1, float(np.max(d1)))
        r2 = max(r2, float(np.max(d2)))
    return float(max(1.0, r1, r2))


def lemma_suite(nl: Nonlinearity, samples=None, c: float | None = None) -> dict:
    """Evaluate the growth, primitive, conjugate and chain estimates on samples.

    ``samples`` is an ``(n, 3)`` array of ``(u, v, lam)`` with ``u, v >= 0``
    and ``lam > 1``. The chain constant is fitted on the samples unless
    ``c`` is given, which lets a constant found on one set be checked on
    another.
    """
    s = default_samples() if samples is None else np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != 3 or s.shape[0] == 0:
        raise ValueError("samples must be a nonempty (n, 3) array of (u, v, lam)")
    u, v, lam = s[:, 0], s[:, 1], s[:, 2]
    if np.any(~np.isfinite(s)) or np.any(u < 0) or np.any(v < 0):
        raise ValueError("samples need finite u, v >= 0")
    if np.any(lam <= 1):
        raise ValueError("samples need lam > 1")
    l, m = nl.l, nl.m
    out = []

    pos = u > 0
    up, lp = u[pos], lam[pos]
    bu, blu = nl.b(up), nl.b(lp * up)
    out.append(_check("growth_lower", lp**l * bu, blu))
    out.append(_check("growth_upper", blu, lp**m * bu))
    b1 = float(nl.b(1.0))
    out.append(_check("power_bracket_lower", b1 * np.minimum(up**l, up**m), bu))
    out.append(_check("power_bracket_upper", bu, b1 * np.maximum(up**l, up**m)))
    dbu, dblu = nl.db(up), nl.db(lp * up)
    out.append(_check("derivative_scaling_lower", (l / m) * lp ** (l - 1) * dbu, dblu))
    out.append(_check("derivative_scaling_upper", dblu, (m / l) * lp ** (m - 1) * dbu))
    pu, plu = nl.phi(up), nl.phi(lp * up)
    out.append(_check("primitive_scaling_lower", lp ** (l + 1) * pu, plu))
    out.append(_check("primitive_scaling_upper", plu, lp ** (m + 1) * pu))
    su = np.asarray(phi_star(nl, up))
    slu = np.asarray(phi_star(nl, lp * up))
    out.append(_check("conjugate_scaling_lower", lp ** ((m + 1) / m) * su, slu))
    out.append(_check("conjugate_scaling_upper", slu, lp ** ((l + 1) / l) * su))

    ub = u * nl.b(u)
    pu_all = nl.phi(u)
    psb = np.asarray(phi_star_of_b(nl, u))
    out.append(_check("energy_lower", ub / (m + 1), pu_all))
    out.append(_check("energy_middle", pu_all, psb / l))
    out.append(_check("energy_upper", psb / l, m / (l * (m + 1)) * ub))

    gap = np.asarray(boundary_term(nl, u, v))
    pv = nl.phi(v)
    out.append(_check("conjugate_by_gap", psb, 2 * gap + 2 ** (m + 2) * pv))
    out.append(_check("primitive_by_gap", pv, 2 * gap + 2 ** (2 + 1 / l) * psb))

    c_emp = chain_constant(nl, u, v) if c is None else float(c)
    mono = (nl.b(v) - nl.b(u)) * (v - u)
    root_ub = (np.sqrt(v * nl.b(v)) - np.sqrt(ub)) ** 2
    root_phi = (np.sqrt(pv) - np.sqrt(pu_all)) ** 2
    out.append(_check("chain_gap_monotone", gap, mono))
    out.append(_check("chain_monotone_root", mono, root_ub))
    out.append(_check("chain_root_primitive", root_ub, c_emp * root_phi))
    out.append(_check("chain_primitive_gap", c_emp * root_phi, c_emp**2 * gap))

    return {
        "check": "lemma_suite",
        "nonlinearity": nl.describe(),
        "n_samples": int(s.shape[0]),
        "c_emp": c_emp,
        "inequalities": out,
        "pass": all(r["pass"] for r in out),
    }

