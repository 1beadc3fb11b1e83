"""Structure functions and the pair-sum quadrature of the nonlocal energy.

Energies are sums over unordered node pairs with at least one interior node.
Pairs with both nodes exterior are dropped because the datum is frozen there,
so they only add a constant. Each retained pair carries the weight
``2 * dx**(2N) / |x - y|**N``.

Reductions split the pair list into fixed-size chunks. Partial results are
combined in chunk order, so the value does not depend on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, GridFunction, GridMismatchError

CHUNK = 1 << 16


class NotDifferentiableError(TypeError):
    """Raised when a derivative is requested from a variant without one."""


def _check_unit(name, val):
    if not 0 < val < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {val}")


def _signed_pow(xi, e):
    # sign(xi) |xi|**e, zero at xi = 0 even for e < 1
    return np.sign(xi) * np.power(np.abs(xi), e)


@dataclass(frozen=True)
class Coefficient:
    """Nonnegative symmetric weight ``a(x, y)`` of the second phase.

    It is evaluated at the pair midpoint, which makes it symmetric by
    construction. ``bump`` is a Gaussian around ``center``. ``ramp`` is a
    tanh step along the first axis with steepness ``width``.
    """

    kind: str = "constant"
    value: float = 1.0
    center: tuple[float, ...] = (0.5,)
    width: float = 0.1

    def __post_init__(self):
        if self.kind not in ("constant", "bump", "ramp"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.value < 0:
            raise ValueError("coefficient value must be nonnegative")
        if not self.width > 0:
            raise ValueError("coefficient width must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    def __call__(self, x, y):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        mid = 0.5 * (x + y)
        if self.kind == "constant":
            return np.full(mid.shape[0], self.value)
        c = np.asarray(self.center)
        if self.kind == "bump":
            c = np.broadcast_to(c, mid.shape[1:])
            d2 = np.sum((mid - c) ** 2, axis=1)
            return self.value * np.exp(-0.5 * d2 / self.width**2)
        return self.value * 0.5 * (1.0 + np.tanh((mid[:, 0] - c[0]) / self.width))


@dataclass(frozen=True)
class FractionalP:
    A: float = 1.0
    p: float = 2.0
    s: float = 0.5
    differentiable = True

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError("A must be positive")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        _check_unit("s", self.s)

    @property
    def lower_params(self):
        return self.A, self.s, self.p

    def factors(self, dist, a=None):
        return (self.A * dist ** (-self.s * self.p),)

    def h(self, xi, f):
        return f[0] * np.abs(xi) ** self.p

    def dh(self, xi, f):
        return f[0] * self.p * _signed_pow(xi, self.p - 1.0)


@dataclass(frozen=True)
class DoublePhase:
    p: float = 2.0
    q: float = 3.0
    s: float = 0.5
    r: float = 0.5
    coefficient: Coefficient = field(default_factory=Coefficient)
    differentiable = True

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not self.q >= self.p:
            raise ValueError("q must be at least p")
        _check_unit("s", self.s)
        _check_unit("r", self.r)

    @property
    def lower_params(self):
        return 1.0, self.s, self.p

    def factors(self, dist, a=None):
        a = np.ones_like(dist) if a is None else a
        return dist ** (-self.s * self.p), a * dist ** (-self.r * self.q)

    def h(self, xi, f):
        t = np.abs(xi)
        return f[0] * t**self.p + f[1] * t**self.q

    def dh(self, xi, f):
        return f[0] * self.p * _signed_pow(xi, self.p - 1.0) + f[1] * self.q * _signed_pow(xi, self.q - 1.0)


@dataclass(frozen=True)
class LogType:
    p: float = 2.0
    s: float = 0.5
    differentiable = False

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        _check_unit("s", self.s)

    @property
    def lower_params(self):
        return 1.0, self.s, self.p

    def factors(self, dist, a=None):
        return (dist ** (-self.s),)

    def h(self, xi, f):
        t = np.abs(xi) * f[0]
        return t**self.p * np.log1p(t)

    def dh(self, xi, f):
        raise NotDifferentiableError("log-type structure function has no derivative here")


@dataclass(frozen=True)
class VariableExp:
    """Oscillating exponent ``a_exp + b_exp sin(log log t)``, frozen at ``a_exp`` for ``t <= e``."""

    s: float = 0.5
    a_exp: float = 3.0
    b_exp: float = 0.5
    differentiable = False

    def __post_init__(self):
        _check_unit("s", self.s)
        if not self.a_exp - abs(self.b_exp) > 1:
            raise ValueError("need a_exp - |b_exp| > 1")

    @property
    def lower_params(self):
        return 1.0, self.s, self.a_exp - abs(self.b_exp)

    def factors(self, dist, a=None):
        return (dist ** (-self.s),)

    def exponent(self, t):
        t = np.asarray(t, dtype=float)
        big = t > math.e
        safe = np.where(big, t, math.e)
        return np.where(big, self.a_exp + self.b_exp * np.sin(np.log(np.log(safe))), self.a_exp)

    def h(self, xi, f):
        t = np.abs(xi) * f[0]
        return t ** self.exponent(t)

    def dh(self, xi, f):
        raise NotDifferentiableError("variable-exponent structure function has no derivative here")


StructureFunction = FractionalP | DoublePhase | LogType | VariableExp


def _pair_coeff(sf, x, y):
    if isinstance(sf, DoublePhase):
        return sf.coefficient(x, y)
    return None


def _distance(x, y):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    d = np.sqrt(np.sum((x - y) ** 2, axis=1))
    if np.any(d == 0):
        raise ValueError("H is undefined on the diagonal x = y")
    return x, y, d


def H_eval(sf: StructureFunction, x, y, xi):
    """Pointwise structure function ``H(x, y, xi)``; vectorized over rows of ``x``, ``y``."""
    x, y, d = _distance(x, y)
    val = sf.h(np.asarray(xi, dtype=float), sf.factors(d, _pair_coeff(sf, x, y)))
    return float(val[0]) if np.ndim(xi) == 0 and val.size == 1 else val


def dH_dxi(sf: StructureFunction, x, y, xi):
    if not sf.differentiable:
        raise NotDifferentiableError(f"{type(sf).__name__} is not differentiable")
    x, y, d = _distance(x, y)
    val = sf.dh(np.asarray(xi, dtype=float), sf.factors(d, _pair_coeff(sf, x, y)))
    return float(val[0]) if np.ndim(xi) == 0 and val.size == 1 else val


@dataclass(frozen=True, eq=False)
class PairQuadrature:
    """Unordered node pairs ``(I, J)`` with ``I`` interior and ``J != I``.

    When ``J`` is also interior only ``J > I`` is kept, so each pair appears
    once. ``weight`` already holds the factor 2, the kernel and ``dx**(2N)``.
    """

    grid: Grid
    threads: int = 1
    I: np.ndarray = field(init=False, repr=False)
    J: np.ndarray = field(init=False, repr=False)
    dist: np.ndarray = field(init=False, repr=False)
    weight: np.ndarray = field(init=False, repr=False)
    _cache: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError("threads must be positive")
        g = self.grid
        n = g.n_nodes
        Is, Js = [], []
        for i in g.interior_index:
            j = np.arange(n)
            keep = (j != i) & (~g.interior | (j > i))
            Js.append(j[keep])
            Is.append(np.full(keep.sum(), i))
        I = np.concatenate(Is)
        J = np.concatenate(Js)
        d = np.sqrt(np.sum((g.points[I] - g.points[J]) ** 2, axis=1))
        w = 2.0 * g.cell_volume**2 / d**g.dim
        for name, arr in (("I", I), ("J", J), ("dist", d), ("weight", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_pairs(self) -> int:
        return self.I.shape[0]

    def operator(self, sf: StructureFunction) -> "PairOperator":
        op = self._cache.get(sf)
        if op is None:
            op = PairOperator(self, sf)
            self._cache[sf] = op
        return op


class PairOperator:
    """Energy, gradient and per-node slices for one structure function on one pair set."""

    def __init__(self, pq: PairQuadrature, sf: StructureFunction):
        self.pq = pq
        self.sf = sf
        pts = pq.grid.points
        a = _pair_coeff(sf, pts[pq.I], pts[pq.J])
        self.factors = sf.factors(pq.dist, a)
        bounds = list(range(0, pq.n_pairs, CHUNK)) + [pq.n_pairs]
        self.chunks = list(zip(bounds[:-1], bounds[1:]))
        self._incidence = None

    def _map(self, fn):
        if self.pq.threads == 1 or len(self.chunks) == 1:
            return [fn(c) for c in self.chunks]
        with ThreadPoolExecutor(max_workers=self.pq.threads) as ex:
            return list(ex.map(fn, self.chunks))

    def _xi(self, u, lo, hi):
        return u[self.pq.I[lo:hi]] - u[self.pq.J[lo:hi]]

    def energy(self, u: np.ndarray) -> float:
        w = self.pq.weight

        def part(c):
            lo, hi = c
            f = tuple(x[lo:hi] for x in self.factors)
            return np.sum(w[lo:hi] * self.sf.h(self._xi(u, lo, hi), f))

        return float(np.sum(self._map(part)))

    def gradient(self, u: np.ndarray) -> np.ndarray:
        """Partial derivatives in every interior nodal value; zeros elsewhere."""
        pq = self.pq
        n = pq.grid.n_nodes

        def part(c):
            lo, hi = c
            f = tuple(x[lo:hi] for x in self.factors)
            t = pq.weight[lo:hi] * self.sf.dh(self._xi(u, lo, hi), f)
            return np.bincount(pq.I[lo:hi], weights=t, minlength=n) - np.bincount(
                pq.J[lo:hi], weights=t, minlength=n
            )

        g = np.zeros(n)
        for partial in self._map(part):
            g = g + partial
        g[~pq.grid.interior] = 0.0
        return g

    def incidence(self):
        """For each interior node: the pairs touching it and their partner nodes.

        Returned as CSR-like ``(offsets, pair_index, partner)`` arrays indexed
        by position in ``grid.interior_index``.
        """
        if self._incidence is None:
            pq = self.pq
            interior = pq.grid.interior_index
            pos = -np.ones(pq.grid.n_nodes, dtype=np.int64)
            pos[interior] = np.arange(interior.size)
            pair = np.arange(pq.n_pairs)
            owner = np.concatenate([pos[pq.I], pos[pq.J]])
            partner = np.concatenate([pq.J, pq.I])
            pidx = np.concatenate([pair, pair])
            keep = owner >= 0
            owner, partner, pidx = owner[keep], partner[keep], pidx[keep]
            order = np.argsort(owner, kind="stable")
            counts = np.bincount(owner, minlength=interior.size)
            offsets = np.concatenate([[0], np.cumsum(counts)])
            self._incidence = (offsets, pidx[order], partner[order])
        return self._incidence

    def node_energy(self, k: int, z, u: np.ndarray):
        """Energy of the pairs touching interior node number ``k`` with its value set to ``z``.

        ``z`` may be an array of trial values; the result has its shape.
        """
        offsets, pidx, partner = self.incidence()
        sl = slice(offsets[k], offsets[k + 1])
        pi = pidx[sl]
        other = u[partner[sl]]
        w = self.pq.weight[pi]
        f = tuple(x[pi] for x in self.factors)
        z = np.asarray(z, dtype=float)
        xi = z[..., None] - other
        return np.sum(w * self.sf.h(xi, f), axis=-1)


def _check_grid(u: GridFunction, pq: PairQuadrature):
    if not pq.grid.same_as(u.grid):
        raise GridMismatchError("field and pair quadrature live on different grids")


def nonlocal_energy(sf: StructureFunction, u: GridFunction, pq: PairQuadrature) -> float:
    _check_grid(u, pq)
    return pq.operator(sf).energy(u.values)


def energy_subgradient(sf: StructureFunction, u: GridFunction, pq: PairQuadrature) -> GridFunction:
    if not sf.differentiable:
        raise NotDifferentiableError(f"{type(sf).__name__} is not differentiable")
    _check_grid(u, pq)
    return GridFunction(u.grid, pq.operator(sf).gradient(u.values))


def gagliardo_p(u: GridFunction, s: float, p: float, pq: PairQuadrature) -> float:
    """Discrete fractional seminorm to the power p, over the same pair set as the energy."""
    if not p >= 1:
        raise ValueError("p must be at least 1")
    _check_unit("s", s)
    _check_grid(u, pq)
    xi = u.values[pq.I] - u.values[pq.J]
    return float(np.sum(pq.weight * np.abs(xi) ** p * pq.dist ** (-s * p)))


def describe(sf: StructureFunction) -> dict:
    names = {FractionalP: "fractional_p", DoublePhase: "double_phase",
             LogType: "log_type", VariableExp: "variable_exp"}
    out = {"variant": names[type(sf)]}
    for k, v in sf.__dict__.items():
        out[k] = v.__dict__ if isinstance(v, Coefficient) else v
    if "coefficient" in out:
        out["coefficient"] = {**out["coefficient"], "center": list(out["coefficient"]["center"])}
    return out
