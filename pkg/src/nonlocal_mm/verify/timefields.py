"""Time-dependent nodal fields used as comparison maps, and exact time integration helpers.

Every field exposes ``at(t)``, its time derivative ``dt(t)`` and the times
where it stops being smooth. Integrals of the form
``int b(v) dv/dt`` are evaluated through the primitive and carry no
quadrature error. Other integrands are integrated cell by cell with
Gauss-Legendre rules, where a cell is delimited by every breakpoint
involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import GridFunction

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def gauss_cells(fn, edges, sub: int = 4):
    """Integrals of ``fn`` over each cell ``[edges[i], edges[i+1]]``.

    Each cell is split into ``sub`` pieces with an 8-point rule on each.
    ``fn(t)`` returns a float or an array; the result stacks one entry per cell.
    """
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        pts = np.linspace(a, b, sub + 1)
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            for x, w in zip(_GL_NODES, _GL_WEIGHTS):
                total = total + w * half * fn(mid + half * x)
        out.append(total)
    return np.array(out, dtype=float)


def merged_edges(*groups, lo: float, hi: float):
    pts = np.concatenate([np.asarray(g, dtype=float) for g in groups] + [[lo, hi]])
    pts = pts[(pts >= lo) & (pts <= hi)]
    pts = np.unique(np.round(pts, 14))
    return pts


@dataclass(frozen=True, eq=False)
class PiecewiseConstantField:
    """``values[0]`` for ``t <= 0`` and ``values[j]`` on ``((j-1)h, jh]``; the last value persists."""

    values: np.ndarray
    h: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] < 1:
            raise ValueError("values must be a (steps + 1, nodes) array")
        if not self.h > 0:
            raise ValueError("h must be positive")
        object.__setattr__(self, "values", vals)

    @property
    def k(self) -> int:
        return self.values.shape[0] - 1

    @property
    def T(self) -> float:
        return self.k * self.h

    def index(self, t: float) -> int:
        if t <= 0:
            return 0
        i = int(np.ceil(t / self.h - 1e-12))
        return min(max(i, 1), self.k)

    def at(self, t: float) -> np.ndarray:
        return self.values[self.index(t)]

    def dt(self, t: float) -> np.ndarray:
        return np.zeros(self.values.shape[1])

    @property
    def breakpoints(self):
        return self.h * np.arange(self.k + 1)


@dataclass(frozen=True, eq=False)
class ConstantField:
    value: np.ndarray

    def at(self, t):
        return self.value

    def dt(self, t):
        return np.zeros_like(self.value)

    @property
    def breakpoints(self):
        return np.zeros(0)


@dataclass(frozen=True)
class MollifierState:
    h_moll: float
    v0: GridFunction

    def validate(self, T: float):
        if not 0 < self.h_moll <= T:
            raise ValueError(f"h_moll must lie in (0, T] = (0, {T}], got {self.h_moll}")


class MollifiedField:
    """Exponential time mollification of a piecewise-constant field, in closed form.

    On each cell where the source equals ``c``, the mollified value relaxes
    as ``c + (m - c) exp(-(t - t_start) / h_moll)`` from its value ``m`` at
    the cell start. Before ``t = 0`` it equals ``v0``.
    """

    def __init__(self, source: PiecewiseConstantField, st: MollifierState):
        st.validate(source.T)
        self.source = source
        self.h_moll = st.h_moll
        self.v0 = np.asarray(st.v0.values, dtype=float)
        decay = np.exp(-source.h / st.h_moll)
        starts = [self.v0]
        for j in range(1, source.k + 1):
            c = source.values[j]
            starts.append(c + (starts[-1] - c) * decay)
        self.nodes = np.stack(starts)

    def at(self, t: float) -> np.ndarray:
        if t <= 0:
            return self.v0
        src = self.source
        j = src.index(t)
        if t > src.T:
            c = src.values[-1]
            return c + (self.nodes[-1] - c) * np.exp(-(t - src.T) / self.h_moll)
        c = src.values[j]
        return c + (self.nodes[j - 1] - c) * np.exp(-(t - (j - 1) * src.h) / self.h_moll)

    def dt(self, t: float) -> np.ndarray:
        if t <= 0:
            return np.zeros_like(self.v0)
        src = self.source
        c = src.values[-1] if t > src.T else src.values[src.index(t)]
        return -(self.at(t) - c) / self.h_moll

    @property
    def breakpoints(self):
        return self.source.breakpoints


class ShiftedField:
    """``base(t) + a(t) * direction`` with ``a(t) = amplitude * (1 + rate * t)``."""

    def __init__(self, base, direction: np.ndarray, amplitude: float, rate: float = 0.0):
        self.base = base
        self.direction = np.asarray(direction, dtype=float)
        self.amplitude = float(amplitude)
        self.rate = float(rate)

    def _a(self, t):
        return self.amplitude * (1.0 + self.rate * t)

    def at(self, t):
        return self.base.at(t) + self._a(t) * self.direction

    def dt(self, t):
        return self.base.dt(t) + self.amplitude * self.rate * self.direction

    @property
    def breakpoints(self):
        return self.base.breakpoints


def mollify_time(v, h: float, st: MollifierState, times=None) -> list[GridFunction]:
    """Mollified snapshots of the piecewise-constant field ``v_0 .. v_k`` with step ``h``.

    ``v_0`` is the value before time zero; the mollification starts from
    ``st.v0``. Evaluated at ``times`` (default: the grid times ``j h``).
    """
    snaps = list(v)
    values = np.stack([s.values for s in snaps])
    field = MollifiedField(PiecewiseConstantField(values, h), st)
    if times is None:
        times = h * np.arange(len(snaps))
    return [GridFunction(snaps[0].grid, field.at(float(t))) for t in times]
