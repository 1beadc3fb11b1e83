"""Uniform lattices over a box domain plus an exterior collar, and nodal fields.

Interior nodes sit at cell midpoints of the domain box, so every node carries
the quadrature weight ``spacing ** dim``. The exterior collar continues the
same lattice outward until the truncation radius; it carries the
Cauchy-Dirichlet datum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np


class GridMismatchError(ValueError):
    """Raised when fields living on different grids are combined."""


@dataclass(frozen=True, eq=False)
class Grid:
    """Lattice nodes of a computational box, split into interior and exterior.

    ``points`` has shape ``(n_nodes, dim)`` in row-major lattice order and
    ``interior`` is a boolean mask over the nodes. The domain is the open box
    ``lower < x < upper``.
    """

    dim: int
    spacing: float
    points: np.ndarray
    interior: np.ndarray
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    trunc_radius: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if self.trunc_radius < self.spacing:
            raise ValueError("trunc_radius must be at least the spacing")
        pts = np.asarray(self.points, dtype=float).reshape(-1, self.dim)
        mask = np.asarray(self.interior, dtype=bool).reshape(-1)
        if pts.shape[0] != mask.shape[0]:
            raise ValueError("points and interior mask disagree in length")
        inside = self.contains(pts)
        if np.any(inside != mask):
            raise ValueError("interior mask does not match the domain box")
        if not mask.any():
            raise ValueError("grid has no interior nodes")
        pts.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "interior", mask)
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))

    @classmethod
    def box(
        cls,
        lower: Sequence[float],
        upper: Sequence[float],
        nodes: int,
        trunc_radius: float | None = None,
    ) -> "Grid":
        """Build the lattice with ``nodes`` interior cells along each axis.

        All axes must share one spacing. ``trunc_radius`` defaults to twice
        the domain diameter.
        """
        lower = tuple(float(v) for v in np.atleast_1d(lower))
        upper = tuple(float(v) for v in np.atleast_1d(upper))
        dim = len(lower)
        if len(upper) != dim:
            raise ValueError("lower and upper must have the same length")
        if nodes < 1:
            raise ValueError("nodes must be positive")
        lengths = [hi - lo for lo, hi in zip(lower, upper)]
        if min(lengths) <= 0:
            raise ValueError("upper must exceed lower on every axis")
        spacing = lengths[0] / nodes
        counts = [round(L / spacing) for L in lengths]
        for L, n in zip(lengths, counts):
            if abs(n * spacing - L) > 1e-9 * L:
                raise ValueError("box side lengths must be integer multiples of one spacing")
        diam = math.sqrt(sum(L * L for L in lengths))
        if trunc_radius is None:
            trunc_radius = 2.0 * diam
        collar = int(math.floor(trunc_radius / spacing + 0.5))
        axes = []
        for lo, n in zip(lower, counts):
            idx = np.arange(-collar, n + collar)
            axes.append(lo + (idx + 0.5) * spacing)
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.reshape(-1) for m in mesh], axis=1)
        lo_arr = np.asarray(lower)
        hi_arr = np.asarray(upper)
        interior = np.all((points > lo_arr) & (points < hi_arr), axis=1)
        return cls(dim, spacing, points, interior, lower, upper, float(trunc_radius))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        return np.all((pts > np.asarray(self.lower)) & (pts < np.asarray(self.upper)), axis=1)

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def interior_index(self) -> np.ndarray:
        return np.flatnonzero(self.interior)

    @property
    def exterior_index(self) -> np.ndarray:
        return np.flatnonzero(~self.interior)

    @property
    def n_interior(self) -> int:
        return int(self.interior.sum())

    def same_as(self, other: "Grid") -> bool:
        if self is other:
            return True
        return (
            self.dim == other.dim
            and self.spacing == other.spacing
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.interior, other.interior)
        )

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.n_nodes))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values over every node (interior and exterior) of a grid."""

    grid: Grid
    values: np.ndarray
    nonnegative: bool = field(default=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.shape[0] != self.grid.n_nodes:
            raise ValueError(
                f"expected {self.grid.n_nodes} nodal values, got {vals.shape[0]}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        if self.nonnegative and np.any(vals < 0):
            raise ValueError("field flagged nonnegative has negative values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    @property
    def exterior_values(self) -> np.ndarray:
        return self.values[~self.grid.interior]

    def with_values(self, values, nonnegative: bool | None = None) -> "GridFunction":
        flag = self.nonnegative if nonnegative is None else nonnegative
        return GridFunction(self.grid, values, flag)

    def with_interior(self, interior_values) -> "GridFunction":
        vals = self.values.copy()
        vals[self.grid.interior] = interior_values
        return GridFunction(self.grid, vals, self.nonnegative)


def check_same_grid(*fields: GridFunction) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if not grid.same_as(f.grid):
            raise GridMismatchError("grid functions live on different grids")
    return grid


def impose_dirichlet(f: GridFunction, datum: GridFunction) -> GridFunction:
    """Keep ``f`` on interior nodes and copy ``datum`` onto exterior nodes."""
    grid = check_same_grid(f, datum)
    vals = np.where(grid.interior, f.values, datum.values)
    return GridFunction(grid, vals, f.nonnegative and datum.nonnegative)


def project_nonneg(f: GridFunction) -> GridFunction:
    return GridFunction(f.grid, np.maximum(f.values, 0.0), True)


def lp_norm(f: GridFunction, p: float, region: Literal["interior", "all"] = "interior") -> float:
    """Discrete L^p norm with midpoint weight ``spacing ** dim`` per node."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if region == "interior":
        vals = f.interior_values
    elif region == "all":
        vals = f.values
    else:
        raise ValueError(f"unknown region {region!r}")
    return float(np.sum(np.abs(vals) ** p) * f.grid.cell_volume) ** (1.0 / p)
