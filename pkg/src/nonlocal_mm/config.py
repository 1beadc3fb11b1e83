"""Run-config schema and parsing.

A run is described by one JSON document. Validation collects every violated
constraint before failing, so a bad config reports all its problems at once.
"""

from __future__ import annotations

import json
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .grid import Grid, GridFunction
from .kernel import Coefficient, DoublePhase, FractionalP, LogType, VariableExp
from .minimizer import SolverOptions
from .orlicz import PiecewisePower, PowerLaw

SCHEMA_VERSION = 1

Unit = Annotated[float, Field(gt=0, lt=1)]


class ConfigError(ValueError):
    """Invalid run config; ``errors`` lists every problem as ``location: message``."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid config:\n  " + "\n  ".join(errors))


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSpec(_Model):
    dim: Literal[1, 2] = 1
    nodes: int = Field(64, ge=1)
    lower: list[float] | None = None
    upper: list[float] | None = None
    trunc_radius: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def _box(self):
        lo = self.lower or [0.0] * self.dim
        hi = self.upper or [1.0] * self.dim
        if len(lo) != self.dim or len(hi) != self.dim:
            raise ValueError("lower and upper need one entry per dimension")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("upper must exceed lower on every axis")
        return self

    def build(self) -> Grid:
        lo = self.lower or [0.0] * self.dim
        hi = self.upper or [1.0] * self.dim
        return Grid.box(lo, hi, self.nodes, self.trunc_radius)


class CoefficientSpec(_Model):
    kind: Literal["constant", "bump", "ramp"] = "constant"
    value: float = Field(1.0, ge=0)
    center: list[float] = [0.5]
    width: float = Field(0.1, gt=0)


class FractionalPSpec(_Model):
    variant: Literal["fractional_p"]
    A: float = Field(1.0, gt=0)
    p: float = Field(2.0, gt=1)
    s: Unit = 0.5

    def build(self):
        return FractionalP(self.A, self.p, self.s)


class DoublePhaseSpec(_Model):
    variant: Literal["double_phase"]
    p: float = Field(2.0, gt=1)
    q: float = 3.0
    s: Unit = 0.5
    r: Unit = 0.5
    coefficient: CoefficientSpec = CoefficientSpec()

    @model_validator(mode="after")
    def _q(self):
        if not self.q > self.p:
            raise ValueError("double phase needs 1 < p < q")
        return self

    def build(self):
        c = self.coefficient
        return DoublePhase(self.p, self.q, self.s, self.r,
                           Coefficient(c.kind, c.value, tuple(c.center), c.width))


class LogTypeSpec(_Model):
    variant: Literal["log_type"]
    p: float = Field(2.0, gt=1)
    s: Unit = 0.5

    def build(self):
        return LogType(self.p, self.s)


class VariableExpSpec(_Model):
    variant: Literal["variable_exp"]
    s: Unit = 0.5
    a_exp: float = 3.0
    b_exp: float = 0.5

    @model_validator(mode="after")
    def _floor(self):
        if not self.a_exp - abs(self.b_exp) > 1:
            raise ValueError("variable exponent needs a_exp - |b_exp| > 1")
        return self

    def build(self):
        return VariableExp(self.s, self.a_exp, self.b_exp)


SfSpec = Annotated[
    Union[FractionalPSpec, DoublePhaseSpec, LogTypeSpec, VariableExpSpec],
    Field(discriminator="variant"),
]


class NlSpec(_Model):
    power: float | None = Field(None, gt=0)
    coeff: float = Field(1.0, gt=0)
    breakpoints: list[float] | None = None
    exponents: list[float] | None = None
    l: float | None = Field(None, gt=0)
    m: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def _kind(self):
        piecewise = self.breakpoints is not None or self.exponents is not None
        if piecewise and self.power is not None:
            raise ValueError("give either power or breakpoints/exponents, not both")
        if piecewise:
            if self.breakpoints is None or self.exponents is None:
                raise ValueError("piecewise nonlinearity needs both breakpoints and exponents")
            if len(self.exponents) != len(self.breakpoints) + 1:
                raise ValueError("need exactly one more exponent than breakpoints")
            if any(e <= 0 for e in self.exponents):
                raise ValueError("exponents must be positive")
            bps = self.breakpoints
            if any(b <= 0 for b in bps) or any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
                raise ValueError("breakpoints must be positive and strictly increasing")
            exps = self.exponents
        else:
            exps = [1.0 if self.power is None else self.power]
        lo = min(exps) if self.l is None else self.l
        hi = max(exps) if self.m is None else self.m
        if not (lo <= min(exps) and max(exps) <= hi):
            raise ValueError("growth window [l, m] must contain every exponent")
        return self

    def build(self):
        if self.breakpoints is not None:
            return PiecewisePower(tuple(self.breakpoints), tuple(self.exponents), self.coeff, self.l, self.m)
        return PowerLaw(self.coeff, 1.0 if self.power is None else self.power, self.l, self.m)


class DatumSpec(_Model):
    """Named nonnegative initial/exterior profile sampled at every lattice node."""

    kind: Literal["bump", "step", "ramp", "random_smooth", "constant"] = "bump"
    amplitude: float = Field(1.0, ge=0)
    base: float = Field(0.0, ge=0)
    center: list[float] = [0.5]
    width: float = Field(0.3, gt=0)
    position: float = 0.5
    slope: float = 1.0
    modes: int = Field(4, ge=1)
    seed: int = 0

    def sample(self, grid: Grid) -> GridFunction:
        x = grid.points
        if self.kind == "constant":
            vals = np.full(grid.n_nodes, self.base + self.amplitude)
        elif self.kind == "bump":
            c = np.broadcast_to(np.asarray(self.center, dtype=float), (grid.dim,))
            r2 = np.sum((x - c) ** 2, axis=1) / self.width**2
            vals = self.base + self.amplitude * np.maximum(1.0 - r2, 0.0) ** 2
        elif self.kind == "step":
            vals = self.base + self.amplitude * (x[:, 0] < self.position)
        elif self.kind == "ramp":
            vals = np.maximum(self.base + self.slope * (x[:, 0] - grid.lower[0]), 0.0)
        else:
            rng = np.random.default_rng(self.seed)
            total = np.zeros(grid.n_nodes)
            bound = 0.0
            length = grid.upper[0] - grid.lower[0]
            for axis in range(grid.dim):
                for k in range(1, self.modes + 1):
                    a = rng.uniform(-1.0, 1.0) / k**2
                    theta = rng.uniform(0.0, 2 * np.pi)
                    total += a * np.cos(np.pi * k * (x[:, axis] - grid.lower[axis]) / length + theta)
                    bound += abs(a)
            vals = self.base + self.amplitude * 0.5 * (1.0 + total / max(bound, 1e-300))
            vals = np.maximum(vals, 0.0)
        return GridFunction(grid, vals, nonnegative=True)


class SolverSpec(_Model):
    tol_grad: float = Field(1e-8, gt=0)
    tol_obj: float = Field(1e-12, ge=0)
    max_iters: int = Field(20000, ge=1)
    armijo_c: float = Field(1e-4, gt=0, lt=1)
    backtrack_factor: float = Field(0.5, gt=0, lt=1)
    init_step: float = Field(1.0, gt=0)
    step_rule: Literal["bb", "fixed"] = "bb"
    cd_tol: float = Field(1e-11, gt=0)

    def build(self) -> SolverOptions:
        return SolverOptions(**self.model_dump())


class StudySpec(_Model):
    """Parameters of the refinement ladders run in ``refine`` mode."""

    k_list: list[int] = [8, 16, 32, 64]
    ladder_k: list[int] = [8, 16, 32]
    ladder_nodes: list[int] = [32, 64, 128]

    @model_validator(mode="after")
    def _ladder(self):
        if len(self.ladder_k) != len(self.ladder_nodes):
            raise ValueError("ladder_k and ladder_nodes must have equal length")
        return self


class SchemeConfig(_Model):
    T: float = Field(gt=0)
    k: int = Field(ge=1)
    grid: GridSpec = GridSpec()
    sf: SfSpec
    nl: NlSpec = NlSpec()
    datum: DatumSpec = DatumSpec()
    solver: SolverSpec = SolverSpec()
    threads: int = Field(1, ge=1)
    audit_competitors: int = Field(20, ge=0)
    study: StudySpec = StudySpec()
    name: str = ""

    @property
    def h(self) -> float:
        return self.T / self.k

    def with_(self, **changes) -> "SchemeConfig":
        """Copy with top-level or dotted (``grid.nodes``) fields replaced, revalidated."""
        data = self.model_dump()
        for key, val in changes.items():
            node = data
            parts = key.split("__") if "__" in key else key.split(".")
            for part in parts[:-1]:
                node = node[part]
            node[parts[-1]] = val
        return SchemeConfig.model_validate(data)


def _format(err: ValidationError) -> list[str]:
    out = []
    for e in err.errors():
        loc = ".".join(str(x) for x in e["loc"]) or "<root>"
        msg = e["msg"].removeprefix("Value error, ")
        out.append(f"{loc}: {msg}")
    return out


def parse_config(text: str) -> SchemeConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    if not isinstance(data, dict):
        raise ConfigError(["<root>: config must be a JSON object"])
    try:
        return SchemeConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format(exc)) from None


def load_config(path) -> SchemeConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
