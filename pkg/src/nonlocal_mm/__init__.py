"""Minimizing-movement solver for nonlocal doubly nonlinear diffusion, with numerical audits."""

from .config import ConfigError, SchemeConfig, load_config, parse_config
from .grid import Grid, GridFunction, GridMismatchError
from .kernel import (
    DoublePhase,
    FractionalP,
    LogType,
    PairQuadrature,
    VariableExp,
    energy_subgradient,
    nonlocal_energy,
)
from .minimizer import SolverOptions, StepProblem, solve_step
from .orlicz import PiecewisePower, PowerLaw, lemma_suite
from .scheme import Trajectory, run_mm

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "SchemeConfig", "load_config", "parse_config",
    "Grid", "GridFunction", "GridMismatchError",
    "DoublePhase", "FractionalP", "LogType", "VariableExp", "PairQuadrature",
    "energy_subgradient", "nonlocal_energy",
    "SolverOptions", "StepProblem", "solve_step",
    "PiecewisePower", "PowerLaw", "lemma_suite",
    "Trajectory", "run_mm",
]
