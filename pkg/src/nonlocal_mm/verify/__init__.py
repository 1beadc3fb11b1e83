"""Numerical audits of computed trajectories."""

from .checks import (
    BUMP_REGISTRY,
    ConstantInTime,
    MollifiedSolution,
    Perturbation,
    SmoothInTime,
    SpaceTimeBump,
    coercivity_check,
    comparison_registry,
    discrete_ibp_check,
    discrete_ibp_ladder,
    first_variation_check,
    initial_condition_check,
    mollifier_suite,
    poincare_constant,
    variational_inequality_residual,
    vi_audit,
    weak_form_ladder,
    weak_form_residual,
    weak_variational_inequality_check,
    weak_vi_audit,
)
from .timefields import MollifiedField, MollifierState, PiecewiseConstantField, mollify_time

__all__ = [
    "BUMP_REGISTRY", "ConstantInTime", "MollifiedSolution", "Perturbation", "SmoothInTime",
    "SpaceTimeBump", "coercivity_check", "comparison_registry", "discrete_ibp_check",
    "discrete_ibp_ladder", "first_variation_check", "initial_condition_check", "mollifier_suite", "poincare_constant",
    "variational_inequality_residual", "vi_audit", "weak_form_ladder", "weak_form_residual",
    "weak_variational_inequality_check", "weak_vi_audit",
    "MollifiedField", "MollifierState", "PiecewiseConstantField", "mollify_time",
]
