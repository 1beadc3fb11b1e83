"""Uniform JSON blocks emitted by every check."""

from __future__ import annotations

import math

import numpy as np


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else repr(val)
    return obj


def check_report(check: str, params: dict, value: float, passed: bool, **artifacts) -> dict:
    return jsonable({
        "check": check,
        "params": params,
        "slack_or_residual": value,
        "pass": bool(passed),
        "artifacts": artifacts,
    })
