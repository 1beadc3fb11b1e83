"""Bracketed one-dimensional searches shared by the conjugate and the
coordinate-descent solver."""

from __future__ import annotations

import numpy as np

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, lo, hi, tol=1e-12, max_iter=200):
    """Minimize a unimodal ``f`` on ``[lo, hi]`` by golden-section search.

    ``lo`` and ``hi`` may be arrays; ``f`` must then act elementwise, so many
    independent searches run in lockstep. Returns ``(x, f(x))`` for the best
    point evaluated, endpoints included.
    """
    a = np.array(lo, dtype=float)
    b = np.array(hi, dtype=float)
    if np.any(b < a):
        raise ValueError("empty bracket")
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    for _ in range(max_iter):
        if np.all(b - a <= tol * (1.0 + np.abs(a) + np.abs(b))):
            break
        left = fc <= fd
        # keep [a, d] where the left probe wins, else [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + _INVPHI * (b - a))
        c_new = np.where(left, b - _INVPHI * (b - a), d)
        fd_new = np.where(left, fc, np.nan)
        fc_new = np.where(left, np.nan, fd)
        c, d = c_new, d_new
        need_c = np.isnan(fc_new)
        need_d = np.isnan(fd_new)
        if np.any(need_c):
            fc_new = np.where(need_c, f(c), fc_new)
        if np.any(need_d):
            fd_new = np.where(need_d, f(d), fd_new)
        fc, fd = fc_new, fd_new

    cand_x = [np.array(lo, dtype=float), np.array(hi, dtype=float), c, d]
    cand_f = [f(cand_x[0]), f(cand_x[1]), fc, fd]
    best_x = cand_x[0]
    best_f = cand_f[0]
    for x, fx in zip(cand_x[1:], cand_f[1:]):
        better = fx < best_f
        best_x = np.where(better, x, best_x)
        best_f = np.where(better, fx, best_f)
    if best_x.ndim == 0:
        return float(best_x), float(best_f)
    return best_x, best_f


def golden_section_max(f, lo, hi, tol=1e-12, max_iter=200):
    x, fx = golden_section_min(lambda t: -f(t), lo, hi, tol=tol, max_iter=max_iter)
    return x, -fx
