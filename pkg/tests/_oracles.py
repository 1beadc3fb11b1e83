"""Independent reference computations used by the tests.

These are deliberately written as plain loops over nodes, sharing no code
with the package's vectorized pair sums.
"""

import math

import numpy as np


def dense_pair_energy(points, interior, dx, dim, u, h_fn):
    """Sum of H dx^(2N) / r^N over ordered pairs with at least one interior node."""
    n = len(points)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j or not (interior[i] or interior[j]):
                continue
            r = math.dist(points[i], points[j])
            total += h_fn(u[i] - u[j], r) / r**dim * dx ** (2 * dim)
    return total


def linear_step_matrix(points, interior, dx, dim, A, s):
    """Matrix and exterior coupling of the quadratic energy for p = 2.

    Energy = sum over unordered pairs k_ij (v_i - v_j)^2 with
    k_ij = 2 dx^(2N) A / r^(N + 2 s). Returns (L, C) with
    dE/dv_int = 2 (L v_int - C v_ext).
    """
    idx_in = [i for i in range(len(points)) if interior[i]]
    idx_ex = [i for i in range(len(points)) if not interior[i]]
    pos_in = {i: a for a, i in enumerate(idx_in)}
    pos_ex = {i: a for a, i in enumerate(idx_ex)}
    L = np.zeros((len(idx_in), len(idx_in)))
    C = np.zeros((len(idx_in), len(idx_ex)))
    for i in idx_in:
        a = pos_in[i]
        for j in range(len(points)):
            if j == i:
                continue
            r = math.dist(points[i], points[j])
            k = 2.0 * dx ** (2 * dim) * A / r ** (dim + 2 * s)
            L[a, a] += k
            if interior[j]:
                L[a, pos_in[j]] -= k
            else:
                C[a, pos_ex[j]] += k
    return L, C


def linear_implicit_euler(points, interior, dx, dim, A, s, u0, h, steps):
    """Implicit Euler for the quadratic energy with b = identity.

    Each step solves (2 L + dx^N / h) x = 2 C d + (dx^N / h) x_prev, the
    normal equation of the step objective.
    """
    interior = np.asarray(interior)
    L, C = linear_step_matrix(points, interior, dx, dim, A, s)
    d = np.asarray(u0)[~interior]
    x = np.asarray(u0)[interior].copy()
    w = dx**dim / h
    M = 2.0 * L + w * np.eye(len(x))
    out = [x.copy()]
    for _ in range(steps):
        x = np.linalg.solve(M, 2.0 * C @ d + w * x)
        out.append(x.copy())
    return out
