"""Reference computations written independently of the package under test."""

import numpy as np


def bisect(f, lo, hi, tol=1e-15, max_iter=200):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def omega():
    """Root of v = exp(-v) by bisection."""
    return bisect(lambda v: v - np.exp(-v), 0.0, 1.0)


def largest_singular_value(A):
    return float(np.sqrt(np.max(np.linalg.eigvalsh(A.T @ A))))


def chebyshev_grid(A, b, lo, hi, n=201, rounds=8):
    """Maximize min_i (b_i - a_i.c)/||a_i|| over a box by repeated grid refinement (2-D)."""
    norms = np.linalg.norm(A, axis=1)
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    best_c, best_r = None, -np.inf
    for _ in range(rounds):
        xs = np.linspace(lo[0], hi[0], n)
        ys = np.linspace(lo[1], hi[1], n)
        X, Y = np.meshgrid(xs, ys)
        P = np.column_stack([X.ravel(), Y.ravel()])
        r = np.min((b[None, :] - P @ A.T) / norms[None, :], axis=1)
        i = int(np.argmax(r))
        best_c, best_r = P[i], r[i]
        span = (hi - lo) / (n - 1) * 4
        lo, hi = best_c - span, best_c + span
    return best_c, best_r


def simplex_min(c, A, b, max_iter=10000):
    """Dense tableau simplex (Bland's rule) for min c.x s.t. A x <= b, x free, b >= 0.

    Free variables are split as x = xp - xm; slacks give the starting basis.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    m, n = A.shape
    if np.any(b < 0):
        raise ValueError("needs b >= 0 for the slack starting basis")
    T = np.zeros((m + 1, 2 * n + m + 1))
    T[:m, :n] = A
    T[:m, n:2 * n] = -A
    T[:m, 2 * n:2 * n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = c
    T[m, n:2 * n] = -c
    basis = list(range(2 * n, 2 * n + m))
    eps = 1e-12
    for _ in range(max_iter):
        enter = next((j for j in range(2 * n + m) if T[m, j] < -eps), None)
        if enter is None:
            break
        col = T[:m, enter]
        ratios = [(T[i, -1] / col[i], basis[i], i) for i in range(m) if col[i] > eps]
        if not ratios:
            raise ValueError("unbounded")
        _, _, row = min(ratios)
        T[row] /= T[row, enter]
        for i in range(m + 1):
            if i != row:
                T[i] -= T[i, enter] * T[row]
        basis[row] = enter
    else:
        raise RuntimeError("simplex iteration cap")
    z = np.zeros(2 * n + m)
    for i, j in enumerate(basis):
        z[j] = T[i, -1]
    x = z[:n] - z[n:2 * n]
    return x, float(c @ x)


def random_orthogonal_haar(k, rng):
    """Haar orthogonal matrix via QR with sign correction (independent of the polar factor)."""
    Z = rng.standard_normal((k, k))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))
