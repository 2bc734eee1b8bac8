"""Operators with known fixed points: the source, exponential and small fixtures."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError, ProblemGenerationError
from ..operators import SystemOperator, make_affine, make_source
from .instance import CLOSED_FORM, HIGH_PRECISION_SYNC, ProblemInstance
from .orthogonal import random_orthogonal, random_orthogonal_bounded

__all__ = [
    "OMEGA",
    "passive_source_problem",
    "exp_operator",
    "exp_problem",
    "dissipative_affine_problem",
    "scalar_affine_problem",
    "scaled_problem",
    "fixed_point_by_iteration",
]

# Root of v = exp(-v).
OMEGA = 0.5671432904097838

_SINGULAR_TOL = 1e-10


def passive_source_problem(k: int, rng, Q=None, f=None) -> ProblemInstance:
    """``T(v) = Q v + f`` with ``Q`` random orthogonal and ``f`` standard Gaussian.

    ``Q`` is redrawn while it has an eigenvalue within ``1e-10`` of ``+1``;
    the fixed point then solves ``(I - Q) v = f`` directly.
    """
    if k < 2:
        raise ParameterError(f"the source problem needs k >= 2, got {k}")
    given_q = Q is not None
    redraws = 0
    while True:
        if not given_q:
            Q = random_orthogonal(k, rng)
        Q = np.asarray(Q, dtype=float)
        if np.min(np.abs(np.linalg.eigvals(Q) - 1.0)) > _SINGULAR_TOL:
            break
        if given_q:
            raise ProblemGenerationError("I - Q is singular for the supplied Q")
        redraws += 1
    f = rng.standard_normal(k) if f is None else np.asarray(f, dtype=float)
    T = make_source(Q, f, label=f"source(k={k})")
    vstar = np.linalg.solve(np.eye(k) - Q, f)
    return ProblemInstance("passive-source", T, vstar, CLOSED_FORM,
                           metadata={"k": k, "redraws": redraws}, v0="sphere")


def exp_operator(Q, f) -> SystemOperator:
    """Coordinatewise ``T(v) = exp(-Q v) + f``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    f = np.asarray(f, dtype=float).reshape(-1)
    Qt = Q.T

    def fn(v):
        return np.exp(-(v @ Qt)) + f

    return SystemOperator(Q.shape[0], fn, label=f"exp(k={Q.shape[0]})")


def fixed_point_by_iteration(T: SystemOperator, v0, tol: float = 1e-12,
                             max_steps: int = 1_000_000) -> np.ndarray:
    """Plain synchronous iteration until ``||T(v) - v|| <= tol``.

    Raises
    ------
    ProblemGenerationError
        If the tolerance is not met within ``max_steps`` or the iterates
        stop being finite.
    """
    v = np.asarray(v0, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_steps):
            w = T(v)
            r = np.linalg.norm(w - v)
            if not np.isfinite(r):
                raise ProblemGenerationError("fixed-point iteration produced non-finite values")
            if r <= tol:
                return v
            v = w
    raise ProblemGenerationError(f"fixed-point iteration did not reach {tol:g} in {max_steps} steps")


def exp_problem(k: int, rng, Q=None, f=None, offset: float = 3.0, margin: float = 0.1,
                max_attempts: int = 10_000) -> ProblemInstance:
    """``T(v) = exp(-Q v) + f`` with ``Q`` orthogonal and eigenvalues kept away from -1.

    By default ``f = Q^T (offset + g)`` with ``g`` standard Gaussian, which
    puts ``Q v*`` near ``offset`` so that ``exp(-Q v)`` is small and the
    iteration settles; a centred Gaussian ``f`` makes the iteration blow up
    for typical draws. Pass ``Q`` and ``f`` to fix them explicitly.

    The fixed point comes from synchronous iteration started at the origin,
    run to a residual of ``1e-12``.
    """
    if k < 1:
        raise ParameterError(f"dimension must be >= 1, got {k}")
    attempts = 0
    if Q is None:
        Q, attempts = random_orthogonal_bounded(k, rng, margin=margin, max_attempts=max_attempts)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if f is None:
        f = Q.T @ (offset + rng.standard_normal(k))
    f = np.asarray(f, dtype=float).reshape(-1)
    T = exp_operator(Q, f)
    vstar = fixed_point_by_iteration(T, np.zeros(k))
    return ProblemInstance("exponential", T, vstar, HIGH_PRECISION_SYNC,
                           metadata={"k": k, "attempts": attempts, "margin": margin,
                                     "offset": offset, "Q": Q, "f": f}, v0="sphere")


def dissipative_affine_problem(k: int, rng, scale: float = 0.3) -> ProblemInstance:
    """``T(v) = scale * Q v + f``, dissipative everywhere with ``alpha = scale``."""
    if not 0.0 <= scale < 1.0:
        raise ParameterError(f"scale must lie in [0, 1), got {scale}")
    Q = random_orthogonal(k, rng)
    f = rng.standard_normal(k)
    T = make_affine(scale * Q, f, label=f"{scale:g}Q+f(k={k})", alpha=scale)
    vstar = np.linalg.solve(np.eye(k) - scale * Q, f)
    return ProblemInstance("dissipative-affine", T, vstar, CLOSED_FORM,
                           metadata={"k": k, "scale": scale}, v0="sphere")


def scalar_affine_problem(a: float = 0.5, b: float = 1.0) -> ProblemInstance:
    """``T(v) = a v + b`` on the real line."""
    if a == 1.0:
        raise ParameterError("a = 1 has no unique fixed point")
    T = make_affine([[a]], [b], label=f"{a:g}v+{b:g}", alpha=abs(a))
    return ProblemInstance("scalar-affine", T, np.array([b / (1.0 - a)]), CLOSED_FORM,
                           metadata={"a": a, "b": b}, v0="zero")


def scaled_problem(k: int, a: float = -1.1) -> ProblemInstance:
    """``T(v) = a v`` in ``R^k``; expansive when ``|a| > 1``."""
    T = make_affine(a * np.eye(k), np.zeros(k), label=f"{a:g}v(k={k})", alpha=abs(a))
    return ProblemInstance("scaled", T, np.zeros(k), CLOSED_FORM,
                           metadata={"k": k, "a": a}, v0="sphere")
