"""Random orthogonal matrices via the polar factor of a Gaussian draw."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError, ProblemGenerationError

__all__ = ["nearest_orthogonal", "random_orthogonal", "random_orthogonal_bounded"]


def nearest_orthogonal(A) -> np.ndarray:
    """Orthogonal matrix closest to ``A`` in Frobenius norm (``U V^T`` from its SVD)."""
    u, s, vt = np.linalg.svd(np.asarray(A, dtype=float))
    if s[-1] <= s[0] * 1e-12:
        raise np.linalg.LinAlgError("matrix is numerically singular")
    return u @ vt


def random_orthogonal(k: int, rng) -> np.ndarray:
    """Project a ``k x k`` standard Gaussian matrix onto the orthogonal group.

    Singular draws (probability zero) are redrawn.
    """
    if k < 1:
        raise ParameterError(f"dimension must be >= 1, got {k}")
    while True:
        try:
            return nearest_orthogonal(rng.standard_normal((k, k)))
        except np.linalg.LinAlgError:
            continue


def random_orthogonal_bounded(k: int, rng, margin: float = 0.1, max_attempts: int = 10_000):
    """Rejection-sample :func:`random_orthogonal` until no eigenvalue is near -1.

    Returns
    -------
    Q : ndarray
        Accepted matrix; every eigenvalue satisfies ``|lambda + 1| >= margin``.
    attempts : int
        Number of candidates drawn, including the accepted one.

    Raises
    ------
    ProblemGenerationError
        If ``max_attempts`` candidates are rejected.
    """
    if not 0.0 < margin < 1.0:
        raise ParameterError(f"margin must lie in (0, 1), got {margin}")
    for attempt in range(1, max_attempts + 1):
        Q = random_orthogonal(k, rng)
        if np.min(np.abs(np.linalg.eigvals(Q) + 1.0)) >= margin:
            return Q, attempt
    raise ProblemGenerationError(
        f"no orthogonal {k}x{k} matrix with eigenvalue margin {margin} in {max_attempts} draws")
