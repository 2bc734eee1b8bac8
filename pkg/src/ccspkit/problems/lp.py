"""Linear programs as fixed-point problems of a passive operator.

The optimality conditions of ``min c^T x  s.t.  A x <= b`` with a free ``x``
are written over the stacked state ``z = (x, s, y)`` (slack ``s`` and dual
``y``) as the intersection of

* the affine set ``L``: ``A x + s = b``, ``A^T y = -c``, ``c^T x + b^T y = 0``;
* the cone ``K``: ``s >= 0``, ``y >= 0``, ``x`` free.

The operator is the composition of the reflections across ``L`` and ``K``.
Both reflections are nonexpansive, so the composite is passive everywhere;
averaging it with the identity at ``rho = 1/2`` gives the Douglas-Rachford
iteration, and the ``x`` block of ``P_L(z)`` at a fixed point ``z`` solves
the LP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from ..errors import ConfigurationError, ProblemGenerationError
from ..operators import SystemOperator

__all__ = ["LinearProgram", "AffineProjector", "LpReference", "lp_operator", "lp_reference"]


@dataclass(frozen=True)
class LinearProgram:
    """``min c^T x`` subject to ``A x <= b``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if A.shape != (b.size, c.size):
            raise ConfigurationError(f"A is {A.shape}, b has {b.size} rows, c has {c.size} entries")
        for name, val in (("A", A), ("b", b), ("c", c)):
            object.__setattr__(self, name, val)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_cons(self) -> int:
        return self.b.size

    @property
    def state_dim(self) -> int:
        return self.n_vars + 2 * self.n_cons

    def split(self, z):
        n, m = self.n_vars, self.n_cons
        return z[..., :n], z[..., n:n + m], z[..., n + m:]


class AffineProjector:
    """Orthogonal projection onto the affine set ``L`` of an LP's optimality system.

    The Gram matrix of the constraint rows is block diagonal apart from the
    duality-gap row, so one thin SVD of ``A`` and a scalar Schur complement
    give the projection in ``O(mn)`` per state instead of a dense solve in
    ``n + 2m`` unknowns.
    """

    def __init__(self, lp: LinearProgram):
        A, b, c = lp.A, lp.b, lp.c
        U, S, Vt = np.linalg.svd(A, full_matrices=False)
        if S.size < lp.n_vars or S[-1] <= S[0] * 1e-12:
            raise ConfigurationError("constraint matrix must have full column rank")
        self.lp = lp
        self._U, self._V = U, Vt.T
        self._w = S**2 / (1.0 + S**2)
        self._inv_s2 = 1.0 / S**2
        self._u1, self._u2 = A @ c, A.T @ b
        self._h1, self._h2 = self._solve11(self._u1), self._solve22(self._u2)
        self._sigma = float(c @ c + b @ b - self._u1 @ self._h1 - self._u2 @ self._h2)
        if not self._sigma > 0:
            raise ConfigurationError("duality-gap row is dependent on the other constraints")

    def _solve11(self, r):
        # (A A^T + I)^{-1} r
        return r - ((r @ self._U) * self._w) @ self._U.T

    def _solve22(self, r):
        # (A^T A)^{-1} r
        return ((r @ self._V) * self._inv_s2) @ self._V.T

    def constraint_residual(self, z):
        """Residuals of the three equation blocks defining ``L``."""
        lp = self.lp
        x, s, y = lp.split(np.asarray(z, dtype=float))
        return x @ lp.A.T + s - lp.b, y @ lp.A + lp.c, x @ lp.c + y @ lp.b

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        lp = self.lp
        r1, r2, r3 = self.constraint_residual(z)
        g1, g2 = self._solve11(r1), self._solve22(r2)
        mu = (r3 - g1 @ self._u1 - g2 @ self._u2) / self._sigma
        mu_ = np.expand_dims(mu, -1)
        l1 = g1 - self._h1 * mu_
        l2 = g2 - self._h2 * mu_
        corr = np.concatenate([l1 @ lp.A + lp.c * mu_, l1, l2 @ lp.A.T + lp.b * mu_], axis=-1)
        return z - corr


def lp_operator(lp: LinearProgram, label: str = "lp"):
    """Reflect across ``L`` then across ``K``.

    Returns
    -------
    T : SystemOperator
        The passive composite, certified with ``alpha = 1``.
    decode : callable
        Maps a state (or stack of states) to ``x``, the first block of ``P_L(z)``.
    """
    proj = AffineProjector(lp)
    n = lp.n_vars

    def fn(z):
        w = 2.0 * proj(z) - z
        out = np.abs(w)
        out[..., :n] = w[..., :n]
        return out

    def decode(z):
        return proj(z)[..., :n]

    return SystemOperator(lp.state_dim, fn, label=label, alpha=1.0), decode


@dataclass(frozen=True)
class LpReference:
    x: np.ndarray
    y: np.ndarray
    value: float
    z: np.ndarray
    box_active: bool


def lp_reference(lp: LinearProgram, box: float = None) -> LpReference:
    """Primal-dual optimum from HiGHS, packed as a state of the LP operator.

    ``box`` adds ``|x_i| <= box`` bounds as a safety envelope; whether any of
    them is active at the optimum is reported.

    Raises
    ------
    ProblemGenerationError
        If the solver does not report an optimum.
    """
    bounds = (None, None) if box is None else (-box, box)
    res = linprog(lp.c, A_ub=lp.A, b_ub=lp.b, bounds=[bounds] * lp.n_vars, method="highs")
    if res.status != 0:
        raise ProblemGenerationError(f"reference LP solve failed: {res.message}")
    x = np.asarray(res.x, dtype=float)
    y = np.maximum(-np.asarray(res.ineqlin.marginals, dtype=float), 0.0)
    s = np.maximum(lp.b - lp.A @ x, 0.0)
    active = box is not None and bool(np.any(np.abs(x) >= box * (1 - 1e-9)))
    return LpReference(x=x, y=y, value=float(res.fun), z=np.concatenate([x, s, y]),
                       box_active=active)
