"""Largest inscribed ball (Chebyshev center) of a polytope ``{v : A v <= b}``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ParameterError
from .instance import EXTERNAL_ORACLE, ProblemInstance
from .lp import LinearProgram, lp_operator, lp_reference

__all__ = [
    "Polytope",
    "random_polytope",
    "unit_square",
    "triangle",
    "chebyshev_lp",
    "chebyshev_problem",
    "inscribed_radius",
    "BOX",
]

BOX = 1e3


@dataclass(frozen=True)
class Polytope:
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] < 1 or A.shape[1] < 1 or A.shape[0] != b.size:
            raise ConfigurationError(f"A is {A.shape} but b has {b.size} entries")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise ConfigurationError("polytope rows must be nonzero")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]

    def contains(self, v, tol: float = 0.0) -> bool:
        return bool(np.all(self.A @ np.asarray(v, dtype=float) <= self.b + tol))


def random_polytope(m: int, k: int, rng) -> Polytope:
    """Gaussian normalized facet normals with ``b_i = |g_i| + 0.1``, so the origin is interior."""
    if not m > k:
        raise ParameterError(f"need more faces than dimensions, got m={m}, k={k}")
    N = rng.standard_normal((m, k))
    A = N / np.linalg.norm(N, axis=1, keepdims=True)
    b = np.abs(rng.standard_normal(m)) + 0.1
    return Polytope(A, b)


def unit_square() -> Polytope:
    return Polytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 1, 1])


def triangle() -> Polytope:
    """``x >= 0``, ``y >= 0``, ``x + y <= 1`` with unit normals."""
    s = 1.0 / np.sqrt(2.0)
    return Polytope([[-1, 0], [0, -1], [s, s]], [0, 0, s])


def inscribed_radius(poly: Polytope, c) -> float:
    """Radius of the largest ball about ``c`` inside the polytope (negative outside)."""
    c = np.asarray(c, dtype=float)
    return float(np.min((poly.b - poly.A @ c) / np.linalg.norm(poly.A, axis=1)))


def chebyshev_lp(poly: Polytope) -> LinearProgram:
    """Variables ``(c, r)``: maximize ``r`` s.t. ``<a_i, c> + ||a_i|| r <= b_i`` and ``r >= 0``."""
    norms = np.linalg.norm(poly.A, axis=1)
    A = np.vstack([np.column_stack([poly.A, norms]), np.r_[np.zeros(poly.k), -1.0]])
    b = np.r_[poly.b, 0.0]
    c = np.r_[np.zeros(poly.k), -1.0]
    return LinearProgram(A, b, c)


def chebyshev_problem(poly: Polytope, box: float = BOX) -> ProblemInstance:
    """The Chebyshev-center LP as a passive fixed-point problem.

    The reference optimum is computed with the ``|x_i| <= box`` envelope;
    ``metadata["box_active"]`` records whether it touched the solution.
    Decoding yields ``(c_1, ..., c_k, r)``.

    Raises
    ------
    ConfigurationError
        If the polytope is empty or the ball is unbounded.
    """
    lp = chebyshev_lp(poly)
    T, decode = lp_operator(lp, label=f"chebyshev(m={poly.m}, k={poly.k})")
    try:
        ref = lp_reference(lp, box=box)
    except Exception as exc:
        raise ConfigurationError(f"polytope has no inscribed ball: {exc}") from exc
    if ref.box_active and ref.x[-1] >= box * (1 - 1e-9):
        raise ConfigurationError("polytope is unbounded: the inscribed radius hits the envelope")
    return ProblemInstance("chebyshev", T, ref.z, EXTERNAL_ORACLE,
                           metadata={"m": poly.m, "k": poly.k, "box_active": ref.box_active,
                                     "objective": ref.value},
                           decode=decode, reference=ref.x, v0="zero")
