"""Conservative constraint satisfaction problems in (G, m) form.

A problem pairs an orthogonal matrix ``G`` (the norm-preserving linear
constraint ``d = G c``) with a generally nonlinear map ``m`` (the constraint
``c = m(d)``). The state is kept in ``c`` coordinates, so the companion
operator is ``T(c) = m(G c)`` and a fixed point ``c*`` gives the solution
pair ``(c*, G c*)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigurationError, NotNeutralError, SolutionRejected
from .operators import NEUTRALITY_TOL, SystemOperator, compose, make_affine

__all__ = [
    "CONSERVATION_TOL",
    "CcspInstance",
    "CcspSolution",
    "make_ccsp",
    "verify_conservation",
    "ccsp_operator",
    "verify_solution",
    "load_ccsp",
]

CONSERVATION_TOL = 1e-8


@dataclass(frozen=True)
class CcspInstance:
    k: int
    G: np.ndarray
    m: SystemOperator
    orthogonality_deviation: float = 0.0
    conservation_deviation: float = 0.0


@dataclass(frozen=True)
class CcspSolution:
    c_star: np.ndarray
    d_star: np.ndarray
    residual_pair: tuple
    accepted: bool = True


def verify_conservation(inst: CcspInstance, n_samples: int = 1000, rng=None) -> float:
    """Largest sampled ``| ||c||^2 - ||G c||^2 | / ||c||^2``."""
    rng = np.random.default_rng() if rng is None else rng
    C = rng.standard_normal((n_samples, inst.k))
    n2 = np.sum(C**2, axis=1)
    g2 = np.sum((C @ inst.G.T) ** 2, axis=1)
    return float(np.max(np.abs(n2 - g2) / n2))


def make_ccsp(G, m: SystemOperator, tol: float = NEUTRALITY_TOL, n_samples: int = 1000,
              rng=None) -> CcspInstance:
    """Validate ``G`` and ``m`` and bundle them as a problem instance.

    Raises
    ------
    NotNeutralError
        If ``||G^T G - I||_F > tol``.
    ConfigurationError
        If ``G`` is not square or ``m`` has a different dimension.
    """
    G = np.array(G, dtype=float, copy=True)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ConfigurationError(f"G must be square, got shape {G.shape}")
    k = G.shape[0]
    if m.dim != k:
        raise ConfigurationError(f"m has dimension {m.dim}, G is {k}x{k}")
    dev = float(np.linalg.norm(G.T @ G - np.eye(k), "fro"))
    if dev > tol:
        raise NotNeutralError(dev, tol)
    G.setflags(write=False)
    inst = CcspInstance(k=k, G=G, m=m, orthogonality_deviation=dev)
    cons = verify_conservation(inst, n_samples, np.random.default_rng(0) if rng is None else rng)
    if cons > CONSERVATION_TOL:
        raise NotNeutralError(cons, CONSERVATION_TOL)
    return CcspInstance(k=k, G=G, m=m, orthogonality_deviation=dev, conservation_deviation=cons)


def ccsp_operator(inst: CcspInstance) -> SystemOperator:
    """``T(c) = m(G c)``; inherits the certificate of ``m`` since ``G`` is neutral."""
    g = make_affine(inst.G, label="G", alpha=1.0)
    return compose([g, inst.m], label=f"{inst.m.label} o G")


def verify_solution(inst: CcspInstance, c, d, tol: float = 1e-9) -> CcspSolution:
    """Check ``d = G c`` and ``c = m(d)`` to within ``tol``.

    Raises
    ------
    SolutionRejected
        Carrying the candidate and both residuals, if either exceeds ``tol``.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    d = np.asarray(d, dtype=float).reshape(-1)
    if c.shape != (inst.k,) or d.shape != (inst.k,):
        raise ConfigurationError(f"c and d must have length {inst.k}")
    rw = float(np.linalg.norm(d - inst.G @ c))
    rm = float(np.linalg.norm(c - inst.m(d)))
    ok = rw <= tol and rm <= tol
    sol = CcspSolution(c_star=c, d_star=d, residual_pair=(rw, rm), accepted=ok)
    if not ok:
        raise SolutionRejected(sol, tol)
    return sol


def load_ccsp(path, m_name: str, params: Optional[dict] = None) -> CcspInstance:
    """Build an instance from a row-major text file holding ``G`` and a registered map.

    ``m_name`` is looked up with :func:`ccspkit.problems.registry.make_map`.
    """
    from .problems.registry import make_map

    G = np.loadtxt(Path(path), ndmin=2)
    return make_ccsp(G, make_map(m_name, G.shape[0], **(params or {})))
