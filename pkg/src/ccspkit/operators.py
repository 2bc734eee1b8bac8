"""System operators and the combinators used to assemble them.

A :class:`SystemOperator` is an immutable, deterministic map ``R^k -> R^k``.
Every operator built here accepts either a single state vector of shape
``(k,)`` or a stack of states of shape ``(n, k)`` evaluated row by row, which
is what the trial runner uses to advance many trajectories at once.

Two optional pieces of metadata travel with an operator:

``alpha``
    An everywhere-conic (Lipschitz) certificate. ``None`` means the operator
    is unclassified, never "passive by default".
``affine``
    A pair ``(A, b)`` when the operator is known to equal ``v -> A v + b``.
    The analysis module uses it to compute conic parameters exactly.

Composition order is "first element applied first": ``compose([T1, T2])``
evaluates ``T2(T1(v))``.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, NotNeutralError, ParameterError

__all__ = [
    "SystemOperator",
    "FilteredOperator",
    "HomotopyOperator",
    "SourceOperator",
    "NEUTRALITY_TOL",
    "make_operator",
    "make_affine",
    "identity",
    "filtered",
    "homotopy",
    "compose",
    "self_compose",
    "translate_to_zero",
    "make_source",
]

NEUTRALITY_TOL = 1e-8


def _as_matrix(A, name="A"):
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ConfigurationError(f"{name} must be a square matrix, got shape {A.shape}")
    A.setflags(write=False)
    return A


def _as_vector(b, k, name="b"):
    b = np.array(b, dtype=float, copy=True).reshape(-1)
    if b.shape != (k,):
        raise ConfigurationError(f"{name} must have length {k}, got {b.shape[0]}")
    b.setflags(write=False)
    return b


class SystemOperator:
    """An evaluable map from ``R^dim`` to ``R^dim``.

    Parameters
    ----------
    dim : int
        State dimension ``k``.
    fn : callable
        The map itself. When ``batched`` is true it must also accept an
        ``(n, dim)`` array and act on each row.
    label : str
        Free text used in reports.
    alpha : float, optional
        Everywhere-conic certificate.
    affine : tuple of ndarray, optional
        ``(A, b)`` such that the operator is ``v -> A v + b``.
    batched : bool
        Whether ``fn`` handles stacked states natively.
    """

    __slots__ = ("_dim", "_fn", "_label", "_alpha", "_affine", "_batched")

    def __init__(self, dim: int, fn: Callable, label: str = "", alpha: Optional[float] = None,
                 affine=None, batched: bool = True):
        dim = int(dim)
        if dim < 1:
            raise ConfigurationError(f"dimension must be positive, got {dim}")
        if alpha is not None:
            alpha = float(alpha)
            if alpha < 0:
                raise ParameterError(f"conic certificate must be nonnegative, got {alpha}")
        self._dim = dim
        self._fn = fn
        self._label = label
        self._alpha = alpha
        self._affine = affine
        self._batched = bool(batched)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def label(self) -> str:
        return self._label

    @property
    def alpha(self) -> Optional[float]:
        return self._alpha

    @property
    def affine(self):
        return self._affine

    @property
    def is_affine(self) -> bool:
        return self._affine is not None

    @property
    def batched(self) -> bool:
        return self._batched

    def __call__(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim not in (1, 2) or v.shape[-1] != self._dim:
            raise ConfigurationError(
                f"operator '{self._label}' expects states of length {self._dim}, got shape {v.shape}")
        if v.ndim == 2 and not self._batched:
            if v.shape[0] == 0:
                return np.empty_like(v)
            return np.stack([np.asarray(self._fn(row), dtype=float) for row in v])
        out = np.asarray(self._fn(v), dtype=float)
        if out.shape != v.shape:
            raise ConfigurationError(
                f"operator '{self._label}' returned shape {out.shape} for input {v.shape}")
        return out

    def __repr__(self):
        cert = "" if self._alpha is None else f", alpha={self._alpha:g}"
        return f"{type(self).__name__}(dim={self._dim}, label={self._label!r}{cert})"


class FilteredOperator(SystemOperator):
    """``rho * T(v) + (1 - rho) * v`` for a fixed ``rho > 0``."""

    __slots__ = ("inner", "rho")

    def __init__(self, inner: SystemOperator, rho: float):
        rho = float(rho)
        if not rho > 0 or not np.isfinite(rho):
            raise ParameterError(f"filter coefficient must be positive, got {rho}")
        self.inner = inner
        self.rho = rho

        def fn(v):
            return rho * inner(v) + (1.0 - rho) * v

        alpha = None if inner.alpha is None else rho * inner.alpha + abs(1.0 - rho)
        affine = None
        if inner.affine is not None:
            A, b = inner.affine
            affine = (rho * A + (1.0 - rho) * np.eye(inner.dim), rho * b)
        super().__init__(inner.dim, fn, label=f"filtered({inner.label}, rho={rho:g})",
                         alpha=alpha, affine=affine, batched=inner.batched)


class HomotopyOperator(SystemOperator):
    """``rho * T1(v) + (1 - rho) * T0(v)`` for ``rho`` in ``[0, 1]``."""

    __slots__ = ("t1", "t0", "rho")

    def __init__(self, t1: SystemOperator, t0: SystemOperator, rho: float):
        if t1.dim != t0.dim:
            raise ConfigurationError(f"homotopy endpoints differ in dimension: {t1.dim} vs {t0.dim}")
        rho = float(rho)
        if not 0.0 <= rho <= 1.0:
            raise ParameterError(f"homotopy parameter must lie in [0, 1], got {rho}")
        self.t1, self.t0, self.rho = t1, t0, rho

        def fn(v):
            return rho * t1(v) + (1.0 - rho) * t0(v)

        alpha = None
        if t1.alpha is not None and t0.alpha is not None:
            alpha = rho * t1.alpha + (1.0 - rho) * t0.alpha
        affine = None
        if t1.affine is not None and t0.affine is not None:
            (A1, b1), (A0, b0) = t1.affine, t0.affine
            affine = (rho * A1 + (1.0 - rho) * A0, rho * b1 + (1.0 - rho) * b0)
        super().__init__(t1.dim, fn, label=f"homotopy({t1.label}, {t0.label}, rho={rho:g})",
                         alpha=alpha, affine=affine, batched=t1.batched and t0.batched)


class SourceOperator(SystemOperator):
    """``S v + e`` with ``S`` orthogonal; passive everywhere."""

    __slots__ = ("s", "e", "deviation")

    def __init__(self, s, e, label: str = "source", tol: float = NEUTRALITY_TOL):
        s = _as_matrix(s, "S")
        k = s.shape[0]
        e = _as_vector(e, k, "e")
        deviation = float(np.linalg.norm(s.T @ s - np.eye(k), "fro"))
        if deviation > tol:
            raise NotNeutralError(deviation, tol)
        self.s, self.e, self.deviation = s, e, deviation
        st = s.T

        def fn(v):
            return v @ st + e

        super().__init__(k, fn, label=label, alpha=1.0, affine=(s, e))


def make_operator(dim: int, fn: Callable, label: str = "", alpha: Optional[float] = None,
                  batched: bool = False) -> SystemOperator:
    """Wrap an arbitrary callable as a system operator.

    ``batched`` defaults to False so that plain vector functions work
    unchanged; stacked inputs are then evaluated one row at a time.
    """
    return SystemOperator(dim, fn, label=label, alpha=alpha, batched=batched)


def make_affine(A, b=None, label: str = "affine", alpha: Optional[float] = None) -> SystemOperator:
    """The affine operator ``v -> A v + b``.

    Raises
    ------
    ConfigurationError
        If ``A`` is not square or ``b`` has the wrong length.
    """
    A = _as_matrix(A)
    k = A.shape[0]
    b = np.zeros(k) if b is None else b
    b = _as_vector(b, k)
    At = A.T

    def fn(v):
        return v @ At + b

    return SystemOperator(k, fn, label=label, alpha=alpha, affine=(A, b))


def identity(k: int) -> SystemOperator:
    return make_affine(np.eye(k), np.zeros(k), label="identity", alpha=1.0)


def filtered(T: SystemOperator, rho: float) -> FilteredOperator:
    """Relax ``T`` by the filter coefficient ``rho``.

    ``rho`` may exceed one (over-relaxation); whether that is stable is for
    :func:`ccspkit.analysis.stable_filter_interval` to decide.
    """
    return FilteredOperator(T, rho)


def homotopy(T1: SystemOperator, T0: SystemOperator, rho: float) -> HomotopyOperator:
    return HomotopyOperator(T1, T0, rho)


def compose(ops: Sequence[SystemOperator], label: Optional[str] = None) -> SystemOperator:
    """Chain operators, applying ``ops[0]`` first.

    If every factor carries a certificate, the composite carries their
    product; if every factor is affine, so is the composite.
    """
    ops = list(ops)
    if not ops:
        raise ConfigurationError("compose needs at least one operator")
    k = ops[0].dim
    for op in ops:
        if op.dim != k:
            raise ConfigurationError(
                f"cannot compose operators of dimensions {[o.dim for o in ops]}")
    if len(ops) == 1:
        return ops[0]

    def fn(v):
        for op in ops:
            v = op(v)
        return v

    alpha = None
    if all(op.alpha is not None for op in ops):
        alpha = float(np.prod([op.alpha for op in ops]))
    affine = None
    if all(op.affine is not None for op in ops):
        A, b = np.eye(k), np.zeros(k)
        for op in ops:
            Ai, bi = op.affine
            A, b = Ai @ A, Ai @ b + bi
        affine = (A, b)
    if label is None:
        label = " -> ".join(op.label for op in ops)
    return SystemOperator(k, fn, label=label, alpha=alpha, affine=affine,
                          batched=all(op.batched for op in ops))


def self_compose(T: SystemOperator, m: int) -> SystemOperator:
    """``T`` applied ``m`` times; ``m == 1`` returns ``T`` itself."""
    m = int(m)
    if m < 1:
        raise ParameterError(f"self-composition order must be >= 1, got {m}")
    if m == 1:
        return T
    return compose([T] * m, label=f"{T.label}^{m}")


def translate_to_zero(T: SystemOperator, v1) -> SystemOperator:
    """The conjugate ``v -> T(v + v1) - v1``.

    Its fixed-point set is that of ``T`` shifted by ``-v1``, and it is conic
    about the origin exactly when ``T`` is conic about ``v1``.
    """
    v1 = _as_vector(v1, T.dim, "v1")

    def fn(v):
        return T(v + v1) - v1

    affine = None
    if T.affine is not None:
        A, b = T.affine
        affine = (A, A @ v1 + b - v1)
    return SystemOperator(T.dim, fn, label=f"translate({T.label})", alpha=T.alpha,
                          affine=affine, batched=T.batched)


def make_source(S, e, label: str = "source", tol: float = NEUTRALITY_TOL) -> SourceOperator:
    """Source operator ``S v + e``; rejects ``S`` unless ``||S^T S - I||_F <= tol``."""
    return SourceOperator(S, e, label=label, tol=tol)
