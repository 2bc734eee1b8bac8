"""Minimax design of symmetric (type-I linear phase) FIR filters as an LP."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ParameterError
from .instance import EXTERNAL_ORACLE, ProblemInstance
from .lp import LinearProgram, lp_operator, lp_reference

__all__ = [
    "FilterDesignSpec",
    "cosine_basis",
    "band_grid",
    "lowpass_spec",
    "filter_lp",
    "minimax_filter_problem",
    "impulse_response",
    "frequency_response",
    "max_weighted_deviation",
]


def cosine_basis(omega, q: int) -> np.ndarray:
    """``F[j, i] = cos(omega_j * i)`` for ``i = 0..q``."""
    return np.cos(np.outer(np.asarray(omega, dtype=float), np.arange(q + 1)))


@dataclass(frozen=True)
class FilterDesignSpec:
    """Target amplitude ``d`` and weights ``W`` sampled at frequencies ``omega``.

    The amplitude of coefficients ``h`` is ``F h``; taps are recovered with
    :func:`impulse_response`.
    """

    q: int
    omega: np.ndarray
    d: np.ndarray
    W: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        d = np.asarray(self.d, dtype=float).reshape(-1)
        W = np.asarray(self.W, dtype=float).reshape(-1)
        m = d.size
        if self.q < 0:
            raise ParameterError(f"half-order must be >= 0, got {self.q}")
        if m < self.q + 1:
            raise ConfigurationError(f"need at least q+1 = {self.q + 1} frequencies, got {m}")
        if F.shape != (m, self.q + 1) or W.size != m:
            raise ConfigurationError(f"F is {F.shape}, d has {m} entries, W has {W.size}")
        if not np.all(W > 0):
            raise ParameterError("weights must be strictly positive")
        for name, val in (("F", F), ("d", d), ("W", W),
                          ("omega", np.asarray(self.omega, dtype=float).reshape(-1))):
            object.__setattr__(self, name, val)

    @property
    def m_freq(self) -> int:
        return self.d.size

    @classmethod
    def from_grid(cls, q: int, omega, d, W=None) -> "FilterDesignSpec":
        omega = np.asarray(omega, dtype=float)
        W = np.ones(omega.size) if W is None else W
        return cls(q, omega, d, W, cosine_basis(omega, q))


def band_grid(bands, m_freq: int) -> np.ndarray:
    """``m_freq`` frequencies spread evenly over the union of ``(lo, hi)`` bands."""
    widths = np.array([hi - lo for lo, hi in bands], dtype=float)
    if np.any(widths < 0):
        raise ParameterError("band edges must be increasing")
    counts = np.floor(m_freq * widths / widths.sum()).astype(int)
    counts[np.argmax(widths)] += m_freq - counts.sum()
    return np.concatenate([np.linspace(lo, hi, n) for (lo, hi), n in zip(bands, counts)])


def lowpass_spec(q: int = 36, m_freq: int = 1000, passband=(0.0, 0.4 * np.pi),
                 stopband=(0.5 * np.pi, np.pi), stop_weight: float = 1.0) -> FilterDesignSpec:
    """Unit gain on ``passband``, zero on ``stopband``."""
    omega = band_grid([passband, stopband], m_freq)
    in_pass = omega <= passband[1]
    d = in_pass.astype(float)
    W = np.where(in_pass, 1.0, stop_weight)
    return FilterDesignSpec.from_grid(q, omega, d, W)


def filter_lp(spec: FilterDesignSpec) -> LinearProgram:
    """Variables ``(h_0..h_q, delta)``: minimize ``delta`` s.t. ``|F h - d| <= W delta``."""
    F, W, d = spec.F, spec.W[:, None], spec.d
    n = spec.q + 1
    A = np.vstack([np.hstack([F, -W]), np.hstack([-F, -W]), np.r_[np.zeros(n), -1.0]])
    b = np.r_[d, -d, 0.0]
    c = np.r_[np.zeros(n), 1.0]
    return LinearProgram(A, b, c)


def minimax_filter_problem(spec: FilterDesignSpec) -> ProblemInstance:
    """The weighted minimax filter LP as a passive fixed-point problem.

    Decoding yields ``(h_0, ..., h_q, delta)``.
    """
    lp = filter_lp(spec)
    T, decode = lp_operator(lp, label=f"minimax-filter(q={spec.q}, m={spec.m_freq})")
    ref = lp_reference(lp)
    return ProblemInstance("minimax-filter", T, ref.z, EXTERNAL_ORACLE,
                           metadata={"q": spec.q, "m_freq": spec.m_freq, "delta": ref.x[-1]},
                           decode=decode, reference=ref.x, v0="zero")


def impulse_response(h) -> np.ndarray:
    """Symmetric taps on ``[0, 2q]`` whose amplitude response is ``sum_i h_i cos(omega i)``."""
    h = np.asarray(h, dtype=float)
    half = h[1:][::-1] / 2.0
    return np.concatenate([half, h[:1], half[::-1]])


def frequency_response(h, omega) -> np.ndarray:
    return cosine_basis(omega, len(h) - 1) @ np.asarray(h, dtype=float)


def max_weighted_deviation(spec: FilterDesignSpec, h) -> float:
    """``max_j |F h - d|_j / W_j``."""
    return float(np.max(np.abs(spec.F @ np.asarray(h, dtype=float) - spec.d) / spec.W))
