"""Conic parameters, classification and convergence diagnostics.

Suprema over all directions cannot be computed for a black-box operator, so
:func:`estimate_conic` and :func:`estimate_mixing` sample directions
uniformly on the unit sphere at several scales and report the largest ratio
seen. The result is a lower bound on the true supremum. Operators that
declare themselves affine get the exact value (the spectral norm of their
linear part) instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import HypothesisError, ParameterError, PreconditionError
from .operators import SystemOperator

__all__ = [
    "DISSIPATIVE",
    "PASSIVE",
    "EXPANSIVE",
    "DEFAULT_SCALES",
    "ConicCertificate",
    "MixingEstimate",
    "BallRegion",
    "FilterInterval",
    "ConvergenceEstimate",
    "residual",
    "spectral_norm",
    "estimate_conic",
    "estimate_conic_everywhere",
    "classify",
    "estimate_mixing",
    "theta_squared",
    "async_contraction",
    "stable_filter_interval",
    "entrapment_ball",
    "entrapment_steps",
    "ball_condition",
    "ball_maps_into_itself",
    "stewart_check",
    "estimate_rate",
]

DISSIPATIVE = "dissipative"
PASSIVE = "passive"
EXPANSIVE = "expansive"

DEFAULT_SCALES = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
EXACT_BAND = 1e-6
SAMPLED_BAND = 0.02


@dataclass
class ConicCertificate:
    """Outcome of a conic-parameter estimate.

    ``scope`` is ``"about"`` for a single center, ``"everywhere-sampled"``
    when centers were sampled too, and ``"everywhere-exact"`` for affine
    operators. ``lower_bound`` is True for sampled estimates.
    """

    scope: str
    alpha_hat: float
    klass: str
    n_samples: int
    scales_probed: list
    center: Optional[np.ndarray] = None
    exact: bool = False
    lower_bound: bool = True
    unbounded: bool = False
    band: float = SAMPLED_BAND


@dataclass
class MixingEstimate:
    gamma_hat: float
    n_probes: int
    n_skipped: int


@dataclass(frozen=True)
class BallRegion:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ParameterError(f"ball radius must be nonnegative, got {self.radius}")

    def contains(self, v, slack: float = 0.0) -> bool:
        return bool(np.linalg.norm(np.asarray(v) - self.center) <= self.radius + slack)


@dataclass(frozen=True)
class FilterInterval:
    """Open interval ``(lower, upper)`` of filter coefficients with a provable rate."""

    lower: float
    upper: float
    rho_optimal: Optional[float]
    case: str = ""

    def contains(self, rho: float) -> bool:
        return self.lower < rho < self.upper


@dataclass
class ConvergenceEstimate:
    mu_hat: Optional[float]
    order_q_hat: Optional[float]
    K_hat: float
    fit_window: tuple
    fit_residual: float
    preferred: str
    linear_residual: float = math.nan
    polynomial_residual: float = math.nan


def residual(T: SystemOperator, v) -> float:
    """``||T(v) - v||``; zero exactly at fixed points."""
    v = np.asarray(v, dtype=float)
    return float(np.linalg.norm(T(v) - v))


def spectral_norm(A, tol: float = 1e-13, max_iter: int = 10000, seed: int = 0) -> float:
    """Largest singular value of ``A`` by power iteration on ``A^T A``."""
    A = np.asarray(A, dtype=float)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(max_iter):
        y = A.T @ (A @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        new = math.sqrt(ny)
        if abs(new - sigma) <= tol * max(new, 1.0):
            sigma = new
            break
        sigma = new
    return float(np.linalg.norm(A @ x))


def _unit_directions(rng, n, k):
    U = rng.standard_normal((n, k))
    norms = np.linalg.norm(U, axis=1)
    norms[norms == 0] = 1.0
    return U / norms[:, None]


def classify(cert_or_alpha, band: Optional[float] = None) -> str:
    """Assign the dissipative/passive/expansive class using a tolerance band."""
    if isinstance(cert_or_alpha, ConicCertificate):
        alpha = cert_or_alpha.alpha_hat
        if band is None:
            band = cert_or_alpha.band
    else:
        alpha = float(cert_or_alpha)
        if band is None:
            band = EXACT_BAND
    if alpha < 1.0 - band:
        return DISSIPATIVE
    if alpha > 1.0 + band:
        return EXPANSIVE
    return PASSIVE


def _ratios(T, center, U, scales):
    base = T(center)
    best = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for s in scales:
            out = T(center + s * U)
            num = np.linalg.norm(out - base, axis=1)
            r = num / s
            if not np.all(np.isfinite(r)):
                return math.inf
            best = max(best, float(r.max()))
    if not np.all(np.isfinite(base)):
        return math.inf
    return best


def estimate_conic(T: SystemOperator, center, n_dirs: int = 1000,
                   scales: Sequence[float] = DEFAULT_SCALES, rng=None,
                   exact: bool = True, band: Optional[float] = None) -> ConicCertificate:
    """Estimate the conic parameter of ``T`` about ``center``.

    The same ``n_dirs`` unit directions are reused at every scale, and a
    generator with a fixed seed yields nested direction sets, so the estimate
    never decreases as ``n_dirs`` grows.

    If ``exact`` is true and ``T`` is affine, the spectral norm of its linear
    part is returned instead (which does not depend on ``center``).
    """
    if n_dirs < 1:
        raise ParameterError(f"n_dirs must be >= 1, got {n_dirs}")
    scales = [float(s) for s in scales]
    if not scales or min(scales) <= 0:
        raise ParameterError("scales must be nonempty and positive")
    center = np.asarray(center, dtype=float)
    if exact and T.affine is not None:
        a = spectral_norm(T.affine[0])
        b = EXACT_BAND if band is None else band
        return ConicCertificate(scope="everywhere-exact", alpha_hat=a, klass=classify(a, b),
                                n_samples=0, scales_probed=[], center=center, exact=True,
                                lower_bound=False, band=b)
    rng = np.random.default_rng() if rng is None else rng
    U = _unit_directions(rng, n_dirs, T.dim)
    a = _ratios(T, center, U, scales)
    b = SAMPLED_BAND if band is None else band
    return ConicCertificate(scope="about", alpha_hat=a, klass=classify(a, b),
                            n_samples=n_dirs * len(scales), scales_probed=scales,
                            center=center, unbounded=not math.isfinite(a), band=b)


def estimate_conic_everywhere(T: SystemOperator, centers, n_dirs: int = 200,
                              scales: Sequence[float] = DEFAULT_SCALES, rng=None,
                              exact: bool = True, band: Optional[float] = None) -> ConicCertificate:
    """Maximum of :func:`estimate_conic` over a set of sampled centers."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    rng = np.random.default_rng() if rng is None else rng
    if exact and T.affine is not None:
        return estimate_conic(T, centers[0], n_dirs, scales, rng, exact=True, band=band)
    best, n = 0.0, 0
    for c in centers:
        cert = estimate_conic(T, c, n_dirs, scales, rng, exact=False, band=band)
        best = max(best, cert.alpha_hat)
        n += cert.n_samples
    b = SAMPLED_BAND if band is None else band
    return ConicCertificate(scope="everywhere-sampled", alpha_hat=best, klass=classify(best, b),
                            n_samples=n, scales_probed=[float(s) for s in scales],
                            unbounded=not math.isfinite(best), band=b)


def estimate_mixing(T: SystemOperator, vstar, n_dirs: int = 1000,
                    scales: Sequence[float] = DEFAULT_SCALES, rng=None,
                    fixed_tol: float = 1e-8) -> MixingEstimate:
    """Largest sampled cosine between ``T(v) - v*`` and ``v - v*``.

    Probes at which ``T(v) = v*`` or ``T(v) = v`` (the cosine is undefined or
    ``v`` is itself fixed) are skipped and counted.

    Raises
    ------
    PreconditionError
        If ``vstar`` is not a fixed point within ``fixed_tol``.
    """
    vstar = np.asarray(vstar, dtype=float)
    r = residual(T, vstar)
    if not r <= fixed_tol:
        raise PreconditionError(f"reference point is not a fixed point: residual {r:.3g}")
    rng = np.random.default_rng() if rng is None else rng
    U = _unit_directions(rng, n_dirs, T.dim)
    best, skipped, probes = -1.0, 0, 0
    for s in scales:
        V = vstar + float(s) * U
        TV = T(V)
        a = TV - vstar
        b = V - vstar
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        moved = np.linalg.norm(TV - V, axis=1)
        ok = (na > 0) & (nb > 0) & (moved > 0) & np.isfinite(na)
        skipped += int((~ok).sum())
        probes += len(V)
        if ok.any():
            cos = np.einsum("ij,ij->i", a[ok], b[ok]) / (na[ok] * nb[ok])
            best = max(best, float(np.clip(cos, -1.0, 1.0).max()))
    return MixingEstimate(gamma_hat=best, n_probes=probes, n_skipped=skipped)


def theta_squared(rho, alpha: float, gamma: float):
    """Per-step squared contraction bound of a filtered step about a fixed point."""
    rho = np.asarray(rho, dtype=float)
    return (alpha**2 + 1 - 2 * alpha * gamma) * rho**2 + (2 * alpha * gamma - 2) * rho + 1


def async_contraction(rho, alpha: float, gamma: float, p: float):
    """Mean-square per-step bound for the asynchronous filtered step."""
    rho = np.asarray(rho, dtype=float)
    return p * (alpha**2 + 1 - 2 * alpha * gamma) * rho**2 + p * (2 * alpha * gamma - 2) * rho + 1


def stable_filter_interval(alpha: float, gamma: Optional[float] = None,
                           band: float = EXACT_BAND) -> FilterInterval:
    """Filter coefficients for which the filtered operator provably converges.

    Without a mixing parameter this covers the dissipative case
    (``(0, 2/(1+alpha))``) and the passive case (``(0, 1)``, optimum 1/2).
    With ``gamma`` it returns ``(0, 2(1-a g)/(1+a^2-2 a g))`` and the
    midpoint as the optimum, valid for any ``alpha`` with ``a g < 1``.

    Raises
    ------
    HypothesisError
        For an expansive ``alpha`` without ``gamma``, or if ``gamma >= 1``
        or ``alpha * gamma >= 1``.
    """
    alpha = float(alpha)
    if alpha < 0:
        raise ParameterError(f"alpha must be nonnegative, got {alpha}")
    if gamma is None:
        kind = classify(alpha, band)
        if kind == PASSIVE:
            return FilterInterval(0.0, 1.0, 0.5, case=PASSIVE)
        if kind == DISSIPATIVE:
            return FilterInterval(0.0, 2.0 / (1.0 + alpha), 1.0, case=DISSIPATIVE)
        raise HypothesisError("an expansive operator needs a mixing parameter gamma")
    gamma = float(gamma)
    if not -1.0 <= gamma < 1.0:
        raise HypothesisError(f"mixing parameter must lie in [-1, 1), got {gamma}")
    if alpha * gamma >= 1.0:
        raise HypothesisError(f"alpha * gamma = {alpha * gamma:.6g} must be < 1")
    denom = 1.0 + alpha**2 - 2.0 * alpha * gamma
    return FilterInterval(0.0, 2.0 * (1.0 - alpha * gamma) / denom,
                          (1.0 - alpha * gamma) / denom, case="mixing")


def entrapment_ball(T: SystemOperator, c, alpha: float) -> BallRegion:
    """Ball ``B(c, ||T(c) - c|| / (1 - alpha))`` that eventually traps every trajectory.

    Callers add their own margin ``epsilon`` to the radius.
    """
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"entrapment needs alpha in [0, 1), got {alpha}")
    c = np.asarray(c, dtype=float)
    return BallRegion(c, residual(T, c) / (1.0 - alpha))


def entrapment_steps(alpha: float, dist0: float, eps: float, p: float = 1.0) -> int:
    """Steps after which ``(1 - p(1-alpha))^n * dist0 < eps``."""
    q = 1.0 - p * (1.0 - alpha)
    if dist0 < eps:
        return 0
    if q <= 0.0:
        return 1
    return int(math.floor(math.log(eps / dist0) / math.log(q))) + 1


def ball_condition(T: SystemOperator, ball: BallRegion, alpha: float) -> bool:
    """Does ``||c - T(c)|| <= (1 - alpha) r`` hold for the ball ``B(c, r)``?"""
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"ball condition needs alpha in [0, 1), got {alpha}")
    return residual(T, ball.center) <= (1.0 - alpha) * ball.radius


def ball_maps_into_itself(T: SystemOperator, ball: BallRegion, n_samples: int = 1000,
                          rng=None, slack: float = 1e-12) -> bool:
    """Sampled check that ``T`` maps the ball into itself (interior and boundary points)."""
    rng = np.random.default_rng() if rng is None else rng
    k = T.dim
    U = _unit_directions(rng, n_samples, k)
    radii = ball.radius * rng.random(n_samples) ** (1.0 / k)
    radii[: n_samples // 4] = ball.radius
    V = ball.center + radii[:, None] * U
    d = np.linalg.norm(T(V) - ball.center, axis=1)
    return bool(np.all(d <= ball.radius * (1 + slack) + slack))


def stewart_check(v, Tv, vstar, rho: float, relative: bool = False) -> float:
    """Residual of the filtered-update distance identity.

    Compares ``||rho Tv + (1-rho) v - v*||^2`` with
    ``rho ||Tv - v*||^2 + (1-rho) ||v - v*||^2 - rho (1-rho) ||Tv - v||^2``.
    With ``relative`` the residual is divided by the largest term involved.
    """
    v, Tv, vstar = (np.asarray(a, dtype=float) for a in (v, Tv, vstar))
    lhs = float(np.sum((rho * Tv + (1 - rho) * v - vstar) ** 2))
    a = float(np.sum((Tv - vstar) ** 2))
    b = float(np.sum((v - vstar) ** 2))
    c = float(np.sum((Tv - v) ** 2))
    rhs = rho * a + (1 - rho) * b - rho * (1 - rho) * c
    res = abs(lhs - rhs)
    if relative:
        scale = max(abs(lhs), abs(rho) * a, abs(1 - rho) * b, abs(rho * (1 - rho)) * c)
        return res / scale if scale > 0 else 0.0
    return res


def _fit(x, y):
    coef, *_ = np.linalg.lstsq(np.column_stack([np.ones_like(x), x]), y, rcond=None)
    resid = y - (coef[0] + coef[1] * x)
    return coef, float(np.sqrt(np.mean(resid**2)))


def estimate_rate(traj, vstar=None, *, index=None, tail: float = 0.5,
                  floor: float = 0.0) -> ConvergenceEstimate:
    """Fit a linear rate and a polynomial order to a distance curve.

    A log-linear fit ``log d = log K + n log mu`` and a log-log fit
    ``log d = log K - q log n`` are made over the last ``tail`` fraction of
    points; the one with the smaller RMS residual is ``preferred``. Values at
    or below ``floor`` count as arrival at the fixed point, and only the
    points before the first arrival are used.

    ``traj`` is a :class:`~ccspkit.protocols.Trajectory` (distances are
    taken from it, or computed from its states when ``vstar`` is given, and
    indexed by equivalent iterations), or a plain sequence of distances,
    indexed ``1, 2, 3, ...`` unless ``index`` is supplied.
    """
    if hasattr(traj, "states"):
        if vstar is not None:
            d = np.linalg.norm(traj.states - np.asarray(vstar, dtype=float), axis=1)
        elif traj.distances is not None:
            d = traj.distances
        else:
            raise PreconditionError("trajectory carries no distances; pass vstar")
        if index is None:
            index = traj.equivalent_iterations
    else:
        d = traj
        if index is None:
            index = np.arange(1, len(d) + 1, dtype=float)
    d = np.asarray(d, dtype=float)
    x = np.asarray(index, dtype=float)
    arrived = np.nonzero(~(d > floor))[0]
    if arrived.size:
        d, x = d[: arrived[0]], x[: arrived[0]]
    if len(d) < 10:
        raise PreconditionError(f"need at least 10 points before arrival, have {len(d)}")
    lo = int(len(d) * (1.0 - tail))
    lo = min(lo, len(d) - 3)
    xs, ys = x[lo:], np.log(d[lo:])
    (a_lin, b_lin), r_lin = _fit(xs, ys)
    pos = xs > 0
    if pos.sum() >= 3:
        (a_pol, b_pol), r_pol = _fit(np.log(xs[pos]), ys[pos])
    else:
        a_pol, b_pol, r_pol = math.nan, math.nan, math.inf
    mu = math.exp(b_lin)
    mu_hat = mu if 0.0 < mu < 1.0 else None
    q_hat = -b_pol if (math.isfinite(b_pol) and b_pol < 0) else None
    if r_lin <= r_pol:
        preferred, K, res = "linear", math.exp(a_lin), r_lin
    else:
        preferred, K, res = "polynomial", math.exp(a_pol), r_pol
    return ConvergenceEstimate(mu_hat=mu_hat, order_q_hat=q_hat, K_hat=K,
                               fit_window=(lo, len(d)), fit_residual=res, preferred=preferred,
                               linear_residual=r_lin, polynomial_residual=r_pol)
