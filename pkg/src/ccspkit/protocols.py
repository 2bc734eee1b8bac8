"""Synchronous and asynchronous state evolution.

The synchronous protocol applies the operator to the whole state each step.
The asynchronous protocol evaluates the operator in full, then keeps each
coordinate of the result independently with probability ``p`` and holds the
previous value otherwise (a Bernoulli sample-and-hold per state element).

Randomness is counter-based: trial ``i`` under seed ``s`` draws its masks
from a Philox stream keyed by ``(s, i)``, consuming exactly ``k`` uniforms
per step, so step ``n`` of a trial always sees the same mask regardless of
how many trials run or in what order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, ParameterError
from .operators import SystemOperator

__all__ = [
    "SYNC",
    "ASYNC",
    "IterationConfig",
    "Trajectory",
    "FiringMask",
    "AggregateSeries",
    "trial_rng",
    "bernoulli_mask",
    "run",
    "run_synchronous",
    "run_asynchronous",
    "run_trials",
    "expected_sq_distance_exhaustive",
]

SYNC = "synchronous"
ASYNC = "asynchronous"
_ALIASES = {"sync": SYNC, "synchronous": SYNC, "async": ASYNC, "asynchronous": ASYNC}

_MASK_STREAM = 0
_INIT_STREAM = 1


@dataclass(frozen=True)
class IterationConfig:
    """Protocol choice and stopping rule.

    ``residual_tol`` stops a run once ``||T(v) - v||`` falls to or below it;
    the default of zero only stops on exact fixed points.
    ``divergence_norm`` stops a run whose state norm exceeds it.
    """

    protocol: str = SYNC
    p: float = 1.0
    max_steps: int = 1000
    residual_tol: float = 0.0
    record_every: int = 1
    seed: int = 0
    divergence_norm: float = float("inf")

    def __post_init__(self):
        proto = _ALIASES.get(str(self.protocol).lower())
        if proto is None:
            raise ConfigurationError(f"unknown protocol {self.protocol!r}")
        object.__setattr__(self, "protocol", proto)
        if proto == ASYNC and not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"firing probability must lie in [0, 1], got {self.p}")
        if self.max_steps < 1:
            raise ConfigurationError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.record_every < 1:
            raise ConfigurationError(f"record_every must be >= 1, got {self.record_every}")
        if self.residual_tol < 0:
            raise ParameterError(f"residual_tol must be nonnegative, got {self.residual_tol}")

    @property
    def rate(self) -> float:
        """Equivalent iterations advanced per step (``p``, or 1 when synchronous)."""
        return self.p if self.protocol == ASYNC else 1.0

    def replace(self, **changes) -> "IterationConfig":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return IterationConfig(**kw)


@dataclass
class Trajectory:
    """A recorded state evolution sequence.

    All per-record series share one length. ``steps`` holds the step index
    ``n`` of each record and ``equivalent_iterations`` holds ``n * p``.
    """

    states: np.ndarray
    residuals: np.ndarray
    steps: np.ndarray
    equivalent_iterations: np.ndarray
    steps_taken: int
    terminated_by: str
    distances: Optional[np.ndarray] = None
    diverged: bool = False

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class FiringMask:
    """Diagonal of the binary firing matrix for one asynchronous step."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag)
        if not np.all((d == 0) | (d == 1)):
            raise ConfigurationError("firing mask entries must be 0 or 1")

    def apply(self, Tv, v):
        return np.where(self.diag.astype(bool), Tv, v)


@dataclass
class AggregateSeries:
    """Trial-averaged distance curve for one protocol setting."""

    protocol: str
    p: float
    rho: float
    steps: np.ndarray
    equivalent_iterations: np.ndarray
    mean_dist: np.ndarray
    mean_sq_dist: np.ndarray
    trials: int
    n_diverged: int = 0

    def __len__(self):
        return len(self.steps)


def trial_rng(seed: int, trial: int = 0, stream: int = _MASK_STREAM) -> np.random.Generator:
    """Counter-based generator for one trial's masks (or initial state)."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(trial), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def bernoulli_mask(k: int, p: float, rng: np.random.Generator) -> FiringMask:
    """``k`` independent Bernoulli(p) firing indicators."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"firing probability must lie in [0, 1], got {p}")
    return FiringMask((rng.random(k) < p).astype(np.int8))


def _check_start(T: SystemOperator, v0):
    v0 = np.array(v0, dtype=float).reshape(-1)
    if v0.shape != (T.dim,):
        raise ConfigurationError(f"initial state has length {v0.shape[0]}, operator dim is {T.dim}")
    return v0


def _evolve(T, v0, cfg, vstar, draw_mask):
    v = _check_start(T, v0)
    if vstar is not None:
        vstar = _check_start(T, vstar)
    rate = cfg.rate
    states, residuals, steps = [], [], []
    terminated_by, diverged = "max_steps", False
    n = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            Tv = T(v)
            finite = np.all(np.isfinite(Tv))
            r = float(np.linalg.norm(Tv - v)) if finite else float("inf")
            last = n == cfg.max_steps or r <= cfg.residual_tol or not finite
            if n % cfg.record_every == 0 or last:
                states.append(v.copy())
                residuals.append(r)
                steps.append(n)
            if not finite:
                terminated_by, diverged = "divergence", True
                break
            if r <= cfg.residual_tol:
                terminated_by = "tolerance"
                break
            if n == cfg.max_steps:
                break
            v = Tv if draw_mask is None else np.where(draw_mask(), Tv, v)
            n += 1
            if not np.linalg.norm(v) <= cfg.divergence_norm:
                states.append(v.copy())
                residuals.append(float("nan"))
                steps.append(n)
                terminated_by, diverged = "divergence", True
                break
    states = np.array(states)
    steps = np.array(steps, dtype=np.int64)
    dist = None
    if vstar is not None:
        dist = np.linalg.norm(states - vstar, axis=1)
    return Trajectory(states=states, residuals=np.array(residuals), steps=steps,
                      equivalent_iterations=steps * rate, steps_taken=n,
                      terminated_by=terminated_by, distances=dist, diverged=diverged)


def run_synchronous(T: SystemOperator, v0, cfg: IterationConfig, vstar=None) -> Trajectory:
    """Iterate ``v^n = T(v^{n-1})``.

    Stops on ``residual_tol``, ``max_steps`` or a non-finite state; the last
    case sets ``diverged`` rather than raising.
    """
    return _evolve(T, v0, cfg.replace(protocol=SYNC), vstar, None)


def run_asynchronous(T: SystemOperator, v0, cfg: IterationConfig, vstar=None,
                     trial: int = 0) -> Trajectory:
    """Iterate ``v^n = D T(v^{n-1}) + (I - D) v^{n-1}`` with a fresh mask ``D`` per step."""
    if cfg.protocol != ASYNC:
        raise ConfigurationError("run_asynchronous needs an asynchronous configuration")
    rng = trial_rng(cfg.seed, trial)
    k, p = T.dim, cfg.p

    def draw():
        return rng.random(k) < p

    return _evolve(T, v0, cfg, vstar, draw)


def run(T: SystemOperator, v0, cfg: IterationConfig, vstar=None, trial: int = 0) -> Trajectory:
    """Dispatch on ``cfg.protocol``."""
    if cfg.protocol == SYNC:
        return run_synchronous(T, v0, cfg, vstar)
    return run_asynchronous(T, v0, cfg, vstar, trial=trial)


def run_trials(T: SystemOperator, v0_sampler: Callable, cfg: IterationConfig, n_trials: int,
               vstar, observe: Optional[Callable] = None, reference=None,
               rho: float = 1.0, batch_size: int = 1000, chunk: int = 128) -> AggregateSeries:
    """Average distance-to-fixed-point curves over independent trials.

    Every trial runs the full ``max_steps`` horizon (``residual_tol`` is not
    used here) so the curves stay aligned. Trials are advanced together in
    batches of ``batch_size``; results do not depend on the batch size
    beyond floating-point summation order.

    Parameters
    ----------
    v0_sampler : callable
        ``v0_sampler(rng) -> vector``, called with trial ``i``'s own
        initial-state generator.
    vstar : array_like
        Reference fixed point.
    observe : callable, optional
        Map applied to (stacked) states before measuring distance, e.g. a
        decoder to optimization variables. ``reference`` is then the point
        distances are measured to; it defaults to ``observe(vstar)``.
    rho : float
        Only recorded in the result, for labelling.
    """
    if n_trials < 1:
        raise ConfigurationError(f"n_trials must be >= 1, got {n_trials}")
    vstar = _check_start(T, vstar)
    if observe is None:
        ref = vstar
    else:
        ref = np.asarray(observe(vstar) if reference is None else reference, dtype=float)
    k = T.dim
    is_async = cfg.protocol == ASYNC
    p = cfg.p if is_async else 1.0
    rec = np.arange(0, cfg.max_steps + 1, cfg.record_every)
    if rec[-1] != cfg.max_steps:
        rec = np.append(rec, cfg.max_steps)
    n_rec = len(rec)
    sum_d = np.zeros(n_rec)
    sum_d2 = np.zeros(n_rec)
    n_div = 0

    for start in range(0, n_trials, batch_size):
        ids = range(start, min(start + batch_size, n_trials))
        V = np.stack([_check_start(T, v0_sampler(trial_rng(cfg.seed, i, _INIT_STREAM)))
                      for i in ids])
        rngs = [trial_rng(cfg.seed, i) for i in ids] if is_async else None
        masks, mpos = None, chunk
        bd = np.zeros((len(ids), n_rec))
        j = 0
        with np.errstate(over="ignore", invalid="ignore"):
            for n in range(cfg.max_steps + 1):
                if n == rec[j]:
                    X = V if observe is None else np.asarray(observe(V), dtype=float)
                    bd[:, j] = np.linalg.norm(X - ref, axis=1)
                    j += 1
                if n == cfg.max_steps:
                    break
                TV = T(V)
                if is_async:
                    if mpos == chunk:
                        masks = np.stack([g.random((chunk, k)) < p for g in rngs], axis=1)
                        mpos = 0
                    V = np.where(masks[mpos], TV, V)
                    mpos += 1
                else:
                    V = TV
        bad = ~np.all(np.isfinite(bd), axis=1)
        n_div += int(bad.sum())
        with np.errstate(over="ignore", invalid="ignore"):
            sum_d += bd.sum(axis=0)
            sum_d2 += (bd**2).sum(axis=0)

    return AggregateSeries(protocol=cfg.protocol, p=p, rho=float(rho), steps=rec,
                           equivalent_iterations=rec * p, mean_dist=sum_d / n_trials,
                           mean_sq_dist=sum_d2 / n_trials, trials=n_trials, n_diverged=n_div)


def expected_sq_distance_exhaustive(T: SystemOperator, v, vstar, p: float) -> float:
    """Exact ``E||v^1 - v*||^2`` after one asynchronous step from ``v``.

    Sums over all ``2^k`` firing patterns weighted by their probabilities;
    intended as a ground truth for small ``k``.
    """
    v = np.asarray(v, dtype=float)
    vstar = np.asarray(vstar, dtype=float)
    k = v.shape[0]
    if k > 20:
        raise ConfigurationError(f"exhaustive enumeration over 2^{k} masks is not supported")
    Tv = T(v)
    total = 0.0
    for bits in itertools.product((0, 1), repeat=k):
        d = np.array(bits, dtype=bool)
        fired = int(d.sum())
        w = p**fired * (1.0 - p) ** (k - fired)
        total += w * float(np.sum((np.where(d, Tv, v) - vstar) ** 2))
    return total
