"""Trial sweeps over firing probabilities, figure presets and lemma reports."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import analysis as an
from .errors import ConfigurationError, HypothesisError, PreconditionError
from .io import emit_csv, emit_plot, parse_config
from .operators import SystemOperator, filtered, homotopy
from .problems.instance import ProblemInstance
from .problems.registry import make_map, make_problem, parse_params
from .protocols import ASYNC, SYNC, AggregateSeries, IterationConfig, run_trials

__all__ = [
    "ExperimentConfig",
    "AggregateResult",
    "PRESETS",
    "preset",
    "config_from_mapping",
    "build_operator",
    "v0_sampler",
    "run_experiment",
    "LemmaReport",
    "lemma_report",
]

V0_MODES = ("sphere-origin", "sphere-fixed", "zero")
FORMS = ("direct", "filtered", "homotopy")
METRICS = ("state", "decoded")


@dataclass(frozen=True)
class ExperimentConfig:
    """One figure-style study.

    ``grid`` lists ``(protocol, p)`` pairs. ``horizon`` and ``record_every``
    are in equivalent iterations, so each series runs ``ceil(horizon / p)``
    steps and records every ``round(record_every / p)`` steps. ``metric``
    chooses between distances of raw states to the reference fixed point and
    distances of decoded variables to the oracle optimum.
    """

    name: str
    problem: str
    params: dict = field(default_factory=dict)
    grid: tuple = ((SYNC, 1.0),)
    form: str = "direct"
    rho: float = 1.0
    base: str = "identity"
    n_trials: int = 1
    horizon: float = 100.0
    record_every: float = 1.0
    seed: int = 0
    v0: str = "sphere-origin"
    metric: str = "state"
    out_dir: Optional[str] = None

    def __post_init__(self):
        grid = tuple((IterationConfig(protocol=pr, p=float(p)).protocol, float(p))
                     for pr, p in self.grid)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "params", dict(self.params))
        if self.n_trials < 1:
            raise ConfigurationError(f"n_trials must be >= 1, got {self.n_trials}")
        for pr, p in grid:
            if pr == ASYNC and not p > 0:
                raise ConfigurationError("asynchronous grid entries need p > 0")
        if self.form not in FORMS:
            raise ConfigurationError(f"form must be one of {FORMS}, got {self.form!r}")
        if self.v0 not in V0_MODES:
            raise ConfigurationError(f"v0 must be one of {V0_MODES}, got {self.v0!r}")
        if self.metric not in METRICS:
            raise ConfigurationError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not self.horizon > 0 or not self.record_every > 0:
            raise ConfigurationError("horizon and record_every must be positive")

    @property
    def k(self):
        return self.params.get("k")

    def fingerprint(self) -> str:
        """Hash of everything that affects the numbers (the output directory excluded)."""
        text = repr((self.name, self.problem, sorted(self.params.items()), self.grid, self.form,
                     self.rho, self.base, self.n_trials, self.horizon, self.record_every,
                     self.seed, self.v0, self.metric))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class AggregateResult:
    config: ExperimentConfig
    series: list
    config_hash: str
    seed: int
    problem: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def by_p(self, p: float) -> AggregateSeries:
        for s in self.series:
            if s.p == p:
                return s
        raise KeyError(p)


def _grid_from_ps(ps):
    return tuple((SYNC, 1.0) if float(p) == 1.0 else (ASYNC, float(p)) for p in ps)


_PRESETS = {
    "fig6": dict(
        desk=ExperimentConfig(name="fig6", problem="passive-source", params={"k": 25},
                              grid=_grid_from_ps([0.2, 0.4, 0.6, 0.8, 1.0]), form="filtered",
                              rho=0.5, n_trials=200, horizon=200, v0="sphere-origin"),
        paper_changes=dict(n_trials=1000, horizon=400)),
    "fig7": dict(
        desk=ExperimentConfig(name="fig7", problem="exponential", params={"k": 50},
                              grid=_grid_from_ps([0.25, 0.5, 0.75, 1.0]), n_trials=200,
                              horizon=30, v0="sphere-fixed"),
        paper_changes=dict(n_trials=1000, params={"k": 100})),
    "fig8": dict(
        desk=ExperimentConfig(name="fig8", problem="chebyshev-random",
                              params={"m": 40, "k": 10}, grid=_grid_from_ps([0.2, 0.4, 0.6, 0.8]),
                              n_trials=50, horizon=2000, record_every=10, v0="zero",
                              metric="decoded"),
        paper_changes=dict(n_trials=500, params={"m": 200, "k": 100}, horizon=5000)),
    "fig10": dict(
        desk=ExperimentConfig(name="fig10", problem="filter-lowpass",
                              params={"q": 36, "m_freq": 1000}, grid=_grid_from_ps([0.1, 1.0]),
                              n_trials=1, horizon=1500, record_every=5, v0="zero",
                              metric="decoded"),
        paper_changes=dict(horizon=5000)),
}

PRESETS = tuple(_PRESETS)


def preset(name: str, scale: str = "desk") -> ExperimentConfig:
    """Figure preset at ``desk`` (quick) or ``paper`` (full) scale."""
    try:
        entry = _PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    if scale == "desk":
        return entry["desk"]
    if scale == "paper":
        return replace(entry["desk"], **entry["paper_changes"])
    raise ConfigurationError(f"scale must be 'desk' or 'paper', got {scale!r}")


def _as_list(v):
    return v if isinstance(v, list) else [v]


def config_from_mapping(cfg: dict, scale: str = "desk") -> ExperimentConfig:
    """Build a config from parsed key/value text.

    A ``preset`` key starts from that preset; ``param.<name>`` entries set
    problem parameters; ``p`` is a list of firing probabilities (1 meaning
    synchronous) and ``grid`` a list of ``sync`` or ``async:<p>`` items.
    """
    cfg = dict(cfg)
    base = preset(cfg.pop("preset"), scale) if "preset" in cfg else None
    kw = {}
    params = dict(base.params) if base else {}
    params.update(parse_params(f"{k[6:]}={v}" for k, v in cfg.items() if k.startswith("param.")))
    if "k" in cfg:
        params["k"] = int(cfg.pop("k"))
    for key in [k for k in cfg if k.startswith("param.")]:
        cfg.pop(key)
    kw["params"] = params
    if "p" in cfg:
        kw["grid"] = _grid_from_ps(_as_list(cfg.pop("p")))
    if "grid" in cfg:
        grid = []
        for item in _as_list(cfg.pop("grid")):
            proto, _, p = item.partition(":")
            grid.append((proto, float(p) if p else 1.0))
        kw["grid"] = tuple(grid)
    conv = {"name": str, "problem": str, "form": str, "base": str, "v0": str, "metric": str,
            "rho": float, "n_trials": int, "horizon": float, "record_every": float,
            "seed": int, "out_dir": str}
    for key, val in cfg.items():
        if key not in conv:
            raise ConfigurationError(f"unknown config key {key!r}")
        kw[key] = conv[key](val)
    if base is not None:
        return replace(base, **kw)
    if "problem" not in kw:
        raise ConfigurationError("config needs a 'problem' (or a 'preset')")
    kw.setdefault("name", kw["problem"])
    return ExperimentConfig(**kw)


def build_operator(inst: ProblemInstance, cfg: ExperimentConfig) -> SystemOperator:
    T = inst.operator
    if cfg.form == "filtered":
        return filtered(T, cfg.rho)
    if cfg.form == "homotopy":
        return homotopy(T, make_map(cfg.base, T.dim), cfg.rho)
    return T


def v0_sampler(mode: str, inst: ProblemInstance):
    k = inst.dim

    def sphere(rng):
        u = rng.standard_normal(k)
        return u / np.linalg.norm(u)

    if mode == "zero":
        return lambda rng: np.zeros(k)
    if mode == "sphere-fixed":
        return lambda rng: inst.vstar + sphere(rng)
    return sphere


def run_experiment(cfg: ExperimentConfig, out_dir=None, write: bool = True) -> AggregateResult:
    """Run every grid entry over ``cfg.n_trials`` trials and aggregate.

    Every series uses the same seed, so series share their initial states and
    mask streams (common random numbers). With ``write`` the CSV and SVG
    land in ``out_dir`` (or ``cfg.out_dir``) as ``<name>.csv`` and ``<name>.svg``.
    """
    inst = make_problem(cfg.problem, seed=cfg.seed, **cfg.params)
    if inst.vstar is None:
        raise PreconditionError(f"problem {cfg.problem!r} has no reference fixed point")
    T = build_operator(inst, cfg)
    sampler = v0_sampler(cfg.v0, inst)
    observe = inst.decode if cfg.metric == "decoded" else None
    if cfg.metric == "decoded" and observe is None:
        raise ConfigurationError(f"problem {cfg.problem!r} has no decoder")
    series = []
    for proto, p in cfg.grid:
        rate = p if proto == ASYNC else 1.0
        stride = max(1, int(round(cfg.record_every / rate)))
        steps = int(math.ceil(cfg.horizon / rate))
        it = IterationConfig(protocol=proto, p=p, max_steps=steps, record_every=stride,
                             seed=cfg.seed)
        series.append(run_trials(T, sampler, it, cfg.n_trials, inst.vstar, observe=observe,
                                 reference=inst.reference if observe else None, rho=cfg.rho))
    meta = {k: v for k, v in inst.metadata.items() if not isinstance(v, np.ndarray)}
    result = AggregateResult(config=cfg, series=series, config_hash=cfg.fingerprint(),
                             seed=cfg.seed, problem=meta)
    target = out_dir if out_dir is not None else cfg.out_dir
    if write and target is not None:
        target = Path(target)
        result.files["csv"] = emit_csv(series, target / f"{cfg.name}.csv")
        result.files["svg"] = emit_plot(series, target / f"{cfg.name}.svg",
                                        title=f"{cfg.name} [{result.config_hash}]")
    return result


@dataclass
class LemmaReport:
    """Ordered key/value findings; values are numbers, booleans or strings."""

    items: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.items[key]

    def to_text(self) -> str:
        lines = []
        for k, v in self.items.items():
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = f"{v:.10g}"
            elif isinstance(v, np.ndarray):
                v = ",".join(f"{x:.10g}" for x in v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def _fixed_set(T: SystemOperator):
    if T.affine is None:
        return "unknown"
    A, b = T.affine
    k = T.dim
    M = np.eye(k) - A
    rank = np.linalg.matrix_rank(M)
    if rank == k:
        return "unique"
    if rank == 0 and np.allclose(b, 0):
        return "all"
    lsq = np.linalg.lstsq(M, b, rcond=None)[0]
    return "affine subspace" if np.allclose(M @ lsq, b) else "empty"


def lemma_report(T: SystemOperator, centers: Optional[Sequence] = None, vstar=None,
                 n_dirs: int = 200, n_centers: int = 8, rng=None) -> LemmaReport:
    """Sample every lemma hypothesis that can be checked for ``T``.

    ``centers`` are points for the about-a-point estimates (entrapment and
    ball conditions); ``vstar`` enables the fixed-point and mixing checks.
    Items that cannot be decided are reported as ``"unknown"``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    rep = {"operator": T.label or "unnamed", "dim": T.dim}
    k = T.dim
    centers = [] if centers is None else [np.asarray(c, dtype=float).reshape(k) for c in centers]

    pts = list(centers)
    if vstar is not None:
        pts.append(np.asarray(vstar, dtype=float))
    pts += [s * rng.standard_normal(k) for s in np.geomspace(1.0, 10.0, n_centers)]
    every = an.estimate_conic_everywhere(T, np.array(pts), n_dirs=n_dirs, rng=rng)
    rep["everywhere.scope"] = every.scope
    rep["everywhere.alpha"] = float(every.alpha_hat)
    rep["everywhere.class"] = "unknown" if every.unbounded else every.klass
    rep["everywhere.lower_bound"] = every.lower_bound
    rep["fixed_point_set"] = _fixed_set(T)

    for i, c in enumerate(centers):
        cert = an.estimate_conic(T, c, n_dirs=n_dirs, rng=rng)
        pre = f"center[{i}]"
        rep[f"{pre}.alpha"] = float(cert.alpha_hat)
        rep[f"{pre}.class"] = "unknown" if cert.unbounded else cert.klass
        r = an.residual(T, c)
        rep[f"{pre}.residual"] = r
        if cert.klass == an.DISSIPATIVE and not cert.unbounded:
            ball = an.entrapment_ball(T, c, cert.alpha_hat)
            rep[f"{pre}.entrapment_radius"] = ball.radius
            rep[f"{pre}.lemma.dissipative_about_point"] = "satisfied"
            if r == 0.0:
                rep[f"{pre}.lemma.dissipative_about_fixed_point"] = "satisfied"

    alpha = every.alpha_hat
    kind = every.klass
    if every.unbounded:
        rep["lemma.dissipative_everywhere"] = "unknown"
    else:
        rep["lemma.dissipative_everywhere"] = "satisfied" if kind == an.DISSIPATIVE else "violated"
        rep["lemma.passive_everywhere"] = "satisfied" if kind == an.PASSIVE else "violated"

    gamma = None
    if vstar is not None:
        r = an.residual(T, vstar)
        rep["vstar.residual"] = r
        try:
            mix = an.estimate_mixing(T, vstar, n_dirs=n_dirs, rng=rng)
            gamma = mix.gamma_hat
            rep["mixing.gamma"] = gamma
            rep["mixing.skipped"] = mix.n_skipped
        except PreconditionError:
            rep["mixing.gamma"] = "unknown"

    interval = None
    if not every.unbounded:
        try:
            interval = an.stable_filter_interval(alpha, band=every.band)
        except HypothesisError:
            if gamma is not None:
                try:
                    interval = an.stable_filter_interval(alpha, gamma)
                    rep["lemma.expansive_everywhere"] = "satisfied"
                except HypothesisError:
                    rep["lemma.expansive_everywhere"] = "violated"
            else:
                rep["lemma.expansive_everywhere"] = "unknown"
    if interval is None:
        rep["filter.interval"] = "unknown"
    else:
        rep["filter.lower"] = interval.lower
        rep["filter.upper"] = interval.upper
        rep["filter.rho_optimal"] = interval.rho_optimal
    return LemmaReport(rep)


def load_config_text(text: str, scale: str = "desk") -> ExperimentConfig:
    return config_from_mapping(parse_config(text), scale)
