"""Named problem builders, named maps for CCSP files, and instance persistence."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..operators import SystemOperator, identity, make_affine, make_operator
from .chebyshev import chebyshev_problem, random_polytope, triangle, unit_square
from .filters import FilterDesignSpec, cosine_basis, lowpass_spec, minimax_filter_problem
from .generators import (dissipative_affine_problem, exp_problem, passive_source_problem,
                         scalar_affine_problem, scaled_problem)
from .instance import CLOSED_FORM, ProblemInstance

__all__ = ["PROBLEMS", "MAPS", "make_problem", "make_map", "save_instance", "load_instance",
           "parse_params"]


def _rng(seed):
    return np.random.default_rng(int(seed))


def _identity(k=2, **_):
    T = identity(int(k))
    return ProblemInstance("identity", T, np.zeros(int(k)), CLOSED_FORM, {"k": int(k)})


def _exp_scalar(**_):
    return exp_problem(1, None, Q=[[1.0]], f=[0.0])


def _filter_onevar(**_):
    return minimax_filter_problem(FilterDesignSpec(0, [0.0, 1.0], [0.0, 1.0], [1.0, 1.0],
                                                   [[1.0], [1.0]]))


def _filter_exact(q=4, m_freq=50, seed=0, **_):
    q, m_freq = int(q), int(m_freq)
    omega = np.linspace(0, np.pi, m_freq)
    h0 = _rng(seed).standard_normal(q + 1)
    F = cosine_basis(omega, q)
    return minimax_filter_problem(FilterDesignSpec(q, omega, F @ h0, np.ones(m_freq), F))


PROBLEMS = {
    "identity": _identity,
    "passive-source": lambda k=25, seed=0, **_: passive_source_problem(int(k), _rng(seed)),
    "exponential": lambda k=50, seed=0, offset=3.0, **_: exp_problem(int(k), _rng(seed),
                                                                     offset=float(offset)),
    "exp-scalar": _exp_scalar,
    "dissipative-affine": lambda k=25, seed=0, scale=0.3, **_: dissipative_affine_problem(
        int(k), _rng(seed), float(scale)),
    "scalar-affine": lambda a=0.5, b=1.0, **_: scalar_affine_problem(float(a), float(b)),
    "scaled": lambda k=10, a=-1.1, **_: scaled_problem(int(k), float(a)),
    "chebyshev-square": lambda **_: chebyshev_problem(unit_square()),
    "chebyshev-triangle": lambda **_: chebyshev_problem(triangle()),
    "chebyshev-random": lambda m=40, k=10, seed=0, **_: chebyshev_problem(
        random_polytope(int(m), int(k), _rng(seed))),
    "filter-lowpass": lambda q=36, m_freq=1000, **_: minimax_filter_problem(
        lowpass_spec(int(q), int(m_freq))),
    "filter-onevar": _filter_onevar,
    "filter-exact": _filter_exact,
}


def make_problem(name: str, **params) -> ProblemInstance:
    """Build a registered problem; the name and parameters are kept in its metadata."""
    try:
        builder = PROBLEMS[name]
    except KeyError:
        raise ConfigurationError(f"unknown problem {name!r}; known: {', '.join(sorted(PROBLEMS))}")
    inst = builder(**params)
    inst.metadata["problem"] = name
    inst.metadata["params"] = dict(params)
    return inst


MAPS = {
    "identity": lambda k, **_: identity(k),
    "zero": lambda k, **_: make_affine(np.zeros((k, k)), label="zero", alpha=0.0),
    "scale": lambda k, factor=0.5, offset=0.0, **_: make_affine(
        float(factor) * np.eye(k), np.full(k, float(offset)), label=f"{factor}d+{offset}",
        alpha=abs(float(factor))),
    "exp": lambda k, offset=0.0, **_: make_operator(
        k, lambda d: np.exp(-d) + float(offset), label="exp(-d)", batched=True),
}


def make_map(name: str, k: int, **params) -> SystemOperator:
    """A named constraint map ``m`` of dimension ``k``."""
    try:
        return MAPS[name](int(k), **params)
    except KeyError:
        raise ConfigurationError(f"unknown map {name!r}; known: {', '.join(sorted(MAPS))}")


def parse_params(items) -> dict:
    """``["k=25", "scale=0.3"]`` -> ``{"k": 25, "scale": 0.3}``."""
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigurationError(f"expected key=value, got {item!r}")
        val = val.strip()
        for conv in (int, float):
            try:
                val = conv(val)
                break
            except ValueError:
                pass
        out[key.strip()] = val
    return out


def save_instance(inst: ProblemInstance, directory) -> Path:
    """Write ``metadata.txt`` (key = value) and one row-major text file per array.

    Only instances built through :func:`make_problem` can be reloaded, since
    the operator is identified by its registry name and parameters.
    """
    if "problem" not in inst.metadata:
        raise ConfigurationError("only registry-built instances can be saved")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"problem = {inst.metadata['problem']}", f"vstar_method = {inst.vstar_method}",
             f"v0 = {inst.v0}"]
    lines += [f"param.{k} = {v}" for k, v in inst.metadata["params"].items()]
    arrays = {"vstar": inst.vstar, "reference": inst.reference}
    for key, val in inst.metadata.items():
        if key in ("problem", "params"):
            continue
        if isinstance(val, np.ndarray):
            arrays[key] = val
        else:
            lines.append(f"meta.{key} = {val}")
    for key, arr in arrays.items():
        if arr is not None:
            np.savetxt(out / f"{key}.txt", np.atleast_2d(arr), fmt="%.17g")
            lines.append(f"array.{key} = {key}.txt")
    (out / "metadata.txt").write_text("\n".join(lines) + "\n")
    return out


def load_instance(directory, check: bool = True) -> ProblemInstance:
    """Rebuild a saved instance and (optionally) check it reproduces the stored arrays."""
    src = Path(directory)
    meta = {}
    for line in (src / "metadata.txt").read_text().splitlines():
        if line.strip():
            key, _, val = line.partition("=")
            meta[key.strip()] = val.strip()
    params = parse_params(f"{k[6:]}={v}" for k, v in meta.items() if k.startswith("param."))
    inst = make_problem(meta["problem"], **params)
    if check:
        for key, fname in meta.items():
            if not key.startswith("array."):
                continue
            name = key[6:]
            stored = np.loadtxt(src / fname, ndmin=2)
            current = inst.vstar if name == "vstar" else (
                inst.reference if name == "reference" else inst.metadata.get(name))
            if current is None or not np.array_equal(np.atleast_2d(current), stored):
                raise ConfigurationError(f"stored array {name!r} does not match the rebuilt instance")
    return inst
