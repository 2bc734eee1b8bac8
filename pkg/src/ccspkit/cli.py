"""Command-line entry point: ``ccsp run|classify|solve|presets``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from .errors import CcspError
from .experiments import PRESETS, config_from_mapping, lemma_report, preset, run_experiment
from .io import SEED_ENV, read_config
from .operators import filtered
from .problems.registry import PROBLEMS, make_problem, parse_params
from .protocols import IterationConfig, run


def _vector(text):
    return np.array([float(x) for x in text.split(",")])


def _cmd_presets(args):
    for name in PRESETS:
        cfg = preset(name, "desk")
        ps = ", ".join(f"{p:g}" for _, p in cfg.grid)
        print(f"{name}: problem={cfg.problem} form={cfg.form} p=[{ps}] trials(desk)={cfg.n_trials}")
    return 0


def _cmd_run(args):
    if args.config in PRESETS:
        mapping = {"preset": args.config}
        if os.environ.get(SEED_ENV, "").strip():
            mapping["seed"] = os.environ[SEED_ENV].strip()
        cfg = config_from_mapping(mapping, args.scale)
    else:
        cfg = config_from_mapping(read_config(args.config), args.scale)
    out = Path(args.out or cfg.out_dir or ".")
    result = run_experiment(cfg, out_dir=out)
    print(f"config_hash = {result.config_hash}")
    print(f"seed = {result.seed}")
    for s in result.series:
        print(f"series protocol={s.protocol} p={s.p:g} points={len(s)} "
              f"final_mean_dist={s.mean_dist[-1]:.6g} diverged={s.n_diverged}")
    for kind, path in result.files.items():
        print(f"{kind} = {path}")
    return 0


def _instance(args):
    params = parse_params(args.param)
    params.setdefault("seed", args.seed)
    return make_problem(args.problem, **params)


def _cmd_classify(args):
    inst = _instance(args)
    centers = [_vector(c) for c in args.center] if args.center else None
    rep = lemma_report(inst.operator, centers=centers, vstar=inst.vstar, n_dirs=args.samples,
                       rng=np.random.default_rng(args.seed))
    sys.stdout.write(rep.to_text())
    return 0


def _cmd_solve(args):
    inst = _instance(args)
    T = inst.operator if args.rho is None else filtered(inst.operator, args.rho)
    v0 = np.zeros(inst.dim) if args.v0 is None else _vector(args.v0)
    cfg = IterationConfig(protocol=args.protocol, p=args.p, max_steps=args.max_steps,
                          residual_tol=args.tol, seed=args.seed)
    traj = run(T, v0, cfg, vstar=inst.vstar)
    v = traj.final
    print(f"terminated_by = {traj.terminated_by}")
    print(f"steps = {traj.steps_taken}")
    print(f"residual = {an.residual(T, v):.6g}")
    if inst.decode is not None:
        print("solution = " + ",".join(f"{x:.12g}" for x in inst.decode(v)))
    else:
        print("fixed_point = " + ",".join(f"{x:.12g}" for x in v))
    if traj.steps_taken >= 10:
        # measured against the limit reached, since LP operators have many fixed points
        try:
            est = an.estimate_rate(traj, v, floor=1e-14)
            print(f"rate.preferred = {est.preferred}")
            print(f"rate.mu = {est.mu_hat if est.mu_hat is not None else 'none'}")
            print(f"rate.order = {est.order_q_hat if est.order_q_hat is not None else 'none'}")
        except CcspError as exc:
            print(f"rate = unknown ({exc})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccsp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment preset or config file")
    p.add_argument("config", help="preset name or path to a key = value config file")
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--out", help="output directory for CSV and SVG")
    p.set_defaults(func=_cmd_run)

    def problem_args(sp):
        sp.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
        sp.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
        sp.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("classify", help="print a lemma report for a problem operator")
    problem_args(p)
    p.add_argument("--center", action="append", metavar="VEC", help="comma-separated point")
    p.add_argument("--samples", type=int, default=200, help="directions per scale")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("solve", help="single run to a fixed point")
    problem_args(p)
    p.add_argument("--protocol", choices=("sync", "async"), default="sync")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=None, help="filter coefficient")
    p.add_argument("--max-steps", type=int, default=10000)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--v0", help="comma-separated initial state (default zero)")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("presets", help="list figure presets")
    p.set_defaults(func=_cmd_presets)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CcspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
