"""CSV and SVG output for aggregate results, and the key/value config format."""

from __future__ import annotations

import csv
import math
import os
from pathlib import Path
from typing import Iterable
from xml.sax.saxutils import escape

import numpy as np

from .errors import ConfigurationError
from .protocols import AggregateSeries

__all__ = ["CSV_HEADER", "emit_csv", "read_csv", "emit_plot", "parse_config", "read_config",
           "SEED_ENV"]

CSV_HEADER = ("protocol", "p", "rho", "eq_iter", "mean_dist", "mean_sq_dist", "trials")
SEED_ENV = "CCSP_SEED"


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def emit_csv(series: Iterable[AggregateSeries], path) -> Path:
    """One row per recorded point of every series, 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in series:
            for e, d, d2 in zip(s.equivalent_iterations, s.mean_dist, s.mean_sq_dist):
                w.writerow([s.protocol, _fmt(s.p), _fmt(s.rho), _fmt(e), _fmt(d), _fmt(d2), s.trials])
    return path


def read_csv(path) -> list:
    """Parse a file written by :func:`emit_csv` back into series.

    ``steps`` is not stored, so it is reconstructed as ``eq_iter / p``
    (rounded); every other field round-trips exactly.
    """
    groups = {}
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != CSV_HEADER:
            raise ConfigurationError(f"unexpected CSV header {header}")
        for row in r:
            key = (row[0], row[1], row[2], row[6])
            groups.setdefault(key, []).append([float(v) for v in row[3:6]])
    out = []
    for (proto, p, rho, trials), rows in groups.items():
        a = np.array(rows)
        p = float(p)
        out.append(AggregateSeries(protocol=proto, p=p, rho=float(rho),
                                   steps=np.rint(a[:, 0] / p).astype(np.int64),
                                   equivalent_iterations=a[:, 0], mean_dist=a[:, 1],
                                   mean_sq_dist=a[:, 2], trials=int(trials)))
    return out


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def emit_plot(series, path, title: str = "", width: int = 640, height: int = 420) -> Path:
    """Log-distance versus equivalent iterations, one ``<path>`` per series.

    The distance axis spans whole decades with a tick at each; values at or
    below zero (or non-finite) are dropped from the curve.
    """
    series = list(series)
    if not series:
        raise ConfigurationError("nothing to plot")
    left, right, top, bottom = 70, 110, 30, 50
    pw, ph = width - left - right, height - top - bottom
    xs = np.concatenate([s.equivalent_iterations for s in series])
    ys = np.concatenate([s.mean_dist for s in series])
    ys = ys[np.isfinite(ys) & (ys > 0)]
    x0, x1 = float(xs.min()), float(xs.max())
    if x1 <= x0:
        x1 = x0 + 1.0
    if ys.size:
        d0, d1 = math.floor(math.log10(ys.min())), math.ceil(math.log10(ys.max()))
    else:
        d0, d1 = -1, 0
    if d1 <= d0:
        d1 = d0 + 1

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (d1 - math.log10(y)) / (d1 - d0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{left + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    step = max(1, (d1 - d0) // 10)
    for dec in range(d0, d1 + 1, step):
        y = py(10.0**dec)
        out.append(f'<line class="ytick" x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">1e{dec}</text>')
    for x in np.linspace(x0, x1, 6):
        out.append(f'<line class="xtick" x1="{px(x):.2f}" y1="{top + ph}" x2="{px(x):.2f}" '
                   f'y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(x):.2f}" y="{top + ph + 16}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">'
               f'equivalent iterations</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">mean distance</text>')
    for i, s in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        ok = np.isfinite(s.mean_dist) & (s.mean_dist > 0)
        pts = [f"{px(x):.2f},{py(y):.2f}" for x, y in zip(s.equivalent_iterations[ok],
                                                           s.mean_dist[ok])]
        d = ("M" + " L".join(pts)) if pts else ""
        out.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{left + pw + 34}" y="{ly + 4}">p={s.p:g}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, commas separate list items.

    Values stay strings (or lists of strings); interpretation is left to the
    consumer. ``CCSP_SEED`` in the environment replaces any ``seed`` entry.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        val = val.strip()
        out[key.strip()] = [v.strip() for v in val.split(",")] if "," in val else val
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        out["seed"] = env.strip()
    return out


def read_config(path) -> dict:
    return parse_config(Path(path).read_text())
