"""Dependency-free SVG boxplots of result CSVs.

Box statistics follow Tukey: quartiles by linear interpolation between
order statistics, whiskers at the most extreme observations within 1.5 IQR
of the box, a diamond at the mean. Unbounded lengths are drawn at the plot
ceiling and counted in an annotation above their box.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

WIDTH_PER_BOX = 90
HEIGHT = 360
MARGIN = dict(left=70, right=20, top=40, bottom=70)


@dataclass(frozen=True)
class BoxStats:
    label: str
    q1: float
    median: float
    q3: float
    lo_whisker: float
    hi_whisker: float
    mean: float
    n_infinite: int
    outliers: tuple


def box_stats(label: str, values) -> BoxStats:
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    finite = np.sort(v[np.isfinite(v)])
    n_inf = int(v.size - finite.size)
    if finite.size == 0:
        nan = math.nan
        return BoxStats(label, nan, nan, nan, nan, nan, nan, n_inf, ())
    q1, med, q3 = np.percentile(finite, [25, 50, 75])
    iqr = q3 - q1
    inside = finite[(finite >= q1 - 1.5 * iqr) & (finite <= q3 + 1.5 * iqr)]
    lo_w, hi_w = float(inside.min()), float(inside.max())
    outliers = tuple(float(x) for x in finite if x < lo_w or x > hi_w)
    return BoxStats(label, float(q1), float(med), float(q3), lo_w, hi_w, float(finite.mean()), n_inf, outliers)


def read_report(path, metric="mean_length") -> dict:
    groups: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            groups.setdefault(row["method"], []).append(float(row[metric]))
    return groups


def _num(x: float) -> str:
    return f"{x:.2f}"


def render_boxplot(paths, out_path, metric="mean_length", title=None) -> str:
    """Write one box per (report, method) to ``out_path``; return the SVG text."""
    paths = [Path(p) for p in paths]
    if not paths:
        raise DomainError("render_boxplot needs at least one report")
    boxes = []
    for p in paths:
        groups = read_report(p, metric)
        prefix = f"{p.stem}:" if len(paths) > 1 else ""
        for method, vals in groups.items():
            boxes.append(box_stats(prefix + method, vals))
    if not boxes:
        raise DomainError("reports contain no rows")

    finite = [x for b in boxes for x in (b.lo_whisker, b.hi_whisker, *b.outliers) if math.isfinite(x)]
    lo = min(finite) if finite else 0.0
    hi = max(finite) if finite else 1.0
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    ceiling = hi

    plot_w = WIDTH_PER_BOX * len(boxes)
    W = MARGIN["left"] + plot_w + MARGIN["right"]
    H = HEIGHT
    top, bottom = MARGIN["top"], H - MARGIN["bottom"]

    def y(v):
        v = min(v, ceiling)
        return bottom - (v - lo) / (hi - lo) * (bottom - top)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">'
        f"{title or metric}</text>",
        f'<line x1="{MARGIN["left"]}" y1="{top}" x2="{MARGIN["left"]}" y2="{bottom}" stroke="black"/>',
    ]
    for tick in np.linspace(lo, hi, 6):
        ty = y(tick)
        out.append(f'<line x1="{MARGIN["left"] - 4}" y1="{ty:.2f}" x2="{MARGIN["left"]}" y2="{ty:.2f}" stroke="black"/>')
        out.append(
            f'<text x="{MARGIN["left"] - 6}" y="{ty + 4:.2f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="10">{_num(tick)}</text>'
        )
    for i, b in enumerate(boxes):
        cx = MARGIN["left"] + WIDTH_PER_BOX * (i + 0.5)
        half = WIDTH_PER_BOX * 0.3
        if math.isfinite(b.median):
            out += [
                f'<line x1="{cx:.2f}" y1="{y(b.lo_whisker):.2f}" x2="{cx:.2f}" y2="{y(b.q1):.2f}" stroke="black"/>',
                f'<line x1="{cx:.2f}" y1="{y(b.q3):.2f}" x2="{cx:.2f}" y2="{y(b.hi_whisker):.2f}" stroke="black"/>',
                f'<line x1="{cx - half / 2:.2f}" y1="{y(b.lo_whisker):.2f}" x2="{cx + half / 2:.2f}" '
                f'y2="{y(b.lo_whisker):.2f}" stroke="black"/>',
                f'<line x1="{cx - half / 2:.2f}" y1="{y(b.hi_whisker):.2f}" x2="{cx + half / 2:.2f}" '
                f'y2="{y(b.hi_whisker):.2f}" stroke="black"/>',
                f'<rect x="{cx - half:.2f}" y="{y(b.q3):.2f}" width="{2 * half:.2f}" '
                f'height="{max(y(b.q1) - y(b.q3), 0.0):.2f}" fill="#9ecae1" stroke="black"/>',
                f'<line x1="{cx - half:.2f}" y1="{y(b.median):.2f}" x2="{cx + half:.2f}" y2="{y(b.median):.2f}" '
                f'stroke="black" stroke-width="2"/>',
            ]
            my = y(b.mean)
            out.append(
                f'<path d="M {cx:.2f} {my - 4:.2f} L {cx + 4:.2f} {my:.2f} L {cx:.2f} {my + 4:.2f} '
                f'L {cx - 4:.2f} {my:.2f} Z" fill="#d62728"/>'
            )
            for o in b.outliers:
                out.append(f'<circle cx="{cx:.2f}" cy="{y(o):.2f}" r="2.5" fill="none" stroke="black"/>')
        if b.n_infinite:
            out.append(f'<circle cx="{cx:.2f}" cy="{y(ceiling):.2f}" r="3" fill="black"/>')
            out.append(
                f'<text x="{cx:.2f}" y="{top - 6}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="10">{b.n_infinite} inf</text>'
            )
        out.append(
            f'<text x="{cx:.2f}" y="{bottom + 16}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="10">{b.label}</text>'
        )
    out.append("</svg>")
    svg = "\n".join(out) + "\n"
    Path(out_path).write_text(svg)
    return svg
