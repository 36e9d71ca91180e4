"""Log-log scaling plots as standalone SVG, plus the plotted points as CSV.

The CSV is the artifact to test against: it holds exactly the points that
were drawn.  The SVG carries the same plot description as JSON inside its
``<metadata>`` element so its structure can be checked without rendering.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

from .records import ScalingSeries
from .scaling_model import efficiency_series

KINDS = ("tstep_vs_P", "tstep_vs_nP", "eta_vs_nP", "dof_throughput")

_AXIS_LABELS = {
    "tstep_vs_P": ("ranks P", "time per step (s)"),
    "tstep_vs_nP": ("gridpoints per rank n/P", "time per step (s)"),
    "eta_vs_nP": ("gridpoints per rank n/P", "parallel efficiency"),
    "dof_throughput": ("gridpoints per rank n/P", "MDOFS per rank"),
}

_PALETTE = ("#d62728", "#1f1f1f", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2")

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 180, 40, 60


@dataclass(frozen=True)
class PointSet:
    label: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.xs or len(self.xs) != len(self.ys):
            raise ValueError(f"point set {self.label!r} must be nonempty with matching x/y")


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    series: tuple[PointSet, ...]
    reference_lines: tuple[dict, ...] = ()
    scale: str = "log-log"
    title: str = ""
    xlabel: str = field(default="")
    ylabel: str = field(default="")

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}; expected one of {KINDS}")
        if self.scale != "log-log":
            raise ValueError("only log-log plots are supported")
        if not self.series:
            raise ValueError("a plot needs at least one point set")


def build_spec(
    kind: str,
    series: Sequence[ScalingSeries],
    dof_multiplier: int = 1,
    eta_target: float = 0.8,
    ideal: bool = True,
) -> PlotSpec:
    """Point sets (and ideal-scaling or target guides) for one plot kind."""
    sets = []
    refs: list[dict] = []
    for s in series:
        pts = efficiency_series(s, dof_multiplier)
        if kind == "tstep_vs_P":
            xs, ys = [p.P for p in pts], [p.t_step for p in pts]
        elif kind == "tstep_vs_nP":
            xs, ys = [p.n_over_P for p in pts], [p.t_step for p in pts]
        elif kind == "eta_vs_nP":
            xs, ys = [p.n_over_P for p in pts], [p.eta for p in pts]
        elif kind == "dof_throughput":
            xs, ys = [p.n_over_P for p in pts], [p.mdofs for p in pts]
        else:
            raise ValueError(f"unknown plot kind {kind!r}")
        sets.append(PointSet(s.problem_id, tuple(float(x) for x in xs), tuple(float(y) for y in ys)))

        if ideal and kind in ("tstep_vs_P", "tstep_vs_nP") and len(pts) > 1:
            # Perfect strong scaling keeps P*t constant: t is proportional to 1/P (and to n/P).
            x0, y0, x1 = xs[0], ys[0], xs[-1]
            y1 = y0 * (x0 / x1) if kind == "tstep_vs_P" else y0 * (x1 / x0)
            refs.append({"kind": "ideal", "series": s.problem_id, "points": [[x0, y0], [x1, y1]]})
    if kind == "eta_vs_nP":
        refs.append({"kind": "hline", "y": eta_target, "label": f"eta = {eta_target:g}"})

    xlabel, ylabel = _AXIS_LABELS[kind]
    return PlotSpec(
        kind=kind,
        series=tuple(sets),
        reference_lines=tuple(refs),
        xlabel=xlabel,
        ylabel=ylabel,
        title=kind.replace("_", " "),
    )


def points_csv(spec: PlotSpec) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["series", "x", "y"])
    for ps in spec.series:
        for x, y in zip(ps.xs, ps.ys):
            writer.writerow([ps.label, repr(x), repr(y)])
    return buf.getvalue()


def _decades(lo: float, hi: float) -> tuple[float, float]:
    lo_e, hi_e = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if hi_e == lo_e:
        hi_e += 1
    return float(lo_e), float(hi_e)


def render_svg(spec: PlotSpec) -> str:
    xs = [x for ps in spec.series for x in ps.xs]
    ys = [y for ps in spec.series for y in ps.ys]
    for ref in spec.reference_lines:
        if ref["kind"] == "ideal":
            xs += [p[0] for p in ref["points"]]
            ys += [p[1] for p in ref["points"]]
        elif ref["kind"] == "hline":
            ys.append(ref["y"])
    if min(xs) <= 0 or min(ys) <= 0:
        raise ValueError("log-log plot needs positive coordinates")
    x_lo, x_hi = _decades(min(xs), max(xs))
    y_lo, y_hi = _decades(min(ys), max(ys))
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + (math.log10(x) - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return MARGIN_T + plot_h - (math.log10(y) - y_lo) / (y_hi - y_lo) * plot_h

    meta = {
        "kind": spec.kind,
        "scale": spec.scale,
        "series": [ps.label for ps in spec.series],
        "reference_lines": list(spec.reference_lines),
    }
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f"<metadata>{escape(json.dumps(meta, sort_keys=True))}</metadata>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(spec.title)}</text>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
    ]

    out.append('<g class="grid" stroke="#dddddd">')
    for e in range(int(x_lo), int(x_hi) + 1):
        x = px(10.0**e)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_T}" x2="{x:.2f}" y2="{MARGIN_T + plot_h}"/>')
    for e in range(int(y_lo), int(y_hi) + 1):
        y = py(10.0**e)
        out.append(f'<line x1="{MARGIN_L}" y1="{y:.2f}" x2="{MARGIN_L + plot_w}" y2="{y:.2f}"/>')
    out.append("</g>")
    out.append('<g class="ticks">')
    for e in range(int(x_lo), int(x_hi) + 1):
        out.append(
            f'<text x="{px(10.0**e):.2f}" y="{MARGIN_T + plot_h + 18}" text-anchor="middle">1e{e}</text>'
        )
    for e in range(int(y_lo), int(y_hi) + 1):
        out.append(f'<text x="{MARGIN_L - 8}" y="{py(10.0**e) + 4:.2f}" text-anchor="end">1e{e}</text>')
    out.append("</g>")
    out.append(
        f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(spec.xlabel)}</text>'
    )
    out.append(
        f'<text x="20" y="{MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {MARGIN_T + plot_h / 2:.1f})">{escape(spec.ylabel)}</text>'
    )

    for ref in spec.reference_lines:
        if ref["kind"] == "ideal":
            (x0, y0), (x1, y1) = ref["points"]
            out.append(
                f'<line class="reference ideal" x1="{px(x0):.2f}" y1="{py(y0):.2f}" x2="{px(x1):.2f}" '
                f'y2="{py(y1):.2f}" stroke="#87ceeb" stroke-dasharray="6 4"/>'
            )
        elif ref["kind"] == "hline":
            y = py(ref["y"])
            out.append(
                f'<line class="reference hline" x1="{MARGIN_L}" y1="{y:.2f}" x2="{MARGIN_L + plot_w}" '
                f'y2="{y:.2f}" stroke="#888888" stroke-dasharray="4 4"/>'
            )

    for i, ps in enumerate(spec.series):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(ps.xs, ps.ys))
        out.append(f'<g class="series" data-label="{escape(ps.label, {chr(34): "&quot;"})}">')
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(ps.xs, ps.ys):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        out.append("</g>")
        ly = MARGIN_T + 14 + 18 * i
        lx = MARGIN_L + plot_w + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(ps.label)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
