"""Detectors for scaling anomalies.

* :func:`section_regression` compares two logfiles timer by timer and flags
  sections whose time changed by more than a factor.
* :func:`rank_divisibility` splits a series by ``P mod divisor`` and measures
  how much slower the misaligned rank counts run.
* :func:`platform_speedup` recomputes single-device speedups from ``t_step``
  and checks them against published values.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .logparse import LogReport, iter_timers
from .records import RunRecord, ScalingSeries, ValidationError, merge_duplicates, problem_id

SPEEDUP_TOLERANCE = 0.02


@dataclass(frozen=True)
class Regression:
    path: tuple[str, ...]
    t_a: float
    t_b: float
    ratio: float
    flagged: bool

    @property
    def label(self) -> str:
        return "/".join(self.path)


def _timer_times(report: LogReport) -> dict[tuple[str, ...], float]:
    times: dict[tuple[str, ...], float] = {}
    for path, node in iter_timers(report):
        times.setdefault(path, node.seconds)
    return times


def section_regression(a: LogReport, b: LogReport, threshold: float = 1.5) -> list[Regression]:
    """Per-section time ratios ``t_b / t_a`` for every timer path found in both logs.

    A section is flagged when it got slower by ``threshold`` or faster by the
    same factor.  Results are sorted by descending ratio.
    """
    if threshold <= 1:
        raise ValueError(f"threshold must exceed 1, got {threshold}")
    times_a, times_b = _timer_times(a), _timer_times(b)
    rows = []
    for path, t_a in times_a.items():
        if path not in times_b:
            continue
        t_b = times_b[path]
        if t_a == t_b:
            ratio = 1.0
        elif t_a == 0:
            ratio = math.inf
        else:
            ratio = t_b / t_a
        flagged = ratio >= threshold or ratio <= 1.0 / threshold
        rows.append(Regression(path=path, t_a=t_a, t_b=t_b, ratio=ratio, flagged=flagged))
    rows.sort(key=lambda r: r.ratio, reverse=True)
    return rows


def missing_sections(a: LogReport, b: LogReport) -> tuple[list[tuple[str, ...]], list[tuple[str, ...]]]:
    """Timer paths present in only one of the two logs, as ``(only_a, only_b)``."""
    paths_a, paths_b = _timer_times(a), _timer_times(b)
    return [p for p in paths_a if p not in paths_b], [p for p in paths_b if p not in paths_a]


@dataclass(frozen=True)
class DivisibilitySplit:
    divisor: int
    aligned: ScalingSeries
    misaligned: ScalingSeries
    slowdown: float | None
    flagged: bool
    ratios: tuple[float, ...] = ()


def _loglog_interp(x_known: Sequence[float], y_known: Sequence[float], x: float) -> float:
    """Piecewise-linear interpolation in (log x, log y), extrapolating the end segments.

    A single known point is extended along ideal strong scaling, ``y ~ 1/x``.
    """
    lx = np.log(np.asarray(x_known, dtype=float))
    ly = np.log(np.asarray(y_known, dtype=float))
    q = math.log(x)
    if len(lx) == 1:
        return math.exp(ly[0] - (q - lx[0]))
    if q < lx[0]:
        slope = (ly[1] - ly[0]) / (lx[1] - lx[0])
        return math.exp(ly[0] + slope * (q - lx[0]))
    if q > lx[-1]:
        slope = (ly[-1] - ly[-2]) / (lx[-1] - lx[-2])
        return math.exp(ly[-1] + slope * (q - lx[-1]))
    return math.exp(float(np.interp(q, lx, ly)))


def rank_divisibility(
    records: Iterable[RunRecord], divisor: int = 8, slowdown_threshold: float = 1.25
) -> DivisibilitySplit:
    """Split runs by ``P mod divisor`` and estimate the misaligned slowdown.

    The aligned runs form a reference curve interpolated in log-log space; the
    slowdown is the median of ``t_misaligned / t_aligned(P)`` over the
    misaligned runs.  When either class is empty the slowdown is ``None``.
    """
    if divisor < 1:
        raise ValueError(f"divisor must be >= 1, got {divisor}")
    records = merge_duplicates(records)
    if not records:
        raise ValidationError("no records to split")
    first = records[0]
    for rec in records:
        if rec.platform != first.platform or rec.n != first.n:
            raise ValidationError("rank_divisibility needs records sharing platform and n")

    aligned = [r for r in records if r.P % divisor == 0]
    misaligned = [r for r in records if r.P % divisor != 0]
    pid = problem_id(first.platform, first.config, first.n)

    def as_series(recs: list[RunRecord], tag: str) -> ScalingSeries:
        # Configs may differ between runs of one platform; only rank order matters here.
        recs = [replace(r, config=first.config) for r in recs]
        return ScalingSeries(problem_id=f"{pid}:{tag}", n=first.n, records=tuple(recs))

    slowdown = None
    ratios: list[float] = []
    if aligned and misaligned:
        ref_P = [r.P for r in aligned]
        ref_t = [r.t_step for r in aligned]
        ratios = [r.t_step / _loglog_interp(ref_P, ref_t, r.P) for r in misaligned]
        slowdown = statistics.median(ratios)
    return DivisibilitySplit(
        divisor=divisor,
        aligned=as_series(aligned, f"mod{divisor}=0"),
        misaligned=as_series(misaligned, f"mod{divisor}!=0"),
        slowdown=slowdown,
        flagged=slowdown is not None and slowdown >= slowdown_threshold,
        ratios=tuple(ratios),
    )


@dataclass(frozen=True)
class SpeedupRow:
    platform: str
    t_step: float
    claimed_speedup: float | None
    computed_speedup: float
    consistent: bool


def platform_speedup(
    reference: RunRecord,
    others: Iterable[RunRecord],
    claimed: Mapping[str, float] | None = None,
    tolerance: float = SPEEDUP_TOLERANCE,
) -> list[SpeedupRow]:
    """Speedup of each run over the reference as the inverse ``t_step`` ratio.

    Where a claimed speedup is supplied for a platform, the row is marked
    consistent only if the two agree within ``tolerance``.
    """
    claimed = claimed or {}
    rows = []
    for rec in others:
        if rec.n != reference.n:
            raise ValidationError(
                f"{rec.platform} ran n={rec.n}, reference {reference.platform} ran n={reference.n}"
            )
        computed = reference.t_step / rec.t_step
        claim = claimed.get(rec.platform)
        # Epsilon keeps values printed exactly at the tolerance consistent.
        consistent = claim is None or abs(computed - claim) <= tolerance + 1e-12
        rows.append(
            SpeedupRow(
                platform=rec.platform,
                t_step=rec.t_step,
                claimed_speedup=claim,
                computed_speedup=computed,
                consistent=consistent,
            )
        )
    return rows


def noise_index(repeats: Sequence[float]) -> float:
    """Coefficient of variation (population standard deviation over mean)."""
    if len(repeats) < 2:
        raise ValueError("noise_index needs at least 2 samples")
    return statistics.pstdev(repeats) / statistics.fmean(repeats)
