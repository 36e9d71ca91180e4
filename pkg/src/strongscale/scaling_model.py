"""Parallel-efficiency metrics, the efficiency knee, and time-per-step prediction.

Conventions used throughout:

* ``n`` is the number of gridpoints, ``P`` the number of ranks (one per device).
* Efficiency is measured against the anchor of a series, the run with the
  fewest ranks: ``eta(P) = P0*t(P0) / (P*t(P))``.
* The *knee* is the per-rank work ``n/P`` at which efficiency falls to a target
  value (0.8 by default).  Once it is known, the largest efficient rank count
  for any problem is ``n / knee`` and the time per step at that point depends
  only on the knee and the single-rank work rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .records import RunRecord, ScalingSeries, ValidationError, grid_points

__all__ = [
    "CoarseLogFit",
    "EfficiencyPoint",
    "KneeResult",
    "coarse_grid_sizes",
    "effective_flops",
    "efficiency_series",
    "fit_coarse_log_model",
    "fit_work_rate",
    "grid_points",
    "knee",
    "mdofs",
    "predict_tstep",
    "saturated_speed",
    "speed_efficiency",
    "total_dofs",
]

DOFS_PER_GRIDPOINT = 4  # three velocity components and pressure


def total_dofs(n: int) -> int:
    """Total unknowns of an incompressible flow problem on ``n`` gridpoints."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return DOFS_PER_GRIDPOINT * int(n)


def _check_multiplier(dof_multiplier: int) -> None:
    if dof_multiplier not in (1, DOFS_PER_GRIDPOINT):
        raise ValueError(f"dof_multiplier must be 1 or 4, got {dof_multiplier!r}")


def mdofs(record: RunRecord, dof_multiplier: int = 1) -> float:
    """Millions of dofs advanced per second per rank."""
    _check_multiplier(dof_multiplier)
    return record.n * dof_multiplier / (record.t_step * record.P) / 1e6


@dataclass(frozen=True)
class EfficiencyPoint:
    P: int
    n_over_P: float
    eta: float
    mdofs: float
    t_step: float


def efficiency_series(series: ScalingSeries, dof_multiplier: int = 1) -> list[EfficiencyPoint]:
    """Strong-scaling efficiency of every record relative to the series anchor.

    Superlinear points (``eta > 1``) are kept as measured.
    """
    _check_multiplier(dof_multiplier)
    if not series.records:
        raise ValidationError(f"series {series.problem_id!r} is empty")
    anchor = series.anchor
    anchor_work = anchor.P * anchor.t_step
    points = []
    for rec in series.records:
        eta = 1.0 if rec is anchor else anchor_work / (rec.P * rec.t_step)
        points.append(
            EfficiencyPoint(
                P=rec.P,
                n_over_P=rec.n / rec.P,
                eta=eta,
                mdofs=mdofs(rec, dof_multiplier),
                t_step=rec.t_step,
            )
        )
    return points


def speed_efficiency(S_P: float, P: int, S_1: float) -> float:
    """Efficiency from aggregate speed on ``P`` ranks and a single-rank speed.

    Unlike :func:`efficiency_series` this needs an externally measured or
    projected ``S_1``; it is never inferred from the series.
    """
    if S_P <= 0 or P <= 0 or S_1 <= 0:
        raise ValueError("S_P, P and S_1 must all be positive")
    return S_P / (P * S_1)


@dataclass(frozen=True)
class KneeResult:
    """Where a series' efficiency crosses ``eta_target``.

    ``n_at_target`` is per-rank work (gridpoints per rank).  When the measured
    points never cross the target, ``extrapolated`` is set and the result is
    clamped to the nearest measured point, which is then repeated in
    ``bracketing_points``.
    """

    eta_target: float
    n_at_target: float
    P_at_target: float
    t_at_target: float
    bracketing_points: tuple[EfficiencyPoint, EfficiencyPoint]
    extrapolated: bool
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def P_int(self) -> int:
        """Whole rank count for scheduling, rounded up."""
        return math.ceil(self.P_at_target - 1e-9)


def knee(series: ScalingSeries, eta_target: float = 0.8, dof_multiplier: int = 1) -> KneeResult:
    """Locate the per-rank work at which efficiency falls to ``eta_target``.

    Efficiency is interpolated piecewise-linearly against ``log10(n/P)``.  The
    points are walked from the largest ``n/P`` (the anchor) downward and the
    first segment that drops to or through the target is used, so with noisy,
    non-monotone data the most conservative crossing wins.
    """
    if eta_target <= 0:
        raise ValueError(f"eta_target must be positive, got {eta_target}")
    if len(series.records) < 2:
        raise ValidationError(f"knee needs at least 2 records, series {series.problem_id!r} has {len(series.records)}")

    points = efficiency_series(series, dof_multiplier)
    diagnostics = []
    superlinear = [p.P for p in points if p.eta > 1.0]
    if superlinear:
        diagnostics.append(f"superlinear efficiency at P={superlinear}")

    for hi, lo in zip(points, points[1:]):
        if hi.eta >= eta_target >= lo.eta:
            x_hi, x_lo = math.log10(hi.n_over_P), math.log10(lo.n_over_P)
            frac = 0.0 if hi.eta == lo.eta else (hi.eta - eta_target) / (hi.eta - lo.eta)
            x = x_hi + frac * (x_lo - x_hi)
            # Keep rounding in the log round trip from stepping outside the bracket.
            n_at = min(max(10.0**x, lo.n_over_P), hi.n_over_P)
            if frac == 0.0:
                n_at = hi.n_over_P
            elif frac == 1.0:
                n_at = lo.n_over_P
            t_at = hi.t_step + frac * (lo.t_step - hi.t_step)
            return KneeResult(
                eta_target=eta_target,
                n_at_target=n_at,
                P_at_target=series.n / n_at,
                t_at_target=t_at,
                bracketing_points=(hi, lo),
                extrapolated=False,
                diagnostics=tuple(diagnostics),
            )

    # No downward crossing among the measured points.
    if points[0].eta < eta_target:
        clamp = points[0]
        diagnostics.append("every point is below the target; clamped to the largest n/P")
    else:
        clamp = points[-1]
        diagnostics.append("every point is above the target; clamped to the smallest n/P")
    return KneeResult(
        eta_target=eta_target,
        n_at_target=clamp.n_over_P,
        P_at_target=series.n / clamp.n_over_P,
        t_at_target=clamp.t_step,
        bracketing_points=(clamp, clamp),
        extrapolated=True,
        diagnostics=tuple(diagnostics),
    )


def fit_work_rate(series: ScalingSeries) -> float:
    """Seconds per gridpoint per rank-step, taken from the anchor run.

    This is the composite ``C/S_1``: the work constant and single-rank speed
    cannot be separated from timings alone.  The anchor is assumed to run at
    unit efficiency.
    """
    anchor = series.anchor
    return anchor.t_step * anchor.P / anchor.n


def predict_tstep(work_rate: float, n: float, P: float, eta: float) -> float:
    """Time per step for ``n`` gridpoints on ``P`` ranks at efficiency ``eta``."""
    if work_rate <= 0 or n <= 0 or P <= 0:
        raise ValueError("work_rate, n and P must be positive")
    if not 0 < eta <= 1.2:
        raise ValueError(f"eta must lie in (0, 1.2], got {eta}")
    return work_rate * (n / P) / eta


def effective_flops(fp64_flops: float, fp32_flops: float) -> float:
    """Mixed-precision rate with FP32 operations counted as half a flop."""
    if fp64_flops < 0 or fp32_flops < 0:
        raise ValueError("flop rates must be nonnegative")
    return fp64_flops + 0.5 * fp32_flops


def saturated_speed(measured_flops_per_rank: float, eta: float) -> float:
    """Per-rank speed projected back to full efficiency."""
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    return measured_flops_per_rank / eta


def coarse_grid_sizes(n: float, P: float, N: int) -> tuple[float, float]:
    """Approximate coarse-grid unknowns per rank and in total.

    The coarse problem has roughly one unknown per spectral element, so the
    per-rank size is the local element count ``(n/P)/N^3``.  The total does
    not depend on ``P``.
    """
    if n <= 0 or P <= 0 or N <= 0:
        raise ValueError("n, P and N must be positive")
    per_rank = (n / P) / N**3
    return per_rank, per_rank * P


@dataclass(frozen=True)
class CoarseLogFit:
    """``t(P) = a + b*log2(P)`` fitted to coarse-grid solve times."""

    a: float
    b: float
    points_used: tuple[tuple[float, float], ...]
    zero_offset: bool = False

    def predict(self, P: float) -> float:
        return self.a + self.b * math.log2(P)

    def ratio(self, P_num: float, P_den: float) -> float:
        """Predicted ``t(P_num)/t(P_den)``."""
        return self.predict(P_num) / self.predict(P_den)

    def residuals(self) -> list[float]:
        return [t - self.predict(P) for P, t in self.points_used]


def fit_coarse_log_model(points: Iterable[Sequence[float]], zero_offset: bool = False) -> CoarseLogFit:
    """Least-squares fit of coarse-grid time against ``log2(P)``.

    With ``zero_offset`` the constant is pinned to zero, which is the form
    used for ratio checks (``t(P1)/t(P2) = log2 P1 / log2 P2``).
    """
    pts = tuple((float(P), float(t)) for P, t in points)
    if len(pts) < 1 or (not zero_offset and len(pts) < 2):
        raise ValueError("not enough points for a coarse-grid fit")
    if any(P <= 0 for P, _ in pts):
        raise ValueError("P must be positive")
    xs = [math.log2(P) for P, _ in pts]
    ts = [t for _, t in pts]

    if zero_offset:
        sxx = sum(x * x for x in xs)
        if sxx == 0:
            raise ValueError("singular fit: every P equals 1")
        b = sum(x * t for x, t in zip(xs, ts)) / sxx
        return CoarseLogFit(a=0.0, b=b, points_used=pts, zero_offset=True)

    if len(set(xs)) < 2:
        raise ValueError("singular fit: all P values are equal")
    if len(pts) == 2:
        (x1, x2), (t1, t2) = xs, ts
        b = (t2 - t1) / (x2 - x1)
        return CoarseLogFit(a=t1 - b * x1, b=b, points_used=pts)
    x_mean = sum(xs) / len(xs)
    t_mean = sum(ts) / len(ts)
    sxx = sum((x - x_mean) ** 2 for x in xs)
    sxt = sum((x - x_mean) * (t - t_mean) for x, t in zip(xs, ts))
    b = sxt / sxx
    return CoarseLogFit(a=t_mean - b * x_mean, b=b, points_used=pts)
