"""Synthetic strong-scaling data with known ground truth.

The cost model has the three terms that dominate a spectral-element step:
local work proportional to ``n/P``, a fixed per-step overhead, and a
coarse-grid solve growing like ``log2(P)``::

    t_step(P) = a*(n/P) + b + c*log2(P)

Optional noise multiplies each sample by ``1 + u*noise_rel`` with ``u`` drawn
uniformly from [-1, 1].  :func:`oracle_knee` finds the efficiency knee of the
noise-free model by scanning every integer rank count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .records import RunRecord, ScalingSeries, ValidationError, problem_id

# Ranks evaluated per vectorized step of the oracle scan.
_SCAN_CHUNK = 1 << 20


@dataclass(frozen=True)
class CostModel:
    a: float
    b: float = 0.0
    c: float = 0.0
    noise_rel: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValidationError(f"a must be > 0, got {self.a}")
        if self.b < 0 or self.c < 0:
            raise ValidationError("b and c must be nonnegative")
        if self.noise_rel < 0 or self.noise_rel >= 1:
            raise ValidationError(f"noise_rel must lie in [0, 1), got {self.noise_rel}")

    def t_step(self, n: float, P):
        """Noise-free time per step; ``P`` may be a scalar or an array."""
        return self.a * (n / P) + self.b + self.c * np.log2(P)


def generate(
    model: CostModel,
    n: int,
    P_values: Sequence[int],
    platform: str = "synthetic",
    config: Sequence[str] = (),
    ranks_per_node: int = 8,
    steps_timed: int = 1000,
) -> ScalingSeries:
    """Sample the cost model at each rank count.

    Output is a deterministic function of the arguments; without noise it is
    also independent of the seed.
    """
    P_values = [int(P) for P in P_values]
    if any(b <= a for a, b in zip(P_values, P_values[1:])):
        raise ValidationError("P_values must be strictly increasing")
    if P_values and (P_values[0] < 1 or P_values[-1] > n):
        raise ValidationError("P_values must lie in [1, n]")

    ranks = np.asarray(P_values, dtype=float)
    times = model.t_step(float(n), ranks)
    if model.noise_rel > 0:
        rng = np.random.default_rng(model.seed)
        times = times * (1.0 + rng.uniform(-1.0, 1.0, size=len(ranks)) * model.noise_rel)

    records = tuple(
        RunRecord(
            platform=platform,
            config=frozenset(config),
            P=P,
            ranks_per_node=ranks_per_node,
            n=int(n),
            t_step=float(t),
            steps_timed=steps_timed,
        )
        for P, t in zip(P_values, times)
    )
    return ScalingSeries(problem_id=problem_id(platform, config, n), n=int(n), records=records)


def geometric_ranks(P0: int, P_max: int, per_doubling: int = 4) -> list[int]:
    """Distinct integer rank counts spaced evenly in ``log2(P)`` from P0 to P_max."""
    count = max(2, int(math.ceil(math.log2(P_max / P0) * per_doubling)) + 1)
    raw = np.geomspace(P0, P_max, count)
    return sorted({int(round(P)) for P in raw})


def oracle_knee(model: CostModel, n: int, eta_target: float = 0.8, P0: int = 1) -> float | None:
    """``n/P`` at the last integer ``P`` whose exact efficiency meets the target.

    Every rank count from ``P0`` upward is evaluated until efficiency first
    drops below ``eta_target``.  Returns ``None`` when that never happens for
    ``P <= n`` (the knee is unbounded).
    """
    if model.noise_rel != 0:
        raise ValueError("oracle_knee needs a noise-free model")
    if not 0 < eta_target <= 1:
        raise ValueError(f"eta_target must lie in (0, 1], got {eta_target}")
    if model.b == 0 and model.c == 0:
        # P*t(P) = a*n for every P: efficiency is identically one.
        return None

    anchor_work = P0 * float(model.t_step(float(n), float(P0)))
    start = P0
    while start <= n:
        stop = min(start + _SCAN_CHUNK, n + 1)
        ranks = np.arange(start, stop, dtype=float)
        eta = anchor_work / (ranks * model.t_step(float(n), ranks))
        below = np.flatnonzero(eta < eta_target)
        if below.size:
            first_bad = start + int(below[0])
            if first_bad == P0:
                return None
            return n / (first_bad - 1)
        start = stop
    return None
