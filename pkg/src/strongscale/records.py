"""Run records and strong-scaling series.

A :class:`RunRecord` is one timed run of a fixed problem on ``P`` ranks.  A
:class:`ScalingSeries` collects the records of one problem (fixed ``n``) on one
platform/configuration, ordered by rank count, and is the unit every
efficiency computation works on.
"""

from __future__ import annotations

import statistics
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable

# E * N**3 must fit in a signed 64-bit integer for interchange with other tools.
INT64_MAX = 2**63 - 1


class ValidationError(ValueError):
    """A record or series violates one of its invariants."""


def grid_points(E: int, N: int) -> int:
    """Unique gridpoints of a mesh with ``E`` elements of polynomial order ``N``.

    >>> grid_points(7168, 7)
    2458624
    """
    if isinstance(E, bool) or isinstance(N, bool) or int(E) != E or int(N) != N:
        raise ValidationError(f"E and N must be integers, got E={E!r}, N={N!r}")
    E, N = int(E), int(N)
    if E < 1 or N < 1:
        raise ValidationError(f"E and N must be >= 1, got E={E}, N={N}")
    n = E * N**3
    if n > INT64_MAX:
        raise OverflowError(f"E*N^3 = {n} exceeds the 64-bit integer range")
    return n


@dataclass(frozen=True)
class RunRecord:
    """One timed run.

    ``t_step`` is the average wall-clock time per step over ``steps_timed``
    steps.  ``E`` and ``N`` are optional, but when both are given they must
    reproduce ``n`` exactly.
    """

    platform: str
    P: int
    n: int
    t_step: float
    ranks_per_node: int = 1
    config: frozenset[str] = field(default_factory=frozenset)
    E: int | None = None
    N: int | None = None
    steps_timed: int = 1
    v_iters: float | None = None
    p_iters: float | None = None
    flops_per_rank: float | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.config, frozenset):
            object.__setattr__(self, "config", frozenset(self.config))
        if self.P < 1:
            raise ValidationError(f"P must be >= 1, got {self.P}")
        if self.ranks_per_node < 1:
            raise ValidationError(f"ranks_per_node must be >= 1, got {self.ranks_per_node}")
        if self.n < self.P:
            raise ValidationError(f"n ({self.n}) must be >= P ({self.P})")
        if not self.t_step > 0:
            raise ValidationError(f"t_step must be > 0, got {self.t_step}")
        if self.steps_timed < 1:
            raise ValidationError(f"steps_timed must be >= 1, got {self.steps_timed}")
        for name in ("v_iters", "p_iters", "flops_per_rank"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValidationError(f"{name} must be nonnegative, got {value}")
        if self.E is not None and self.N is not None:
            expected = grid_points(self.E, self.N)
            if expected != self.n:
                raise ValidationError(
                    f"n={self.n} disagrees with E*N^3 = {self.E}*{self.N}^3 = {expected}"
                )

    @property
    def n_over_P(self) -> float:
        return self.n / self.P

    @property
    def nodes(self) -> float:
        """Nodes occupied; partial occupancy gives a fractional count."""
        return self.P / self.ranks_per_node

    @property
    def series_key(self) -> tuple[str, frozenset[str], int]:
        return (self.platform, self.config, self.n)


@dataclass(frozen=True)
class ScalingSeries:
    """Records of one fixed-size problem, strictly increasing in ``P``.

    The anchor is the record with the smallest rank count.  An empty series is
    allowed (it shows up when a partition leaves one class empty) but most
    analyses require at least one record.
    """

    problem_id: str
    n: int
    records: tuple[RunRecord, ...]

    def __post_init__(self) -> None:
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        if not records:
            return
        first = records[0]
        for rec in records:
            if rec.n != self.n:
                raise ValidationError(f"record n={rec.n} differs from series n={self.n}")
            if rec.platform != first.platform or rec.config != first.config:
                raise ValidationError("all records in a series must share platform and config")
        ranks = [r.P for r in records]
        if any(b <= a for a, b in zip(ranks, ranks[1:])):
            raise ValidationError(f"P values must be strictly increasing, got {ranks}")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def anchor_index(self) -> int | None:
        return 0 if self.records else None

    @property
    def anchor(self) -> RunRecord:
        if not self.records:
            raise ValidationError(f"series {self.problem_id!r} is empty")
        return self.records[0]

    @property
    def platform(self) -> str | None:
        return self.records[0].platform if self.records else None

    @property
    def config(self) -> frozenset[str]:
        return self.records[0].config if self.records else frozenset()

    @property
    def ranks(self) -> list[int]:
        return [r.P for r in self.records]

    @property
    def t_steps(self) -> list[float]:
        return [r.t_step for r in self.records]


def problem_id(platform: str, config: Iterable[str], n: int) -> str:
    tags = ";".join(sorted(config))
    return f"{platform}[{tags}]/n={n}"


def merge_duplicates(records: Iterable[RunRecord]) -> list[RunRecord]:
    """Collapse records with equal ``P`` into one, keeping the median ``t_step``.

    The first record at each ``P`` supplies the remaining fields.  The result
    is sorted by ``P``.
    """
    by_rank: dict[int, list[RunRecord]] = defaultdict(list)
    for rec in records:
        by_rank[rec.P].append(rec)
    merged = []
    for P in sorted(by_rank):
        group = by_rank[P]
        if len(group) == 1:
            merged.append(group[0])
            continue
        t_med = statistics.median(r.t_step for r in group)
        steps = sum(r.steps_timed for r in group)
        merged.append(replace(group[0], t_step=t_med, steps_timed=steps))
    return merged


def make_series(records: Iterable[RunRecord], problem: str | None = None) -> ScalingSeries:
    """Build one series from records that share platform, config and ``n``."""
    records = list(records)
    if not records:
        raise ValidationError("cannot infer a series from zero records")
    merged = merge_duplicates(records)
    first = merged[0]
    pid = problem or problem_id(first.platform, first.config, first.n)
    return ScalingSeries(problem_id=pid, n=first.n, records=tuple(merged))


def group_series(records: Iterable[RunRecord]) -> list[ScalingSeries]:
    """Group records by (platform, config, n) into series.

    Groups come out in first-seen order so output is stable for a given input.
    """
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        groups.setdefault(rec.series_key, []).append(rec)
    return [make_series(group) for group in groups.values()]
