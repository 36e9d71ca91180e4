"""Campaign planning from a measured efficiency knee.

Given the gridpoint count ``n`` of a production problem and the per-rank work
``n_knee`` at which a platform still runs at the target efficiency, the
largest efficient rank count is ``n / n_knee`` and the time per step there is
``work_rate * n_knee / eta``.  Node-hours follow from the step count::

    node_hours = (P / ranks_per_node) * N_steps * t_step / 3600
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .scaling_model import KneeResult

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class CampaignPlan:
    n: int
    n_at_target: float
    eta_target: float
    P_target: int
    ranks_per_node: int
    nodes: float
    nodes_whole: int
    t_step_est: float
    N_steps: int
    node_hours: float
    node_hours_whole: float


def plan(
    n: float,
    knee: KneeResult | float,
    ranks_per_node: int,
    N_steps: int,
    work_rate: float | None = None,
    *,
    eta_target: float = 0.8,
    t_step_est: float | None = None,
) -> CampaignPlan:
    """Rank count, time per step and node-hours for an ``N_steps`` campaign.

    ``knee`` is either a :class:`KneeResult` or a bare ``n/P`` value, in which
    case ``eta_target`` says what efficiency it corresponds to.  The time per
    step comes from ``work_rate`` (seconds per gridpoint per rank-step, see
    :func:`~strongscale.scaling_model.fit_work_rate`) unless ``t_step_est``
    is given directly.

    Fractional nodes are kept in ``nodes``/``node_hours``; ``nodes_whole`` and
    ``node_hours_whole`` round up to full nodes for scheduler requests.
    """
    if isinstance(knee, KneeResult):
        n_at, eta = knee.n_at_target, knee.eta_target
    else:
        n_at, eta = float(knee), eta_target
    if n <= 0 or n_at <= 0 or ranks_per_node < 1 or N_steps < 1:
        raise ValueError("n, knee, ranks_per_node and N_steps must be positive")
    if not 0 < eta <= 1:
        raise ValueError(f"eta_target must lie in (0, 1], got {eta}")
    if (work_rate is None) == (t_step_est is None):
        raise ValueError("give exactly one of work_rate and t_step_est")
    if t_step_est is None:
        if work_rate <= 0:
            raise ValueError("work_rate must be positive")
        t_step_est = work_rate * n_at / eta

    # Guard against n/n_at landing a hair above an integer through rounding.
    P_target = max(1, math.ceil(n / n_at - 1e-9))
    nodes = P_target / ranks_per_node
    nodes_whole = math.ceil(P_target / ranks_per_node)
    hours_per_node = N_steps * t_step_est / SECONDS_PER_HOUR
    return CampaignPlan(
        n=int(n),
        n_at_target=n_at,
        eta_target=eta,
        P_target=P_target,
        ranks_per_node=ranks_per_node,
        nodes=nodes,
        nodes_whole=nodes_whole,
        t_step_est=t_step_est,
        N_steps=N_steps,
        node_hours=nodes * hours_per_node,
        node_hours_whole=nodes_whole * hours_per_node,
    )


def sweep(
    n_values: Iterable[float],
    knee: KneeResult | float,
    ranks_per_node: int,
    N_steps: int,
    work_rate: float | None = None,
    **kwargs,
) -> list[CampaignPlan]:
    """:func:`plan` for each problem size, in input order."""
    n_values = list(n_values)
    if not n_values:
        raise ValueError("sweep needs at least one problem size")
    return [plan(n, knee, ranks_per_node, N_steps, work_rate, **kwargs) for n in n_values]
