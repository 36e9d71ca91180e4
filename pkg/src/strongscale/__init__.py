"""Strong-scaling performance analysis for HPC run records and solver logs."""

from .records import RunRecord, ScalingSeries, ValidationError, grid_points, group_series, make_series
from .scaling_model import (
    CoarseLogFit,
    EfficiencyPoint,
    KneeResult,
    coarse_grid_sizes,
    effective_flops,
    efficiency_series,
    fit_coarse_log_model,
    fit_work_rate,
    knee,
    mdofs,
    predict_tstep,
    saturated_speed,
    speed_efficiency,
    total_dofs,
)

__version__ = "0.1.0"
