import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strongscale.records import RunRecord, ScalingSeries, ValidationError
from strongscale.scaling_model import (
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


def series_from(n, ranks, times, platform="X"):
    records = tuple(RunRecord(platform=platform, P=P, n=n, t_step=t) for P, t in zip(ranks, times))
    return ScalingSeries("test", n, records)


def test_total_dofs():
    assert total_dofs(2_458_624) == 9_834_496
    assert total_dofs(1) == 4
    assert total_dofs(95_011_000) == 380_044_000


@pytest.mark.parametrize(
    "n, P, t, mult, expected, tol",
    [
        (2_458_624, 1, 7.98e-2, 1, 30.81, 0.005),
        (10**6, 1, 1.0, 1, 1.0, 1e-12),
        (2_458_624, 1, 6.02e-2, 4, 163.4, 0.05),
    ],
)
def test_mdofs(n, P, t, mult, expected, tol):
    r = RunRecord(platform="X", P=P, n=n, t_step=t)
    assert mdofs(r, mult) == pytest.approx(expected, abs=tol)


def test_mdofs_rejects_other_multipliers():
    with pytest.raises(ValueError):
        mdofs(RunRecord(platform="X", P=1, n=10, t_step=1.0), 3)


def test_efficiency_examples():
    pts = efficiency_series(series_from(10**8, [8, 16, 64], [1.0, 0.5, 0.15625]))
    assert [p.eta for p in pts] == [1.0, 1.0, 0.8]
    assert pts[2].n_over_P == 10**8 / 64


timing = st.floats(min_value=1e-4, max_value=1e3, allow_nan=False)


@st.composite
def random_series(draw, min_size=2):
    ranks = sorted(draw(st.sets(st.integers(1, 4096), min_size=min_size, max_size=12)))
    times = [draw(timing) for _ in ranks]
    return series_from(10**9, ranks, times)


@given(random_series(min_size=1))
def test_efficiency_forms_agree(series):
    anchor_mdofs = mdofs(series.anchor)
    pts = efficiency_series(series)
    assert pts[0].eta == 1.0
    for p in pts:
        assert p.eta == pytest.approx(p.mdofs / anchor_mdofs, rel=1e-12)


@given(random_series())
def test_knee_invariant_under_dof_multiplier(series):
    k1 = knee(series, 0.8, dof_multiplier=1)
    k4 = knee(series, 0.8, dof_multiplier=4)
    assert k1.n_at_target == k4.n_at_target
    for p1, p4 in zip(efficiency_series(series, 1), efficiency_series(series, 4)):
        assert p4.mdofs == pytest.approx(4 * p1.mdofs, rel=1e-15)


@given(
    st.lists(st.floats(0.05, 0.99), min_size=1, max_size=10, unique=True),
    st.floats(0.1, 1.0),
    st.floats(0.1, 1.0),
)
def test_knee_monotone_in_target(drops, t1, t2):
    # Strictly decreasing efficiency with decreasing n/P.
    etas = [1.0] + sorted(drops, reverse=True)
    ranks = [2**i for i in range(len(etas))]
    times = [1.0 / (P * eta) for P, eta in zip(ranks, etas)]
    series = series_from(10**7, ranks, times)
    lo, hi = sorted((t1, t2))
    assert knee(series, hi).n_at_target >= knee(series, lo).n_at_target


def test_knee_two_point_log_linear():
    # eta = 1.0 at n/P = 4M and 0.6 at n/P = 1M: 0.8 is halfway in log space.
    n = 4_000_000
    series = series_from(n, [1, 4], [1.0, 1.0 / (4 * 0.6)])
    k = knee(series)
    assert not k.extrapolated
    assert k.n_at_target == pytest.approx(2_000_000, rel=1e-12)
    assert k.P_at_target == pytest.approx(2.0, rel=1e-12)
    assert [p.P for p in k.bracketing_points] == [1, 4]


def test_knee_ideal_series_is_extrapolated():
    series = series_from(10**8, [8, 16, 32, 64], [8.0, 4.0, 2.0, 1.0])
    k = knee(series)
    assert k.extrapolated
    assert k.n_at_target == 10**8 / 64
    assert k.bracketing_points[0].P == 64


def test_knee_all_below_clamps_to_anchor():
    series = series_from(10**8, [8, 16], [1.0, 0.6])
    k = knee(series, eta_target=1.5)
    assert k.extrapolated
    assert k.bracketing_points[0].P == 8


def test_knee_takes_largest_crossing():
    # eta: 1.0, 0.7, 0.9, 0.5 -> first crossing between P=1 and P=2.
    etas = [1.0, 0.7, 0.9, 0.5]
    ranks = [1, 2, 4, 8]
    series = series_from(10**7, ranks, [1.0 / (P * e) for P, e in zip(ranks, etas)])
    k = knee(series)
    assert [p.P for p in k.bracketing_points] == [1, 2]


def test_knee_reports_superlinear():
    series = series_from(10**7, [1, 2, 4], [1.0, 0.45, 0.4])
    k = knee(series)
    assert any("superlinear" in d for d in k.diagnostics)


def test_knee_errors():
    with pytest.raises(ValidationError):
        knee(series_from(10**6, [1], [1.0]))
    with pytest.raises(ValueError):
        knee(series_from(10**6, [1, 2], [1.0, 0.6]), eta_target=0.0)


def _scan_knee(a, b, n, target=0.8):
    """Brute-force oracle on t(P) = a*n/P + b: first integer P with eta < target."""
    t1 = a * n + b
    P = 1
    while True:
        eta = t1 / (P * (a * n / P + b))
        if eta < target:
            return n / (P - 1)
        P += 1


@pytest.mark.parametrize("a, b", [(1e-8, 1e-3), (1e-9, 1e-2), (1e-7, 5e-3)])
def test_knee_matches_brute_force_scan(a, b):
    n = 10**9
    expected = _scan_knee(a, b, n)
    ranks = sorted({int(round(P)) for P in np.geomspace(1, 10**6, 121)})
    series = series_from(n, ranks, [a * n / P + b for P in ranks])
    assert knee(series).n_at_target == pytest.approx(expected, rel=0.02)


@pytest.mark.parametrize("a, b", [(1e-8, 1e-3), (1e-9, 1e-2)])
def test_predicted_knee_time_matches_model(a, b):
    n = 10**9
    ranks = sorted({int(round(P)) for P in np.geomspace(1, 10**6, 121)})
    series = series_from(n, ranks, [a * n / P + b for P in ranks])
    k = knee(series)
    predicted = predict_tstep(fit_work_rate(series), n, k.P_at_target, 0.8)
    simulated = a * k.n_at_target + b
    assert predicted == pytest.approx(simulated, rel=0.02)


def test_fit_work_rate():
    assert fit_work_rate(series_from(10**6, [1], [2.0])) == 2.0e-6
    T = 0.37
    assert fit_work_rate(series_from(95_011_000, [8, 16], [T, T / 2])) == pytest.approx(8 * T / 95_011_000, rel=1e-15)


@given(random_series(min_size=1))
def test_work_rate_round_trip(series):
    anchor = series.anchor
    rate = fit_work_rate(series)
    assert predict_tstep(rate, series.n, anchor.P, 1.0) == pytest.approx(anchor.t_step, rel=1e-15)


def test_predict_tstep():
    assert predict_tstep(2.0e-6, 10**6, 1, 1.0) == 2.0
    c, n, P = 3e-9, 5e8, 64
    assert predict_tstep(c, n, P, 0.8) == pytest.approx(1.25 * c * n / P, rel=1e-15)
    with pytest.raises(ValueError):
        predict_tstep(1.0, 1.0, 1.0, 1.3)


def test_effective_flops():
    assert effective_flops(100, 0) == 100
    assert effective_flops(0, 100) == 50
    assert effective_flops(2184e9, 4145e9) == pytest.approx(4256.5e9)


def test_speed_efficiency():
    assert speed_efficiency(48 * 5.0, 48, 5.0) == 1.0
    assert speed_efficiency(3.36729e13, 48, 876e9) == pytest.approx(0.801, abs=5e-4)
    assert speed_efficiency(1.00108e13, 48, 876e9) == pytest.approx(0.238, abs=5e-4)


def test_saturated_speed():
    assert saturated_speed(701e9, 0.8) == pytest.approx(876.25e9, rel=1e-15)
    assert saturated_speed(3.3e11, 1.0) == 3.3e11
    # SS11 per-rank rate projected back with its own efficiency lands on the SS10 estimate.
    assert saturated_speed(208e9, 0.238) == pytest.approx(874e9, rel=1e-3)
    with pytest.raises(ValueError):
        saturated_speed(1.0, 0.0)


def test_coarse_grid_sizes():
    per_rank, _ = coarse_grid_sizes(2e6, 1, 7)
    assert per_rank == pytest.approx(5831, abs=0.5)
    _, total = coarse_grid_sizes(2e6 * 27648, 27648, 7)
    assert total == pytest.approx(2e6 / 343 * 27648, rel=1e-12)  # 161,212,828
    assert coarse_grid_sizes(343, 1, 7) == (1.0, 1.0)


@given(st.integers(1, 10**6))
def test_coarse_total_independent_of_P(P):
    n = 1_615_187_000
    assert coarse_grid_sizes(n, P, 7)[1] == pytest.approx(n / 343, rel=1e-12)


def test_coarse_log_zero_offset_ratio():
    fit = fit_coarse_log_model([(100, 0.65), (1000, 1.0)], zero_offset=True)
    assert fit.a == 0.0
    assert fit.ratio(1000, 100) == pytest.approx(math.log2(1000) / math.log2(100), rel=1e-15)
    measured = 1.0 / 0.65
    assert abs(fit.ratio(1000, 100) - measured) / measured == pytest.approx(0.025, abs=5e-4)


def test_coarse_log_exact_line():
    pts = [(P, 0.1 * math.log2(P)) for P in (2, 8, 64, 1024)]
    fit = fit_coarse_log_model(pts)
    assert fit.a == pytest.approx(0.0, abs=1e-14)
    assert fit.b == pytest.approx(0.1, rel=1e-14)


@given(
    st.tuples(st.integers(1, 10**6), st.floats(1e-3, 1e3)),
    st.tuples(st.integers(1, 10**6), st.floats(1e-3, 1e3)),
)
def test_coarse_log_two_points_interpolate(p1, p2):
    if p1[0] == p2[0]:
        with pytest.raises(ValueError):
            fit_coarse_log_model([p1, p2])
        return
    fit = fit_coarse_log_model([p1, p2])
    for r, (_, t) in zip(fit.residuals(), (p1, p2)):
        assert abs(r) <= 1e-12 * max(1.0, abs(t), abs(fit.a))


def test_coarse_log_noisy_recovers_slope():
    rng = np.random.default_rng(7)
    ranks = [16, 64, 256, 1024, 4096]
    pts = [(P, (0.2 + 0.1 * math.log2(P)) * (1 + rng.uniform(-0.01, 0.01))) for P in ranks]
    assert fit_coarse_log_model(pts).b == pytest.approx(0.1, rel=0.05)


def test_coarse_log_singular():
    with pytest.raises(ValueError):
        fit_coarse_log_model([(64, 1.0), (64, 1.1)])
    with pytest.raises(ValueError):
        fit_coarse_log_model([(1, 1.0)], zero_offset=True)
