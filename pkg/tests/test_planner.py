import pytest
from hypothesis import given
from hypothesis import strategies as st

from strongscale.planner import plan, sweep
from strongscale.scaling_model import KneeResult


def test_worked_example():
    p = plan(1.6e9, 3e6, ranks_per_node=8, N_steps=2000, t_step_est=0.05)
    # ceil(533.33) ranks on 66.75 nodes for 100 s.
    assert p.P_target == 534
    assert p.nodes == 66.75
    assert p.node_hours == pytest.approx(66.75 * 100 / 3600, rel=1e-15)
    assert p.node_hours == pytest.approx(1.854, abs=1e-3)
    assert p.nodes_whole == 67
    assert p.node_hours_whole == pytest.approx(67 * 100 / 3600, rel=1e-15)


def test_problem_at_knee_needs_one_rank():
    assert plan(3e6, 3e6, 8, 10, t_step_est=1.0).P_target == 1
    assert plan(1e6, 3e6, 8, 10, t_step_est=1.0).P_target == 1
    assert plan(6e6, 3e6, 8, 10, t_step_est=1.0).P_target == 2


def test_sweep_table2_cases():
    sizes = [95_011_000, 161_518_700, 1_615_187_000]
    plans = sweep(sizes, 2.5e6, ranks_per_node=8, N_steps=1000, t_step_est=0.04)
    assert [p.P_target for p in plans] == [39, 65, 647]
    assert len({p.t_step_est for p in plans}) == 1


def test_work_rate_path():
    rate = 2e-9
    p = plan(1e9, 2.5e6, 4, 100, work_rate=rate)
    assert p.t_step_est == pytest.approx(rate * 2.5e6 / 0.8, rel=1e-15)


def test_accepts_knee_result():
    k = KneeResult(0.7, 1e6, 10.0, 0.1, (), False)
    p = plan(1e7, k, 8, 100, work_rate=1e-8)
    assert p.eta_target == 0.7
    assert p.P_target == 10
    assert p.t_step_est == pytest.approx(1e-8 * 1e6 / 0.7, rel=1e-15)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(work_rate=None, t_step_est=None),
        dict(work_rate=1e-9, t_step_est=0.1),
        dict(work_rate=-1.0),
        dict(work_rate=1e-9, eta_target=1.5),
    ],
)
def test_invalid_inputs(kwargs):
    with pytest.raises(ValueError):
        plan(1e9, 2.5e6, 8, 100, **kwargs)


def test_sweep_needs_sizes():
    with pytest.raises(ValueError):
        sweep([], 2.5e6, 8, 100, t_step_est=1.0)


@given(st.floats(1e6, 1e12), st.floats(1e4, 1e7), st.floats(1e-12, 1e-6), st.integers(1, 8))
def test_scale_consistency(n, n_at, rate, k):
    base = plan(n, n_at, 8, 100, work_rate=rate)
    scaled = plan(n * k, n_at, 8, 100, work_rate=rate)
    # Per-step time depends only on the per-rank load at the knee.
    assert scaled.t_step_est == base.t_step_est
    assert base.P_target >= n / n_at - 1e-6 * n / n_at
    assert scaled.P_target >= base.P_target
    assert scaled.node_hours == pytest.approx(scaled.P_target / 8 * 100 * scaled.t_step_est / 3600, rel=1e-12)
