import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydrolim import harness
from hydrolim.harness import ExperimentPlan, sample_initial_state, stream_seed
from hydrolim.lattice import PiecewiseConstantProfile, leq
from hydrolim.models import zoo


def test_plan_rejects_unfenced_window_and_small_margin():
    with pytest.raises(ValueError, match="fencing"):
        ExperimentPlan(zoo.tasep(), PiecewiseConstantProfile.riemann(1.0, 0.0), half_width=1.0)
    with pytest.raises(ValueError, match="margin"):
        ExperimentPlan(zoo.tasep(), PiecewiseConstantProfile.riemann(1.0, 0.0), margin=0.5)


def test_plan_window_and_round_trip():
    plan = ExperimentPlan.from_dict({"model": "two_step_tasep", "initial": {"riemann": [0.8, 0.05]}, "times": [0.5]})
    # radius 0 data, speed bound max(|G'| on [0.05, 0.8], 2 * 1) = 2, margin 1
    assert plan.required_half_width == pytest.approx(0.0 + 2.0 * 0.5 + 1.0)
    assert plan.window(100) == (-200, 199)
    again = ExperimentPlan.from_dict(plan.to_dict())
    assert again.to_dict() == plan.to_dict()


@given(st.integers(0, 10_000), st.floats(0, 1), st.floats(0, 1), st.sampled_from([1, 2]))
@settings(max_examples=40, deadline=None)
def test_initial_states_are_monotone_in_the_profile(seed, a, b, K):
    lo, hi = sorted((a, b))
    small = PiecewiseConstantProfile.riemann(K * lo, 0.0)
    big = PiecewiseConstantProfile.riemann(K * hi, 0.0)
    window = (-60, 59)
    s = sample_initial_state(small, 50, seed, K, window)
    t = sample_initial_state(big, 50, seed, K, window)
    assert np.all(s.occupancies <= t.occupancies)


def test_initial_state_has_the_right_density():
    u = PiecewiseConstantProfile.from_steps([0.0, 1.0], [0.3], 0.0, 0.0)
    eta = sample_initial_state(u, 20_000, 0, 1, (0, 19_999))
    assert abs(eta.occupancies.mean() - 0.3) < 5 * np.sqrt(0.21 / 20_000)
    with pytest.raises(ValueError):
        sample_initial_state(PiecewiseConstantProfile.constant(1.5), 10, 0, 1, (0, 9))


def test_stream_seeds_are_distinct_and_stable():
    assert stream_seed(1, 200) == stream_seed(1, 200)
    assert len({stream_seed(s, N) for s in range(5) for N in (200, 800)}) == 10


def test_small_riemann_experiment_runs_and_balances_currents():
    plan = ExperimentPlan.from_dict({"model": "tasep", "initial": {"riemann": [1.0, 0.0]}, "scales": [50, 100],
                                     "seeds": [0, 1], "speeds": [-0.5, 0.0, 0.5]})
    rep = harness.riemann_experiment(plan)
    assert len(rep.rows) == 4
    assert all(r["identity_failures"] == 0 for r in rep.rows)
    assert all(0 <= r["delta"] < 0.2 for r in rep.rows)
    cur = harness.current_lln_experiment(plan, rows=rep.rows)
    assert cur.summary["identity_failures"] == 0
    assert set(cur.summary["currents"]) == {repr(v) for v in (-0.5, 0.0, 0.5)}


def test_monotone_helpers():
    assert harness.strictly_decreasing([3, 2, 1]) and not harness.strictly_decreasing([3, 3, 1])
    assert harness.nonincreasing([3, 3, 1]) and not harness.nonincreasing([1, 2])


def test_identical_pairs_never_separate():
    rep = harness.macro_stability_test("tasep", N_list=(25,), trials=5, n_particles=10, identical=True)
    assert rep.summary["violation_frequency"][25] == 0.0


def test_finite_propagation_with_small_fencing_speed_is_rare():
    rep = harness.finite_propagation_test("tasep", N=30, t=0.2, trials=20)
    assert rep.summary["violation_frequency"] == 0.0
