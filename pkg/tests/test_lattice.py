import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings
from hypothesis import strategies as st

from hydrolim.lattice import (
    Boundary,
    Configuration,
    PiecewiseConstantProfile,
    delta_distance,
    empirical_measure,
    leq,
    read_configuration_csv,
    read_profile_csv,
    scaled_window,
    total_variation,
)

values = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def profiles(draw, max_fronts=6, tails=None):
    n = draw(st.integers(0, max_fronts))
    pos = np.cumsum(draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))) - 1.0
    vals = draw(st.lists(values, min_size=n + 1, max_size=n + 1))
    if tails is not None:
        if n == 0:
            vals = [tails[0]]
            if tails[0] != tails[1]:
                pos, vals = np.array([0.0]), [tails[0], tails[1]]
        else:
            vals[0], vals[-1] = tails
    return PiecewiseConstantProfile(np.asarray(pos), np.asarray(vals))


def brute_delta(u, v, lo=-3.0, hi=6.0, n=90_001):
    x = np.linspace(lo, hi, n)
    d = u(x) - v(x)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(x))])
    return np.max(np.abs(cum))


def test_configuration_validates_occupancies():
    with pytest.raises(ValueError):
        Configuration(0, [0, 2], cap=1)
    with pytest.raises(ValueError):
        Configuration(0, [], cap=1)
    with pytest.raises(ValueError):
        Configuration(0, [0, 1], cap=1, boundary=Boundary.tails(0.0, 1.5))


def test_periodic_indexing_wraps():
    eta = Configuration(-2, [1, 0, 0, 1], 1, Boundary.periodic())
    assert eta[2] == eta[-2] == 1
    assert eta[-3] == eta[1] == 1
    assert eta.read(5) == eta[1]


def test_ghost_reads_are_deterministic_and_respect_tails():
    eta = Configuration(0, [0, 0], 1, Boundary.tails(1.0, 0.0))
    assert all(eta.read(x, key=7) == 1 for x in range(-20, 0))
    assert all(eta.read(x, key=7) == 0 for x in range(2, 20))
    half = Configuration(0, [0], 3, Boundary.tails(1.5, 1.5))
    draws = [half.read(x, key=3) for x in range(-2000, 0)]
    assert draws == [half.read(x, key=3) for x in range(-2000, 0)]
    assert abs(np.mean(draws) - 1.5) < 0.1


def test_shift_and_order():
    eta = Configuration(0, [1, 0, 1], 1)
    assert eta.shift(1)[0] == eta[1]
    xi = Configuration(0, [1, 1, 1], 1)
    assert leq(eta, xi) and not leq(xi, eta)
    with pytest.raises(ValueError):
        leq(eta, Configuration(1, [1, 1, 1], 1))


def test_profile_evaluation_is_right_continuous():
    u = PiecewiseConstantProfile.riemann(1.0, 0.0, at=0.5)
    assert u(0.5) == 0.0 and u(0.4999) == 1.0


@given(st.tuples(values, values).flatmap(lambda t: st.tuples(profiles(tails=t), profiles(tails=t))))
@settings(max_examples=60, deadline=None)
def test_delta_distance_matches_quadrature(pair):
    u, v = pair
    exact = delta_distance(u, v)
    assert exact == pytest.approx(brute_delta(u, v), abs=2e-3)


@given(st.tuples(values, values).flatmap(lambda t: st.tuples(profiles(tails=t), profiles(tails=t), profiles(tails=t))))
@settings(max_examples=40, deadline=None)
def test_delta_distance_is_a_pseudometric(triple):
    u, v, w = triple
    assert delta_distance(u, u) == 0.0
    assert delta_distance(u, v) == pytest.approx(delta_distance(v, u), abs=1e-12)
    assert delta_distance(u, w) <= delta_distance(u, v) + delta_distance(v, w) + 1e-12


def test_delta_distance_rejects_different_tails():
    with pytest.raises(ValueError):
        delta_distance(PiecewiseConstantProfile.constant(0.0), PiecewiseConstantProfile.constant(0.5))


@given(profiles(), st.floats(-2, 2), st.floats(0.01, 3))
@settings(max_examples=60, deadline=None)
def test_integral_matches_quadrature(u, a, length):
    b = a + length
    x = np.linspace(a, b, 200_001)
    assert u.integral(a, b) == pytest.approx(trapezoid(u(x), x), abs=1e-4)


def test_empirical_measure_is_a_step_function_of_the_occupancies():
    eta = Configuration(-1, [1, 0, 1, 1], 1, Boundary.tails(0.3, 0.7))
    pi = empirical_measure(eta, 2)
    assert pi(-0.5) == 1.0 and pi(0.0) == 0.0 and pi(0.5) == 1.0 and pi(1.49) == 1.0 and pi(1.5) == 0.0
    assert pi.mass() == pytest.approx(3 / 2)
    tails = empirical_measure(eta, 2, tails="boundary")
    assert tails.left == 0.3 and tails.right == 0.7


def test_total_variation_and_simplify():
    u = PiecewiseConstantProfile(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 1.0, 0.0]))
    assert total_variation(u) == 2.0
    assert u.simplify().n_fronts == 2


def test_restrict_keeps_inside_values():
    u = PiecewiseConstantProfile.from_steps([0.0, 1.0, 2.0], [0.2, 0.8], 0.0, 0.0)
    r = u.restrict(0.5, 1.5, outside=0.0)
    assert r(0.7) == 0.2 and r(1.2) == 0.8 and r(0.4) == 0.0 and r(1.6) == 0.0
    with pytest.raises(ValueError):
        u.restrict(1.0, 1.0)


def test_csv_round_trips(tmp_path):
    u = PiecewiseConstantProfile.from_steps([-0.5, 0.25, 1.0], [0.125, 0.9], 0.1, 0.3)
    u.to_csv(tmp_path / "u.csv")
    v = read_profile_csv(tmp_path / "u.csv")
    assert np.array_equal(u.positions, v.positions) and np.array_equal(u.values, v.values)
    eta = Configuration(-3, [0, 2, 1, 0], 2)
    eta.to_csv(tmp_path / "eta.csv")
    assert read_configuration_csv(tmp_path / "eta.csv", cap=2) == eta


def test_scaled_window_covers_interval():
    lo, hi = scaled_window(100, 1.5)
    assert lo == -150 and hi == 149
