import math

import numpy as np
import pytest

from hydrolim.graphical import (
    Observer,
    couple,
    coupled_trajectory,
    evolve,
    generate_events,
    shift_stream,
    simulate,
)
from hydrolim.lattice import Boundary, Configuration, leq
from hydrolim.models import zoo
from hydrolim.models.spec import build_family

MODELS = {**zoo.shipped_models(), "tasep": zoo.tasep(), "asep": zoo.asep(0.75)}


def replay(fam, env, eta, events, t):
    """Apply the reference update rule point by point."""
    for b in events.batches(0.0, t):
        for s, x, v, key in zip(b.times, b.sites, b.aux, b.keys):
            eta = fam.apply(env, int(x), v, eta, int(key))
    return eta


@pytest.mark.parametrize("name", sorted(MODELS))
@pytest.mark.parametrize("boundary", ["periodic", "tails"])
def test_compiled_engine_matches_reference_rule(name, boundary):
    fam = build_family(MODELS[name])
    rng = np.random.default_rng(11)
    L = 24
    if boundary == "periodic":
        bd, band, periodic = Boundary.periodic(), 0, True
    else:
        bd, band, periodic = Boundary.tails(0.5 * fam.K, 0.25 * fam.K), fam.locality_radius, False
    eta0 = Configuration(0, rng.integers(0, fam.K + 1, size=L), fam.K, bd)
    env = fam.environment(0, L - 1, seed=2, periodic=periodic)
    events = generate_events((0, L - 1), fam, 5.0, seed=9, band=band)
    assert evolve(env, eta0, events, 5.0) == replay(fam, env, eta0, events, 5.0)


def test_stream_is_reproducible_and_poisson():
    fam = build_family(zoo.tasep())
    ev = generate_events((0, 199), fam, 50.0, seed=4)
    again = generate_events((0, 199), fam, 50.0, seed=4)
    assert len(ev) == len(again)
    counts = ev.site_counts()
    assert np.array_equal(counts, again.site_counts())
    lam = fam.rate_per_site * 50.0
    # per-site counts are Poisson(lam): check mean and dispersion
    assert abs(counts.mean() - lam) < 5 * math.sqrt(lam / counts.size)
    assert 0.7 < counts.var() / lam < 1.3


def test_partial_materialization_agrees_with_full_stream():
    fam = build_family(zoo.two_step_tasep())
    ev = generate_events((-30, 30), fam, 20.0, seed=1)
    full = [(t, x) for t, x, _ in ev.points()]
    part = [(float(t), int(x)) for b in ev.batches(7.5, 13.0) for t, x in zip(b.times, b.sites)]
    assert part == [(t, x) for t, x in full if 7.5 < t <= 13.0]
    assert all(b > a for (a, _), (b, _) in zip(full, full[1:]))


def test_shifted_stream_relabels_points():
    fam = build_family(zoo.tasep())
    ev = generate_events((0, 40), fam, 10.0, seed=3)
    sh = shift_stream(ev, 5, 2.0)
    want = [(t - 2.0, x - 5) for t, x, _ in ev.points() if t > 2.0]
    got = [(t, x) for t, x, _ in sh.points()]
    assert np.allclose(np.array(got), np.array(want))


def test_markov_property_under_time_shift():
    fam = build_family(zoo.tasep())
    L = 30
    eta0 = Configuration(0, np.tile([1, 0, 1], L // 3), 1, Boundary.periodic())
    ev = generate_events((0, L - 1), fam, 10.0, seed=6)
    mid = evolve(None, eta0, ev, 4.0)
    assert evolve(None, mid, shift_stream(ev, 0, 4.0), 6.0) == evolve(None, eta0, ev, 10.0)


@pytest.mark.parametrize("name", sorted(MODELS))
def test_coupling_preserves_order(name):
    fam = build_family(MODELS[name])
    rng = np.random.default_rng(5)
    L = 20
    big = rng.integers(0, fam.K + 1, size=L)
    small = np.minimum(big, rng.integers(0, fam.K + 1, size=L))
    bd = Boundary.periodic()
    etas = [Configuration(0, small, fam.K, bd), Configuration(0, big, fam.K, bd)]
    env = fam.environment(0, L - 1, seed=0, periodic=True)
    ev = generate_events((0, L - 1), fam, 30.0, seed=8)
    traj = coupled_trajectory(env, etas, ev, [10.0, 30.0], check_order=True)
    assert traj.stats.order_violations == 0
    for lo, hi in traj.configurations:
        assert leq(lo, hi)
    assert couple(env, etas, ev, 30.0) == traj.configurations[-1]


def test_observer_currents_satisfy_mass_bookkeeping():
    fam = build_family(zoo.tasep())
    eta0 = Configuration(-100, np.r_[np.ones(100, int), np.zeros(100, int)], 1, Boundary.tails(1.0, 0.0))
    ev = generate_events((-100, 99), fam, 40.0, seed=2, band=fam.locality_radius)
    obs = [Observer(-0.5, 0), Observer(0.0, 0), Observer(0.5, 0)]
    traj = simulate(None, eta0, ev, [10.0, 20.0, 40.0], obs, check=True)
    for eta, recs in zip(traj.configurations, traj.currents):
        pos = [o.origin + math.floor(o.speed * r.time) for o, r in zip(obs, recs)]
        for i in range(3):
            for j in range(i + 1, 3):
                mass = sum(eta.read(y) for y in range(pos[i], pos[j]))
                assert recs[i].net - recs[j].net == mass
    assert traj.stats.conservation_violations == 0


def test_fixed_observer_current_counts_crossings():
    fam = build_family(zoo.tasep())
    eta0 = Configuration(0, [1, 0, 0, 0, 0, 0], 1, Boundary.tails(0.0, 0.0))
    ev = generate_events((0, 5), fam, 100.0, seed=0, band=1)
    traj = simulate(None, eta0, ev, [100.0], [Observer(0.0, 3)])
    final = traj.configurations[-1]
    left_of_bond = sum(final[y] for y in range(0, 3))
    # one particle, totally asymmetric: the bond (2, 3) is crossed once iff it is no longer on the left
    assert traj.currents[-1][0].net == 1 - left_of_bond


def test_torus_stream_must_match_window():
    fam = build_family(zoo.tasep())
    eta0 = Configuration(0, [0] * 10, 1, Boundary.periodic())
    with pytest.raises(ValueError):
        evolve(None, eta0, generate_events((0, 9), fam, 1.0, seed=0, band=1), 1.0)
