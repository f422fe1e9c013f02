import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydrolim.lattice import Boundary, Configuration
from hydrolim.models import zoo
from hydrolim.models.kernels import JumpKernel, k_exclusion_rates, linear_misanthrope_rates, rate_table_violations
from hydrolim.models.monotone import check_monotone
from hydrolim.models.spec import ModelSpec, build_family

ALL_MODELS = {**zoo.shipped_models(), "tasep": zoo.tasep(), "asep": zoo.asep(0.75), "misanthrope_k2": zoo.misanthrope_k2()}


def transition_frequencies(fam, env, eta, x, n, seed=0):
    rng = np.random.default_rng(seed)
    aux = fam.sample_aux(rng, n)
    counts = {}
    for v in aux:
        out = fam.apply(env, x, v, eta)
        moved = np.nonzero(out.occupancies != eta.occupancies)[0]
        if moved.size:
            gained = [i for i in moved if out.occupancies[i] > eta.occupancies[i]]
            y = eta.window_lo + int(gained[0])
            counts[y] = counts.get(y, 0) + 1
    return {y: c / n for y, c in counts.items()}


@pytest.mark.parametrize("name", sorted(ALL_MODELS))
def test_update_frequencies_match_generator_rates(name):
    fam = build_family(ALL_MODELS[name])
    K = fam.K
    rng = np.random.default_rng(3)
    occ = rng.integers(0, K + 1, size=11)
    occ[5] = max(occ[5], 1)
    eta = Configuration(-5, occ, K, Boundary.tails(0.0, 0.0))
    env = fam.environment(-5, 5, seed=1)
    n = 40_000
    freq = transition_frequencies(fam, env, eta, 0, n)
    rates = fam.jump_rates(env, 0, eta)
    m = fam.rate_per_site
    for y in set(freq) | set(rates):
        p = rates.get(y, 0.0) / m
        sigma = np.sqrt(max(p * (1 - p), 1e-12) / n)
        assert abs(freq.get(y, 0.0) - p) <= 5 * sigma + 1e-12, (y, freq.get(y), p)


def test_tasep_rates():
    fam = build_family(zoo.tasep())
    eta = Configuration(0, [1, 0, 1, 1], 1)
    assert fam.jump_rates(None, 0, eta) == {1: 1.0}
    assert fam.jump_rates(None, 2, eta) == {}
    assert fam.jump_rates(None, 1, eta) == {}


def test_two_step_exclusion_jumps_to_first_hole():
    fam = build_family(zoo.two_step_tasep())
    eta = Configuration(0, [1, 1, 0, 0], 1)
    # from site 1 the walk reaches the hole at 2 in one step, from 0 it needs two
    assert fam.jump_rates(None, 1, eta) == {2: 1.0}
    assert fam.jump_rates(None, 0, eta) == {2: 1.0}
    blocked = Configuration(0, [1, 1, 1, 0], 1)
    assert fam.jump_rates(None, 0, blocked) == {}


def test_rate_table_checks():
    assert rate_table_violations(k_exclusion_rates(3)) == []
    assert rate_table_violations(linear_misanthrope_rates(2)) == []
    broken = np.array([[0, 0, 0], [1.0, 0.5, 0], [0.25, 0.25, 0]])
    assert any("first argument" in r for r in rate_table_violations(broken))
    with pytest.raises(ValueError):
        build_family(zoo.broken_misanthrope())


def test_kernel_validation():
    with pytest.raises(ValueError):
        JumpKernel((0,), (1.0,))
    with pytest.raises(ValueError):
        JumpKernel((1, 2), (0.5, 0.6))
    k = JumpKernel.geometric(0.5, p_right=1.0, tol=1e-3)
    assert min(k.offsets) >= 1 and abs(sum(k.probs) - 1.0) < 1e-12


@pytest.mark.parametrize("name", sorted(zoo.shipped_models()))
def test_spec_json_round_trip(name, tmp_path):
    spec = zoo.shipped_models()[name]
    spec.save(tmp_path / "m.json")
    again = ModelSpec.load(tmp_path / "m.json")
    assert again.to_dict() == spec.to_dict()
    with pytest.raises(ValueError):
        ModelSpec.from_dict({**spec.to_dict(), "bogus": 1})


def test_environment_is_seeded():
    fam = build_family(zoo.misanthrope_site_disorder())
    a = fam.environment(0, 50, seed=4)
    b = fam.environment(0, 50, seed=4)
    c = fam.environment(0, 50, seed=5)
    assert np.array_equal(a.rows(0, 50), b.rows(0, 50))
    assert not np.array_equal(a.rows(0, 50), c.rows(0, 50))


@pytest.mark.parametrize("name", ["tasep", "two_step_tasep", "overtaking"])
def test_monotone_models_are_certified(name):
    cert = check_monotone(build_family(ALL_MODELS[name]), window_size=4, aux_samples=2000)
    assert cert.ok and cert.complete


@pytest.mark.parametrize("spec", [zoo.broken_misanthrope(), zoo.broken_kstep_misanthrope()], ids=lambda s: s.name)
def test_broken_models_yield_a_genuine_counterexample(spec):
    fam = build_family(spec, strict=False)
    cert = check_monotone(fam, window_size=4, aux_samples=5000)
    assert not cert.ok
    ce = cert.counterexample
    assert np.all(ce.eta.occupancies <= ce.xi.occupancies)
    assert np.any(ce.image_eta.occupancies > ce.image_xi.occupancies)


@given(st.integers(0, 2**31), st.sampled_from(sorted(ALL_MODELS)))
@settings(max_examples=30, deadline=None)
def test_updates_conserve_mass_and_capacity(seed, name):
    fam = build_family(ALL_MODELS[name])
    rng = np.random.default_rng(seed)
    eta = Configuration(0, rng.integers(0, fam.K + 1, size=12), fam.K, Boundary.periodic())
    env = fam.environment(0, 11, seed=seed % 7, periodic=True)
    for v, x in zip(fam.sample_aux(rng, 50), rng.integers(0, 12, size=50)):
        out = fam.apply(env, int(x), v, eta)
        assert out.total == eta.total
        assert out.occupancies.max() <= fam.K
        eta = out
