import itertools

import numpy as np
import pytest

from hydrolim.flux_id import (
    analytic_flux,
    equilibrium_flux_estimate,
    flux_table,
    micro_flux_j1,
    micro_flux_j1_increment,
    micro_flux_j2,
    read_flux_csv,
    sweeps,
    write_flux_csv,
)
from hydrolim.lattice import Configuration
from hydrolim.models import zoo
from hydrolim.models.spec import build_family

PRODUCT_MODELS = {"tasep": zoo.tasep(), "asep": zoo.asep(0.75), "two_step": zoo.two_step_tasep(),
                  "overtaking_1": zoo.overtaking(1.0), "overtaking_half": zoo.overtaking(0.5)}


def bernoulli_expectation(fn, rho, lo, hi):
    """E[fn(eta)] under product Bernoulli(rho) on lo..hi by enumeration."""
    total = 0.0
    n = hi - lo + 1
    for bits in itertools.product((0, 1), repeat=n):
        k = sum(bits)
        total += rho**k * (1 - rho) ** (n - k) * fn(Configuration(lo, bits, 1))
    return total


@pytest.mark.parametrize("name", sorted(PRODUCT_MODELS))
@pytest.mark.parametrize("rho", [0.2, 0.5, 0.7])
def test_local_observables_average_to_closed_form(name, rho):
    fam = build_family(PRODUCT_MODELS[name])
    G = analytic_flux(PRODUCT_MODELS[name])
    R = fam.locality_radius
    lo, hi = -R, 2 * R + 1
    assert bernoulli_expectation(lambda e: micro_flux_j2(fam, None, e, 0), rho, lo, hi) == pytest.approx(G(rho))
    assert bernoulli_expectation(lambda e: micro_flux_j1(fam, None, e, 0), rho, lo, hi) == pytest.approx(G(rho))


def test_closed_forms():
    u = np.linspace(0, 1, 9)
    assert np.allclose(analytic_flux(zoo.asep(0.75))(u), 0.5 * u * (1 - u))
    assert np.allclose(analytic_flux(build_family(zoo.two_step_tasep()))(u), u + u**2 - 2 * u**3)
    # overtaking with equal rates coincides with two-step exclusion
    assert np.allclose(analytic_flux(zoo.overtaking(1.0))(u), u + u**2 - 2 * u**3)
    assert np.allclose(analytic_flux(zoo.overtaking(0.5))(u), (1 - u) * (u + u**2))
    assert analytic_flux(zoo.misanthrope_site_disorder()) is None


@pytest.mark.parametrize("name", ["two_step_tasep", "misanthrope_bond", "kstep_misanthrope"])
def test_j1_increment_is_a_difference_of_bond_currents(name):
    spec = zoo.shipped_models()[name]
    fam = build_family(spec)
    rng = np.random.default_rng(0)
    env = fam.environment(-20, 20, seed=0)
    for _ in range(20):
        eta = Configuration(-20, rng.integers(0, fam.K + 1, size=41), fam.K)
        for x in (1, 3, 5):
            want = micro_flux_j1(fam, env, eta, 0) - micro_flux_j1(fam, env, eta, x)
            assert micro_flux_j1_increment(fam, env, eta, x) == pytest.approx(want)


def test_tasep_estimate_and_paired_estimators():
    fam = build_family(zoo.tasep())
    p = equilibrium_flux_estimate(fam, 0.5, L=128, T=sweeps(fam, 300), seeds=(0, 1), snapshots=50, check=True)
    assert abs(p.value - 0.25) < max(4 * p.stderr, 0.01)
    assert abs(p.j_diff) <= 4 * p.j_diff_stderr + 1e-12
    assert p.conservation_violations == 0 and p.bound_violations == 0
    assert p.rho_effective == 0.5


def test_estimate_is_reproducible():
    fam = build_family(zoo.two_step_tasep())
    a = equilibrium_flux_estimate(fam, 0.3, L=64, T=50.0, seeds=(3,))
    b = equilibrium_flux_estimate(fam, 0.3, L=64, T=50.0, seeds=(3,))
    assert a.value == b.value and a.stderr == b.stderr


def test_flux_table_pins_endpoints_and_round_trips(tmp_path):
    fam = build_family(zoo.tasep())
    est = flux_table(fam, [0.25, 0.5], L=64, T=sweeps(fam, 100), seeds=(0,))
    assert est.rhos.tolist() == [0.0, 0.25, 0.5, 1.0]
    assert est.values[0] == 0.0 and est.values[-1] == 0.0
    est.to_csv(tmp_path / "flux.csv")
    G = read_flux_csv(tmp_path / "flux.csv")
    assert np.allclose(G(est.rhos), est.values)
    write_flux_csv(tmp_path / "again.csv", est.rhos, est.values, est.stderrs, est.method)
    assert (tmp_path / "again.csv").read_bytes() == (tmp_path / "flux.csv").read_bytes()
