"""Microscopic flux observables and identification of the macroscopic flux G."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .graphical import _engine as E
from .graphical.evolution import Observer, _Runner
from .graphical.stream import generate_events
from .lattice import Boundary, Configuration
from .models.families import KStepExclusion, KStepMisanthrope, Misanthrope, Overtaking, TransformationFamily
from .models.spec import ModelSpec, build_family, sample_environment_for
from .scl.flux import FluxFunction

# --- local observables --------------------------------------------------------


def micro_flux_j2(family: TransformationFamily, env, eta: Configuration, x: int = 0) -> float:
    """Expected displacement rate of the particles at x: sum_y (y - x) c(x -> y)."""
    return float(sum((y - x) * r for y, r in family.jump_rates(env, x, eta).items()))


def micro_flux_j1(family: TransformationFamily, env, eta: Configuration, bond: int = 0) -> float:
    """Net jump rate across the bond between ``bond`` and ``bond + 1`` (rightwards positive)."""
    R = family.locality_radius
    total = 0.0
    for a in range(bond - R + 1, bond + R + 1):
        for b, r in family.jump_rates(env, a, eta).items():
            if a <= bond < b:
                total += r
            elif b <= bond < a:
                total -= r
    return total


def micro_flux_j1_increment(family: TransformationFamily, env, eta: Configuration, x: int) -> float:
    """j1 - tau_x j1: the generator applied to sum_{y=1}^{x} eta(y) (x >= 1)."""
    if x < 1:
        raise ValueError("x must be >= 1")
    R = family.locality_radius
    total = 0.0
    for a in range(1 - R, x + R + 1):
        for b, r in family.jump_rates(env, a, eta).items():
            total += r * ((1 <= b <= x) - (1 <= a <= x))
    return total


# --- analytic fluxes ------------------------------------------------------------


def _poly_mul(a, b):
    return np.polynomial.polynomial.polymul(a, b)


def _kstep_flux_coeffs(family: KStepExclusion) -> np.ndarray:
    """u * E[displacement] under Bernoulli(u): first empty site at step j has prob u^{d}(1 - u)."""
    total = np.zeros(1)
    for path, q in zip(family.paths, family.path_probs):
        seen: set[int] = set()
        for pos in path:
            pos = int(pos)
            if pos == 0:
                break
            if pos not in seen:
                term = np.zeros(len(seen) + 2)
                term[len(seen) + 1] = 1.0  # u^{d+1}
                term = _poly_mul(term, [1.0, -1.0]) * q * pos
                total = np.polynomial.polynomial.polyadd(total, term)
                seen.add(pos)
    return total


def analytic_flux(spec: ModelSpec | TransformationFamily) -> FluxFunction | None:
    """Closed-form flux for disorder-free models with Bernoulli invariant measures, else None."""
    if isinstance(spec, ModelSpec):
        if spec.flux is not None:
            return FluxFunction.from_dict(spec.flux, spec.K)
        fam = build_family(spec)
    else:
        fam = spec
    if fam.disorder.kind != "none" or fam.K != 1:
        return None
    if isinstance(fam, Misanthrope):
        z, p = fam.kernel.arrays()
        drift = float(np.dot(z, p)) * float(fam.b[1, 0])
        return FluxFunction.polynomial([0.0, drift, -drift])
    if isinstance(fam, KStepExclusion):
        return FluxFunction.polynomial(_kstep_flux_coeffs(fam))
    if isinstance(fam, Overtaking):
        k = fam.k
        c = np.zeros(k + 1)
        j = np.arange(1, k + 1)
        c[1:] = j * (fam.forward - fam.backward)
        return FluxFunction.polynomial(_poly_mul(c, [1.0, -1.0]))
    if isinstance(fam, KStepMisanthrope):
        return None
    return None


# --- Monte-Carlo estimation -------------------------------------------------------


@dataclass
class FluxPoint:
    """One equilibrium flux estimate on a torus."""

    rho: float
    value: float
    stderr: float
    method: str
    L: int
    T: float
    burn_in: float
    seeds: tuple
    n_particles: int
    batches: np.ndarray = field(repr=False)
    j1: float | None = None
    j2: float | None = None
    j_diff: float | None = None
    j_diff_stderr: float | None = None
    j1_stderr: float | None = None
    j2_stderr: float | None = None
    observers: dict = field(default_factory=dict)
    events: int = 0
    conservation_violations: int = 0
    bound_violations: int = 0

    @property
    def rho_effective(self) -> float:
        return self.n_particles / self.L


def sweeps(family: TransformationFamily, n: float) -> float:
    """Time needed for n sweeps (one expected event per site per sweep)."""
    return float(n) / family.rate_per_site


def torus_initial_state(family: TransformationFamily, L: int, n: int, rng: np.random.Generator | None) -> np.ndarray:
    """n particles on L sites: uniform random positions (K = 1, rng given) or evenly spread."""
    K = family.K
    if not 0 <= n <= K * L:
        raise ValueError("particle number out of range")
    if rng is not None and K == 1:
        occ = np.zeros(L, dtype=np.int64)
        occ[rng.choice(L, size=n, replace=False)] = 1
        return occ
    x = np.arange(L + 1)
    cum = (x * n) // L
    return np.diff(cum).astype(np.int64)


def _batch_stderr(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return 0.0
    return float(np.std(x, ddof=1) / np.sqrt(x.size))


def equilibrium_flux_estimate(
    family: TransformationFamily,
    rho: float,
    L: int = 512,
    T: float | None = None,
    burn_in: float | None = None,
    seeds=range(8),
    env=None,
    env_seed: int | None = 0,
    n_batches: int = 20,
    snapshots: int = 0,
    probe_sites: int = 16,
    observers: tuple[int, ...] = (),
    check: bool = False,
) -> FluxPoint:
    """Time-averaged current per site on a torus of L sites at density rho.

    The main estimator is total displacement / (L T), i.e. the origin
    current averaged over all translates.  Batch means over ``n_batches``
    windows per seed give the standard error.  With ``snapshots > 0`` the
    local observables are recorded at that many times per seed: j1 at
    ``probe_sites`` evenly spaced bonds (its stationary mean is the current
    at every bond) and j2 averaged over all sites (under disorder a single
    site's drift is biased, only the spatial mean equals the current).
    The two are paired per snapshot so their difference gets its own error bar.
    """
    T = sweeps(family, 2000) if T is None else float(T)
    n = int(round(rho * L))
    product = family.product_invariant
    if burn_in is None:
        burn_in = 0.0 if product else sweeps(family, 10 * L)
    if env is None and family.disorder.kind != "none":
        env = sample_environment_for(family, (0, L - 1), 0 if env_seed is None else env_seed, periodic=True)
    seeds = tuple(int(s) for s in seeds)
    batches, j1s, j2s, diffs = [], [], [], []
    obs_rates = {p: [] for p in observers}
    stats_total = np.zeros(E.N_STATS, dtype=np.int64)
    probes = np.unique(np.linspace(0, L, probe_sites, endpoint=False).astype(int)) if snapshots else np.empty(0, int)
    for s in seeds:
        rng = np.random.default_rng(np.random.SeedSequence(s, spawn_key=(0xF1,)))
        occ = torus_initial_state(family, L, n, rng if product else None)
        eta0 = Configuration(0, occ, family.K, Boundary.periodic())
        events = generate_events((0, L - 1), family, burn_in + T, s)
        run = _Runner(env, eta0, events, [Observer(0.0, p) for p in observers], check)
        run.advance(burn_in)
        d0 = int(run.stats[E.ST_DISPLACEMENT])
        obs0 = run.obs_counts.copy()
        edges = burn_in + T * np.arange(1, n_batches + 1) / n_batches
        snap_times = burn_in + T * (np.arange(snapshots) + 0.5) / snapshots if snapshots else np.empty(0)
        marks = sorted({*edges.tolist(), *snap_times.tolist()})
        edge_set = set(edges.tolist())
        snap_set = set(snap_times.tolist())
        prev = d0
        for t in marks:
            run.advance(t)
            if t in edge_set:
                d = int(run.stats[E.ST_DISPLACEMENT])
                batches.append((d - prev) / (L * T / n_batches))
                prev = d
            if t in snap_set:
                eta = run.configuration()
                a = np.mean([micro_flux_j1(family, env, eta, int(x)) for x in probes])
                b = np.mean([micro_flux_j2(family, env, eta, int(x)) for x in range(L)])
                j1s.append(a)
                j2s.append(b)
                diffs.append(a - b)
        for k, p in enumerate(observers):
            c = run.obs_counts[k] - obs0[k]
            obs_rates[p].append(float(c[0] - c[1] + c[2]) / T)
        stats_total += run.stats
    batches = np.array(batches)
    point = FluxPoint(
        rho=float(rho),
        value=float(batches.mean()) if batches.size else 0.0,
        stderr=_batch_stderr(batches),
        method="equilibrium_mc" if product else "burnin_mc",
        L=L,
        T=T,
        burn_in=float(burn_in),
        seeds=seeds,
        n_particles=n,
        batches=batches,
        observers={p: (float(np.mean(v)), _batch_stderr(np.array(v))) for p, v in obs_rates.items()},
        events=int(stats_total[E.ST_EVENTS]),
        conservation_violations=int(stats_total[E.ST_CONSERVATION]),
        bound_violations=int(stats_total[E.ST_BOUNDS]),
    )
    if snapshots:
        point.j1, point.j1_stderr = float(np.mean(j1s)), _batch_stderr(np.array(j1s))
        point.j2, point.j2_stderr = float(np.mean(j2s)), _batch_stderr(np.array(j2s))
        point.j_diff, point.j_diff_stderr = float(np.mean(diffs)), _batch_stderr(np.array(diffs))
    return point


@dataclass
class FluxEstimate:
    """Flux estimates on a density grid, plus the interpolated FluxFunction."""

    rhos: np.ndarray
    values: np.ndarray
    stderrs: np.ndarray
    method: str
    flagged: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    points: list = field(default_factory=list, repr=False)

    def to_csv(self, path) -> None:
        write_flux_csv(path, self.rhos, self.values, self.stderrs, self.method)

    def flux(self, K: float, margin: bool = True) -> FluxFunction:
        keep = np.array([r not in self.flagged for r in self.rhos])
        r, g, se = self.rhos[keep], self.values[keep], self.stderrs[keep]
        lip_margin = 0.0
        if margin and r.size > 1:
            lip_margin = float(np.max((se[:-1] + se[1:]) / np.diff(r)))
        return FluxFunction.table(r, g, K, lipschitz_margin=lip_margin)


def flux_table(
    family: TransformationFamily,
    grid,
    L: int = 512,
    T: float | None = None,
    seeds=range(8),
    env_seeds=(0,),
    rel_threshold: float = 0.25,
    **kwargs,
) -> FluxEstimate:
    """Estimate G on ``grid`` (endpoints 0 and K pinned to zero) and interpolate linearly.

    Points whose standard error exceeds ``rel_threshold`` times |G| are
    flagged and left out of the interpolation.  For disordered models every
    environment seed gives a quenched estimate; the table holds their mean.
    """
    K = family.K
    grid = np.unique(np.asarray(grid, dtype=float))
    if grid.size == 0 or grid[0] < 0 or grid[-1] > K:
        raise ValueError("grid must lie in [0, K]")
    grid = np.union1d(grid, [0.0, float(K)])
    vals, ses, points, flagged = [], [], [], []
    quenched = {}
    env_seeds = tuple(env_seeds) if family.disorder.kind != "none" else (None,)
    for r in grid:
        if r == 0 or r == K:
            vals.append(0.0)
            ses.append(0.0)
            continue
        per_env = [equilibrium_flux_estimate(family, r, L, T, seeds=seeds, env_seed=e, **kwargs) for e in env_seeds]
        points.extend(per_env)
        v = float(np.mean([p.value for p in per_env]))
        se = float(np.sqrt(np.sum([p.stderr**2 for p in per_env])) / len(per_env))
        quenched[float(r)] = [(e, p.value, p.stderr) for e, p in zip(env_seeds, per_env)]
        vals.append(v)
        ses.append(se)
        if abs(v) > 0 and se > rel_threshold * abs(v):
            flagged.append(float(r))
    method = points[0].method if points else "equilibrium_mc"
    return FluxEstimate(grid, np.array(vals), np.array(ses), method, flagged,
                        {"L": L, "T": points[0].T if points else T, "seeds": len(tuple(seeds)), "quenched": quenched},
                        points)


def write_flux_csv(path, rhos, values, stderrs, method: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rho", "G_hat", "stderr", "method"])
        for r, g, s in zip(rhos, values, stderrs):
            w.writerow([repr(float(r)), repr(float(g)), repr(float(s)), method])


def read_flux_csv(path, K: float = 1.0) -> FluxFunction:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    r = np.array([float(x["rho"]) for x in rows])
    g = np.array([float(x["G_hat"]) for x in rows])
    return FluxFunction.table(r, g, K)
