"""Invariant suite: monotonicity certificates, admissibility sweeps, conservation and coupling order."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .flux_id import equilibrium_flux_estimate, sweeps
from .graphical import coupled_trajectory, generate_events
from .lattice import Boundary, Configuration, PiecewiseConstantProfile
from .models import zoo
from .models.monotone import check_monotone
from .models.spec import ModelSpec, build_family, sample_environment_for
from .scl.cauchy import cauchy_solve
from .scl.flux import FluxFunction, oleinik_check, rh_speed
from .scl.riemann import fan_discontinuities, riemann_solve


@dataclass
class CellResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)


# --- admissibility -------------------------------------------------------------


def random_flux(rng: np.random.Generator, degree: int | None = None) -> FluxFunction:
    """Random cubic or quartic polynomial on [0, 1]."""
    deg = int(rng.choice([3, 4])) if degree is None else degree
    return FluxFunction.polynomial(rng.normal(size=deg + 1))


def random_riemann_instances(n: int, seed: int = 0):
    """(G, lam, rho, v) with G a random cubic/quartic and v within the speed range padded by 0.5."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xA5,)))
    out = []
    for _ in range(n):
        G = random_flux(rng)
        lam, rho = rng.random(2)
        V = G.lipschitz
        v = float(rng.uniform(-V - 0.5, V + 0.5))
        out.append((G, float(lam), float(rho), v))
    return out


def jump_violations(G: FluxFunction, jumps, tol: float = 1e-9) -> list[str]:
    bad = []
    for um, up, s in jumps:
        if um == up:
            continue
        if not oleinik_check(G, um, up, tol):
            bad.append(f"oleinik ({um:.6g}, {up:.6g})")
        rh = rh_speed(G, um, up)
        if abs(rh - s) > tol * max(1.0, abs(rh)):
            bad.append(f"speed ({um:.6g}, {up:.6g}): {s!r} vs {rh!r}")
    return bad


def admissibility_sweep(n: int = 100, seed: int = 0, dx: float = 0.01, T: float = 0.5, tol: float = 1e-9) -> CellResult:
    """Every jump from riemann_solve (against G) and cauchy_solve (against its G_delta) is admissible."""
    checked, bad = 0, []
    for G, lam, rho, _ in random_riemann_instances(n, seed):
        fan = riemann_solve(G, lam, rho)
        jumps = fan_discontinuities(fan)
        checked += len(jumps)
        bad += jump_violations(G, jumps, tol)
        traj = cauchy_solve(G, PiecewiseConstantProfile.riemann(lam, rho), T, dx)
        checked += len(traj.emitted)
        bad += jump_violations(traj.flux, traj.emitted, tol)
    return CellResult("admissibility", not bad, {"instances": n, "jumps_checked": checked, "violations": bad[:20],
                                                 "n_violations": len(bad)})


# --- particle systems -----------------------------------------------------------


def monotonicity_cells(window_size: int = 5, aux_samples: int = 10_000, seed: int = 0) -> list[CellResult]:
    out = []
    for name, spec in zoo.shipped_models().items():
        cert = check_monotone(build_family(spec), window_size, aux_samples, seed)
        out.append(CellResult(f"monotone:{name}", cert.ok and cert.complete,
                              {"summary": cert.summary(), "coverage": cert.coverage}))
    for spec in (zoo.broken_misanthrope(), zoo.broken_kstep_misanthrope()):
        cert = check_monotone(build_family(spec, strict=False), window_size, aux_samples, seed)
        out.append(CellResult(f"counterexample:{spec.name}", not cert.ok, {"summary": cert.summary()}))
    return out


def ordered_pair(family, L: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """eta >= xi on L sites: eta uniform, xi removes a random fraction of eta's particles."""
    K = family.K
    eta = rng.integers(0, K + 1, size=L)
    keep = rng.random()
    xi = np.array([rng.binomial(n, keep) for n in eta])
    return xi, eta


def coupling_order_cell(name: str, spec: ModelSpec, pairs: int = 1000, L: int = 32, T: float = 100.0,
                        seed: int = 0) -> CellResult:
    fam = build_family(spec)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xC0,)))
    violations = moves = events = 0
    bd = Boundary.periodic()
    for k in range(pairs):
        xi, eta = ordered_pair(fam, L, rng)
        confs = [Configuration(0, xi, fam.K, bd), Configuration(0, eta, fam.K, bd)]
        env = sample_environment_for(fam, (0, L - 1), seed + k, periodic=True)
        stream = generate_events((0, L - 1), fam, T, seed * 100_003 + k)
        traj = coupled_trajectory(env, confs, stream, [T], check_order=True)
        violations += traj.stats.order_violations
        moves += traj.stats.moves
        events += traj.stats.events
    return CellResult(f"coupling_order:{name}", violations == 0,
                      {"pairs": pairs, "T": T, "L": L, "order_violations": violations, "moves": moves, "events": events})


def conservation_cell(name: str, spec: ModelSpec, L: int = 64, n_sweeps: float = 50, seed: int = 0) -> CellResult:
    fam = build_family(spec)
    p = equilibrium_flux_estimate(fam, 0.5 * fam.K, L, sweeps(fam, n_sweeps), burn_in=0.0, seeds=(seed,), check=True)
    ok = p.conservation_violations == 0 and p.bound_violations == 0
    return CellResult(f"conservation:{name}", ok, {"events": p.events, "conservation_violations":
                                                     p.conservation_violations, "bound_violations": p.bound_violations})


def run_suite(cell_filter: str | None = None, quick: bool = False, seed: int = 0) -> list[CellResult]:
    """Full invariant suite on the shipped models.  ``quick`` shrinks sample sizes."""
    pat = re.compile(cell_filter) if cell_filter else None

    def want(name: str) -> bool:
        return pat is None or bool(pat.search(name))

    out: list[CellResult] = []
    if any(want(f"monotone:{n}") for n in zoo.shipped_models()) or want("counterexample:"):
        out += [c for c in monotonicity_cells(5, 2_000 if quick else 10_000, seed) if want(c.name)]
    if want("admissibility"):
        out.append(admissibility_sweep(20 if quick else 100, seed))
    for name, spec in zoo.shipped_models().items():
        if want(f"conservation:{name}"):
            out.append(conservation_cell(name, spec, seed=seed, n_sweeps=10 if quick else 50))
        if want(f"coupling_order:{name}"):
            out.append(coupling_order_cell(name, spec, pairs=20 if quick else 200, T=20.0 if quick else 100.0,
                                           seed=seed))
    return out
