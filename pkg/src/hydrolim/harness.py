"""Hydrodynamic-limit experiments: particle systems against conservation-law solutions.

Every experiment runs on a finite window fenced by finite propagation:
sites cover N * (support radius + v * T_max + margin) on each side, with
v the larger of the flux's speed bound on the data range and the model's
microscopic speed bound.  Distances are measured on the fenced interval
only.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .flux_id import analytic_flux
from .graphical import Observer, coupled_trajectory, generate_events, simulate
from .lattice import Boundary, Configuration, PiecewiseConstantProfile, delta_distance, empirical_measure
from .models import zoo
from .models.families import TransformationFamily
from .models.spec import ModelSpec, build_family, sample_environment_for
from .scl.cauchy import cauchy_solve
from .scl.flux import FluxFunction
from .scl.riemann import delta_to_fan, riemann_current, riemann_solve

# --- plans --------------------------------------------------------------------


def resolve_model(ref) -> ModelSpec:
    """ModelSpec from a spec, a dict, or a zoo name such as ``"tasep"``."""
    if isinstance(ref, ModelSpec):
        return ref
    if isinstance(ref, dict):
        return ModelSpec.from_dict(ref)
    if isinstance(ref, str):
        shipped = zoo.shipped_models()
        if ref in shipped:
            return shipped[ref]
        fn = getattr(zoo, ref, None)
        if callable(fn):
            return fn()
        path = Path(ref)
        if path.exists():
            return ModelSpec.load(path)
    raise ValueError(f"cannot resolve model {ref!r}")


def profile_from_dict(d: dict) -> PiecewiseConstantProfile:
    if "riemann" in d:
        lam, rho = d["riemann"]
        return PiecewiseConstantProfile.riemann(float(lam), float(rho), float(d.get("at", 0.0)))
    if "constant" in d:
        return PiecewiseConstantProfile.constant(float(d["constant"]))
    if "steps" in d:
        s = d["steps"]
        return PiecewiseConstantProfile.from_steps(s["edges"], s["values"], s.get("left", 0.0), s.get("right", 0.0))
    raise ValueError(f"unrecognised initial profile {d!r}")


def profile_to_dict(u: PiecewiseConstantProfile) -> dict:
    return {"steps": {"edges": u.positions.tolist(), "values": u.values[1:-1].tolist(), "left": u.left,
                      "right": u.right}}


@dataclass
class ExperimentPlan:
    model: ModelSpec
    u0: PiecewiseConstantProfile
    scales: tuple = (200, 800, 3200)
    times: tuple = (1.0,)
    seeds: tuple = (0, 1, 2, 3, 4)
    env_seed: int = 0
    margin: float = 1.0
    speeds: tuple = ()
    flux: FluxFunction | None = None
    half_width: float | None = None
    thresholds: dict = field(default_factory=dict)
    dx: float = 0.005
    name: str = "experiment"

    def __post_init__(self):
        self.model = resolve_model(self.model)
        self.scales = tuple(int(n) for n in self.scales)
        self.times = tuple(float(t) for t in self.times)
        self.seeds = tuple(int(s) for s in self.seeds)
        self.speeds = tuple(float(v) for v in self.speeds)
        if self.flux is None:
            self.flux = analytic_flux(self.model)
        if self.margin < 1.0:
            raise ValueError("window margin must be at least one macroscopic unit")
        if min(self.times, default=1.0) <= 0:
            raise ValueError("observation times must be positive")
        if self.half_width is not None and self.half_width < self.required_half_width - 1e-12:
            raise ValueError(
                f"window half-width {self.half_width} violates finite-propagation fencing "
                f"(needs >= {self.required_half_width})"
            )

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        d = dict(d)
        model = resolve_model(d.pop("model"))
        u0 = profile_from_dict(d.pop("initial"))
        flux = d.pop("flux", None)
        if flux is not None:
            flux = FluxFunction.from_dict(flux, model.K)
        for key in ("scales", "times", "seeds", "speeds"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(model=model, u0=u0, flux=flux, **d)

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        out = {
            "model": self.model.to_dict(),
            "initial": profile_to_dict(self.u0),
            "scales": list(self.scales),
            "times": list(self.times),
            "seeds": list(self.seeds),
            "env_seed": self.env_seed,
            "margin": self.margin,
            "speeds": list(self.speeds),
            "thresholds": self.thresholds,
            "dx": self.dx,
            "name": self.name,
        }
        if self.flux is not None:
            out["flux"] = self.flux.to_dict()
        if self.half_width is not None:
            out["half_width"] = self.half_width
        return out

    @property
    def family(self) -> TransformationFamily:
        return build_family(self.model)

    @property
    def t_max(self) -> float:
        return max(self.times)

    @property
    def support_radius(self) -> float:
        lo, hi = self.u0.support
        return max(abs(lo), abs(hi))

    @property
    def speed_bound(self) -> float:
        """max(sup |G'| over the data range, microscopic speed bound)."""
        vals = self.u0.values
        v_data = self.flux.speed_range(float(vals.min()), float(vals.max())) if self.flux is not None else 0.0
        return max(v_data, self.family.max_speed)

    @property
    def required_half_width(self) -> float:
        return self.support_radius + self.speed_bound * self.t_max + self.margin

    def window(self, N: int) -> tuple[int, int]:
        w = int(math.ceil(N * (self.half_width or self.required_half_width)))
        return -w, w - 1

    def fenced(self, t: float) -> tuple[float, float]:
        """Macroscopic interval where boundary effects are absent up to time t."""
        a = self.support_radius + self.speed_bound * t + 0.5 * self.margin
        return -a, a


# --- initial states -------------------------------------------------------------


def _uniforms(seed: int, n: int, K: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0x1D,)))
    return rng.random((n, K))


def sample_initial_state(u0: PiecewiseConstantProfile, N: int, seed: int, K: int = 1, window=None,
                         boundary: Boundary | None = None) -> Configuration:
    """Product state with mean u0(x / N) at site x, coupled across profiles.

    eta(x) = sum_i 1{U_{x,i} < u0(x/N) / K} with common uniforms U, so a
    pointwise larger profile gives a sitewise larger configuration for the
    same seed and window.
    """
    if window is None:
        lo, hi = u0.support
        window = (int(math.floor(N * lo)) - N, int(math.ceil(N * hi)) + N)
    lo, hi = int(window[0]), int(window[1])
    x = np.arange(lo, hi + 1)
    dens = np.asarray(u0(x / N), dtype=float)
    if dens.min() < -1e-12 or dens.max() > K + 1e-12:
        raise ValueError("profile values outside [0, K]")
    U = _uniforms(seed, x.size, K)
    occ = (U < (dens / K)[:, None]).sum(axis=1)
    if boundary is None:
        boundary = Boundary.tails(float(np.clip(u0.left, 0, K)), float(np.clip(u0.right, 0, K)))
    return Configuration(lo, occ, K, boundary)


def stream_seed(seed: int, N: int, tag: int = 0) -> int:
    return int(np.random.SeedSequence((int(seed), int(N), int(tag))).generate_state(1)[0])


# --- reports --------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    name: str
    rows: list
    summary: dict
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def medians(self, key: str = "delta", t: float | None = None) -> dict:
        out: dict = {}
        for r in self.rows:
            if t is not None and abs(r["t"] - t) > 1e-12:
                continue
            out.setdefault(r["N"], []).append(r[key])
        return {N: float(np.median(v)) for N, v in sorted(out.items())}

    def to_csv(self, path) -> None:
        if not self.rows:
            Path(path).write_text("")
            return
        keys = list(self.rows[0].keys())
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for r in self.rows:
                w.writerow([_fmt(r[k]) for k in keys])

    def to_json(self, path=None) -> str:
        text = json.dumps({"name": self.name, "summary": _jsonable(self.summary), "checks": _jsonable(self.checks),
                           "passed": self.passed, "cells": len(self.rows)}, indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def strictly_decreasing(values) -> bool:
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))


def nonincreasing(values) -> bool:
    v = list(values)
    return all(b <= a for a, b in zip(v, v[1:]))


def run_cells(fn, cells, jobs: int = 1) -> list:
    """Map ``fn`` over cells, in order; ``jobs > 1`` uses worker processes."""
    cells = list(cells)
    if jobs <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, cells))


# --- Riemann and Cauchy experiments ---------------------------------------------


def _simulate_cell(plan: ExperimentPlan, N: int, seed: int, observers=()):
    fam = plan.family
    lo, hi = plan.window(N)
    eta0 = sample_initial_state(plan.u0, N, seed, fam.K, (lo, hi))
    env = sample_environment_for(fam, (lo, hi), plan.env_seed)
    r = fam.locality_radius
    events = generate_events((lo, hi), fam, N * plan.t_max, stream_seed(seed, N), band=r)
    traj = simulate(env, eta0, events, [N * t for t in plan.times], observers)
    return traj


def _riemann_cell(args):
    plan, N, seed = args
    fan = riemann_solve(plan.flux, plan.u0.left, plan.u0.right)
    observers = [Observer(v, 0) for v in plan.speeds]
    traj = _simulate_cell(plan, N, seed, observers)
    at = plan.u0.positions[0] if plan.u0.n_fronts else 0.0
    rows = []
    for t, eta, recs in zip(plan.times, traj.configurations, traj.currents):
        pi = empirical_measure(eta, N, tails="boundary")
        a, b = plan.fenced(t)
        shifted = PiecewiseConstantProfile(pi.positions - at, pi.values)
        row = {"N": N, "t": t, "seed": seed, "delta": delta_to_fan(shifted, fan, t, a - at, b - at)}
        for v, rec in zip(plan.speeds, recs):
            row[f"current_{v!r}"] = rec.net / (N * t)
            row[f"target_{v!r}"] = riemann_current(plan.flux, plan.u0.left, plan.u0.right, v)
        row["identity_failures"] = _identity_failures(eta, recs)
        row["boundary_crossings"] = traj.stats.out_left + traj.stats.out_right + traj.stats.in_left + traj.stats.in_right
        rows.append(row)
    return rows


def _identity_failures(eta: Configuration, recs) -> int:
    """Count observer pairs violating phi^v - phi^w = mass between their positions."""
    bad = 0
    for i in range(len(recs)):
        for j in range(len(recs)):
            pv = recs[i].observer.origin + math.floor(recs[i].observer.speed * recs[i].time)
            pw = recs[j].observer.origin + math.floor(recs[j].observer.speed * recs[j].time)
            if pv > pw:
                continue
            mass = int(sum(eta.read(y) for y in range(pv, pw)))
            if recs[i].net - recs[j].net != mass:
                bad += 1
    return bad


def riemann_experiment(plan: ExperimentPlan, jobs: int = 1) -> ConvergenceReport:
    """Delta^N(t) between pi^N(eta_{Nt}) and the entropy Riemann fan, per (N, t, seed)."""
    if plan.flux is None:
        raise ValueError("the plan needs a flux (analytic or estimated)")
    if plan.u0.n_fronts > 1:
        raise ValueError("Riemann experiment needs two-level initial data")
    cells = [(plan, N, s) for N in plan.scales for s in plan.seeds]
    rows = [r for rs in run_cells(_riemann_cell, cells, jobs) for r in rs]
    return _delta_report(plan, rows)


def _delta_report(plan: ExperimentPlan, rows) -> ConvergenceReport:
    rep = ConvergenceReport(plan.name, rows, {})
    t_end = plan.t_max
    med = rep.medians("delta", t_end)
    rep.summary = {
        "median_delta": med,
        "max_delta_over_times": {N: float(np.median([max(r["delta"] for r in rows if r["N"] == N and r["seed"] == s)
                                                      for s in plan.seeds])) for N in plan.scales},
        "boundary_crossings": int(sum(r.get("boundary_crossings", 0) for r in rows)),
    }
    th = plan.thresholds
    if th.get("decreasing", False):
        rep.checks["decreasing_in_N"] = strictly_decreasing(med.values())
    if "terminal" in th:
        rep.checks["terminal_below_threshold"] = med[max(plan.scales)] <= th["terminal"]
    return rep


def current_lln_experiment(plan: ExperimentPlan, speeds=None, jobs: int = 1, rows=None) -> ConvergenceReport:
    """(Nt)^-1 phi^v_{Nt} against the limiting current G_v(lam, rho).

    ``rows`` from a riemann_experiment with the same plan and speeds can be
    passed to avoid rerunning the simulations.
    """
    if speeds is not None:
        plan.speeds = tuple(float(v) for v in speeds)
    if not plan.speeds:
        raise ValueError("no observer speeds given")
    if rows is None:
        cells = [(plan, N, s) for N in plan.scales for s in plan.seeds]
        rows = [r for rs in run_cells(_riemann_cell, cells, jobs) for r in rs]
    rep = ConvergenceReport(plan.name, rows, {})
    t_end = plan.t_max
    summary = {}
    for v in plan.speeds:
        key = f"current_{v!r}"
        per_n = {}
        for N in plan.scales:
            vals = [r[key] for r in rows if r["N"] == N and abs(r["t"] - t_end) < 1e-12]
            target = rows[0][f"target_{v!r}"]
            per_n[N] = {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "bias": float(np.mean(vals) - target),
                        "target": target}
        summary[repr(v)] = per_n
    rep.summary = {"currents": summary, "identity_failures": int(sum(r["identity_failures"] for r in rows))}
    rep.checks["bookkeeping_identity_exact"] = rep.summary["identity_failures"] == 0
    tol = plan.thresholds.get("current_tolerance")
    if tol is not None:
        N = max(plan.scales)
        rep.checks["current_within_tolerance"] = all(abs(summary[repr(v)][N]["bias"]) <= tol for v in plan.speeds)
    return rep


def _cauchy_cell(args):
    plan, N, seed, reference = args
    traj = _simulate_cell(plan, N, seed)
    rows = []
    for t, eta, ref in zip(plan.times, traj.configurations, reference):
        pi = empirical_measure(eta, N, tails="boundary")
        a, b = plan.fenced(t)
        d = delta_distance(pi.restrict(a, b, 0.0), ref.restrict(a, b, 0.0))
        rows.append({"N": N, "t": t, "seed": seed, "delta": d,
                     "boundary_crossings": traj.stats.out_left + traj.stats.out_right + traj.stats.in_left
                     + traj.stats.in_right})
    return rows


def cauchy_experiment(plan: ExperimentPlan, jobs: int = 1) -> ConvergenceReport:
    """sup over observation times of Delta^N(t) against the front-tracking solution."""
    if plan.flux is None:
        raise ValueError("the plan needs a flux (analytic or estimated)")
    sol = cauchy_solve(plan.flux, plan.u0, plan.t_max, plan.dx, times=plan.times)
    reference = [sol.at(t) for t in plan.times]
    cells = [(plan, N, s, reference) for N in plan.scales for s in plan.seeds]
    rows = [r for rs in run_cells(_cauchy_cell, cells, jobs) for r in rs]
    rep = ConvergenceReport(plan.name, rows, {})
    sup = {}
    for N in plan.scales:
        per_seed = [max(r["delta"] for r in rows if r["N"] == N and r["seed"] == s) for s in plan.seeds]
        sup[N] = float(np.median(per_seed))
    rep.summary = {"median_sup_delta": sup, "scheme_initial_error": sol.initial_error,
                   "scheme_interactions": sol.interactions,
                   "boundary_crossings": int(sum(r["boundary_crossings"] for r in rows))}
    th = plan.thresholds
    if th.get("decreasing", False):
        rep.checks["decreasing_in_N"] = strictly_decreasing(sup.values())
    if "terminal" in th:
        rep.checks["terminal_below_threshold"] = sup[max(plan.scales)] <= th["terminal"]
    return rep


# --- particle-level stability checks ----------------------------------------------


def random_finite_configuration(n_particles: int, lo: int, hi: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """n particles placed uniformly at random on lo..hi with at most K per site."""
    slots = np.repeat(np.arange(lo, hi + 1), K)
    if n_particles > slots.size:
        raise ValueError("too many particles for the interval")
    chosen = rng.choice(slots.size, size=n_particles, replace=False)
    return np.bincount(slots[chosen] - lo, minlength=hi - lo + 1)


def _stability_cell(args):
    spec, N, trial, n_particles, gamma, times, margin, identical = args
    fam = build_family(spec)
    rng = np.random.default_rng(np.random.SeedSequence((int(trial), int(N), 0x57)))
    t_max = max(times)
    w = int(math.ceil(N * (fam.max_speed * t_max + margin)))
    lo, hi = -w, N + w - 1
    occ_a = np.zeros(hi - lo + 1, dtype=np.int64)
    occ_a[-lo:-lo + N] = random_finite_configuration(n_particles, 0, N - 1, fam.K, rng)
    if identical:
        occ_b = occ_a.copy()
    else:
        occ_b = np.zeros_like(occ_a)
        occ_b[-lo:-lo + N] = random_finite_configuration(n_particles, 0, N - 1, fam.K, rng)
    bd = Boundary.tails(0.0, 0.0)
    etas = [Configuration(lo, occ_a, fam.K, bd), Configuration(lo, occ_b, fam.K, bd)]
    env = sample_environment_for(fam, (lo, hi), int(trial))
    events = generate_events((lo, hi), fam, N * t_max, stream_seed(trial, N, 0x57), band=fam.locality_radius)
    traj = coupled_trajectory(env, etas, events, [N * t for t in times], check_order=False)
    d0 = delta_distance(empirical_measure(etas[0], N), empirical_measure(etas[1], N))
    worst = max(delta_distance(empirical_measure(a, N), empirical_measure(b, N)) for a, b in traj.configurations)
    lost = traj.stats.out_left + traj.stats.out_right
    return {"N": N, "trial": trial, "delta0": d0, "max_delta": worst, "excess": worst - d0,
            "violated": bool(worst > d0 + gamma), "lost_particles": int(lost)}


def macro_stability_test(model, N_list=(125, 250, 500), gamma: float = 0.05, trials: int = 200,
                         n_particles: int = 100, times=None, margin: float = 1.0, identical: bool = False,
                         jobs: int = 1) -> ConvergenceReport:
    """Frequency of {Delta(t) <= Delta(0) + gamma for all sampled t} failing, per N."""
    spec = resolve_model(model)
    times = tuple(np.round(np.arange(1, 11) * 0.05, 10)) if times is None else tuple(times)
    cells = [(spec, int(N), k, n_particles, gamma, times, margin, identical) for N in N_list for k in range(trials)]
    rows = run_cells(_stability_cell, cells, jobs)
    freq = {int(N): float(np.mean([r["violated"] for r in rows if r["N"] == N])) for N in N_list}
    rep = ConvergenceReport(f"macro_stability_{spec.name}", rows,
                            {"violation_frequency": freq, "gamma": gamma, "trials": trials,
                             "lost_particles": int(sum(r["lost_particles"] for r in rows))})
    rep.summary["fit"] = _fit_exponential(freq, gamma, 2 * n_particles)
    rep.checks["nonincreasing_in_N"] = nonincreasing(freq.values())
    return rep


def _fit_exponential(freq: dict, gamma: float, mass: int) -> dict:
    """Least-squares fit of log f = log(C mass) - c N gamma over the nonzero frequencies."""
    pts = [(N, f) for N, f in freq.items() if f > 0]
    if len(pts) < 2:
        return {"C": None, "c": None, "note": "fewer than two nonzero frequencies"}
    x = np.array([N * gamma for N, _ in pts])
    y = np.log([f for _, f in pts])
    slope, icpt = np.polyfit(x, y, 1)
    return {"C": float(np.exp(icpt) / mass), "c": float(-slope)}


def _propagation_cell(args):
    spec, N, t, trial, v, density = args
    fam = build_family(spec)
    rng = np.random.default_rng(np.random.SeedSequence((int(trial), int(N), 0xFB)))
    x, y = -N, N  # initial states agree on x..y
    pad = int(math.ceil(N * (fam.max_speed * t + 1.0))) + 1
    lo, hi = x - pad, y + pad
    n = hi - lo + 1
    K = fam.K
    occ_a = (rng.random((n, K)) < density / K).sum(axis=1)
    occ_b = occ_a.copy()
    outside = np.r_[0 : x - lo, y - lo + 1 : n]
    occ_b[outside] = (rng.random((outside.size, K)) < density / K).sum(axis=1)
    bd = Boundary.tails(density, density)
    etas = [Configuration(lo, occ_a, K, bd), Configuration(lo, occ_b, K, bd)]
    env = sample_environment_for(fam, (lo, hi), int(trial))
    events = generate_events((lo, hi), fam, N * t, stream_seed(trial, N, 0xFB), band=fam.locality_radius)
    a, b = coupled_trajectory(env, etas, events, [N * t], check_order=False).configurations[-1]
    inner_lo, inner_hi = int(math.ceil(x + v * N * t)), int(math.floor(y - v * N * t))
    if inner_lo > inner_hi:
        return {"trial": trial, "differs": False, "sites": 0, "events": len(events)}
    sl = slice(inner_lo - lo, inner_hi - lo + 1)
    return {"trial": trial, "differs": bool(np.any(a.occupancies[sl] != b.occupancies[sl])),
            "sites": inner_hi - inner_lo + 1, "events": len(events)}


def finite_propagation_test(model, N: int = 100, t: float = 0.25, trials: int = 1000, v: float | None = None,
                            density: float = 0.5, jobs: int = 1) -> ConvergenceReport:
    """How often coupled states agreeing on [-N, N] differ inside [-N + vNt, N - vNt] at time Nt."""
    spec = resolve_model(model)
    fam = build_family(spec)
    v = fam.max_speed if v is None else float(v)
    if t >= 1.0 / v:
        raise ValueError("need t < (y - x) / (2 v N) so the inner interval is nonempty")
    cells = [(spec, N, t, k, v, density) for k in range(trials)]
    rows = run_cells(_propagation_cell, cells, jobs)
    freq = float(np.mean([r["differs"] for r in rows]))
    truncated = float(getattr(getattr(fam, "kernel", None), "truncated_mass", 0.0) or 0.0)
    mean_events = float(np.mean([r["events"] for r in rows]))
    rep = ConvergenceReport(f"finite_propagation_{spec.name}", rows,
                            {"violation_frequency": freq, "v": v, "trials": trials,
                             "truncation_bound": min(1.0, truncated * mean_events)})
    return rep


def report_rows_as_dicts(rows) -> list[dict]:
    return [asdict(r) if hasattr(r, "__dataclass_fields__") else dict(r) for r in rows]
