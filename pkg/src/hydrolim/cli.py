"""Command line front end.

    hydrolim simulate --config sim.json   [--out DIR] [--seed S]
    hydrolim riemann  --config plan.json  [--out DIR] [--seed S] [--jobs J]
    hydrolim cauchy   --config cauchy.json
    hydrolim flux     --config flux.json
    hydrolim verify   [--config verify.json] [--cell-filter REGEX]

Outputs go to --out, else $HYDROLIM_OUT/<subcommand>, else ./hydrolim-out/<subcommand>.
Exit status: 0 all checks pass, 1 some check fails, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import harness
from .flux_id import analytic_flux, flux_table, sweeps
from .graphical import Observer, generate_events, simulate
from .lattice import Boundary, Configuration
from .models.spec import build_family, sample_environment_for
from .scl.cauchy import cauchy_solve
from .scl.flux import FluxFunction

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def _load_json(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be an object")
    return data


def _require(cfg: dict, keys, where: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")


def _out_dir(args, sub: str) -> Path:
    if args.out:
        root = Path(args.out)
    else:
        root = Path(os.environ.get("HYDROLIM_OUT", "hydrolim-out")) / sub
    root.mkdir(parents=True, exist_ok=True)
    return root


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(harness._jsonable(obj), indent=2, sort_keys=True) + "\n")


def _seeds(cfg_seeds, override):
    seeds = list(cfg_seeds)
    if override is None:
        return tuple(seeds)
    return tuple(int(override) + k for k in range(len(seeds)))


# --- subcommands -----------------------------------------------------------------


def _prepare_simulate(cfg: dict, args):
    _require(cfg, ["model", "T", "window"], "simulate config")
    spec = harness.resolve_model(cfg["model"])
    fam = build_family(spec)
    N = int(cfg.get("N", 1))
    T = float(cfg["T"])
    times = [float(t) for t in cfg.get("times", [T])]
    if times and max(times) > T:
        raise ConfigError("snapshot times beyond T")
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    periodic = bool(cfg.get("periodic", False))
    lo, hi = (int(v) for v in cfg["window"])
    if hi < lo:
        raise ConfigError("window must satisfy lo <= hi")
    if "initial" in cfg:
        u0 = harness.profile_from_dict(cfg["initial"])
        bd = Boundary.periodic() if periodic else None
        eta0 = harness.sample_initial_state(u0, N, seed, fam.K, (lo, hi), bd)
    else:
        occ = np.asarray(cfg.get("occupancies", np.zeros(hi - lo + 1)), dtype=np.int64)
        bd = Boundary.periodic() if periodic else Boundary.tails(*cfg.get("tails", [0.0, 0.0]))
        eta0 = Configuration(lo, occ, fam.K, bd)
    observers = [Observer(float(o.get("speed", 0.0)), int(o.get("origin", 0))) for o in cfg.get("observers", [])]
    return spec, fam, eta0, T, times, seed, periodic, observers


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    try:
        spec, fam, eta0, T, times, seed, periodic, observers = _prepare_simulate(cfg, args)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"simulate config: {exc}") from exc
    out = _out_dir(args, "simulate")
    lo, hi = eta0.window_lo, eta0.window_hi
    band = 0 if periodic else fam.locality_radius
    env = sample_environment_for(fam, (lo, hi), int(cfg.get("env_seed", 0)), periodic=periodic)
    events = generate_events((lo, hi), fam, T, harness.stream_seed(seed, 0, 0x51), band=band)
    traj = simulate(env, eta0, events, times, observers, check=bool(cfg.get("check", False)))
    traj.to_csv(out / "snapshots.csv", out / "currents.csv")
    st = traj.stats
    summary = {"model": spec.name or fam.model_id, "family": fam.model_id, "sites": eta0.size, "T": T, "seed": seed, "events": st.events,
               "moves": st.moves, "initial_particles": eta0.total, "final_particles": traj.configurations[-1].total,
               "boundary": {"in_left": st.in_left, "out_left": st.out_left, "in_right": st.in_right,
                            "out_right": st.out_right},
               "conservation_violations": st.conservation_violations, "bound_violations": st.bound_violations}
    _dump(out / "summary.json", summary)
    print(f"simulate: {st.events} events, {st.moves} moves, {eta0.total} -> {summary['final_particles']} particles")
    ok = st.conservation_violations == 0 and st.bound_violations == 0
    return EXIT_PASS if ok else EXIT_FAIL


def _plan(cfg: dict, args) -> harness.ExperimentPlan:
    _require(cfg, ["model", "initial"], "plan")
    try:
        plan = harness.ExperimentPlan.from_dict(cfg)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"plan: {exc}") from exc
    plan.seeds = _seeds(plan.seeds, args.seed)
    if args.cell_filter:
        pat = re.compile(args.cell_filter)
        plan.scales = tuple(N for N in plan.scales if pat.search(f"N={N}"))
        if not plan.scales:
            raise ConfigError("cell filter removed every scale")
    return plan


def cmd_riemann(args) -> int:
    plan = _plan(_load_json(args.config), args)
    if plan.flux is None:
        raise ConfigError("no flux available for this model; give one in the plan")
    out = _out_dir(args, "riemann")
    rep = harness.riemann_experiment(plan, jobs=args.jobs)
    rep.to_csv(out / "delta.csv")
    result = {"riemann": json.loads(rep.to_json())}
    ok = rep.passed
    if plan.speeds:
        cur = harness.current_lln_experiment(plan, rows=rep.rows)
        result["currents"] = json.loads(cur.to_json())
        ok = ok and cur.passed
    _dump(out / "summary.json", result)
    for N, d in rep.medians("delta", plan.t_max).items():
        print(f"N={N:6d}  median Delta = {d:.5f}")
    print("PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_cauchy(args) -> int:
    cfg = _load_json(args.config)
    out = _out_dir(args, "cauchy")
    if "scales" in cfg:
        plan = _plan(cfg, args)
        rep = harness.cauchy_experiment(plan, jobs=args.jobs)
        rep.to_csv(out / "delta.csv")
        _dump(out / "summary.json", json.loads(rep.to_json()))
        sol = cauchy_solve(plan.flux, plan.u0, plan.t_max, plan.dx, times=plan.times)
        sol.fronts_csv(out / "fronts.csv")
        print("PASS" if rep.passed else "FAIL")
        return EXIT_PASS if rep.passed else EXIT_FAIL
    _require(cfg, ["initial", "T", "dx"], "cauchy config")
    try:
        if "flux" in cfg:
            G = FluxFunction.from_dict(cfg["flux"], cfg.get("K", 1.0))
        else:
            G = analytic_flux(harness.resolve_model(cfg["model"]))
            if G is None:
                raise ConfigError("model has no closed-form flux; give 'flux'")
        u0 = harness.profile_from_dict(cfg["initial"])
        sol = cauchy_solve(G, u0, float(cfg["T"]), float(cfg["dx"]), ratio=cfg.get("ratio"),
                           times=cfg.get("times"), strategy=cfg.get("strategy", "front_tracking"),
                           seed=int(args.seed or 0))
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    sol.fronts_csv(out / "fronts.csv")
    tv = sol.total_variations
    ok = bool(np.all(np.diff(tv) <= 1e-9 * max(1.0, tv[0])))
    _dump(out / "summary.json", {"snapshots": len(sol.times), "interactions": sol.interactions,
                                 "initial_error": sol.initial_error, "tv_initial": float(tv[0]),
                                 "tv_final": float(tv[-1]), "tv_nonincreasing": ok, "dt": sol.dt, "dx": sol.dx})
    print(f"cauchy: {len(sol.times)} snapshots, {sol.interactions} interactions, TV {tv[0]:.6g} -> {tv[-1]:.6g}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_flux(args) -> int:
    cfg = _load_json(args.config)
    _require(cfg, ["model", "grid"], "flux config")
    try:
        spec = harness.resolve_model(cfg["model"])
        fam = build_family(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    grid = np.asarray(cfg["grid"], dtype=float)
    if grid.size == 0 or grid.min() < 0 or grid.max() > fam.K:
        raise ConfigError(f"flux grid must lie in [0, {fam.K}]")
    seeds = _seeds(cfg.get("seeds", range(8)), args.seed)
    T = sweeps(fam, float(cfg.get("sweeps", 2000)))
    est = flux_table(fam, grid, L=int(cfg.get("L", 512)), T=T, seeds=seeds,
                     env_seeds=tuple(cfg.get("env_seeds", (0,))))
    out = _out_dir(args, "flux")
    est.to_csv(out / "flux.csv")
    exact = analytic_flux(spec)
    tol = float(cfg.get("tolerance", 0.01))
    rows, ok = [], True
    for r, g, se in zip(est.rhos, est.values, est.stderrs):
        row = {"rho": float(r), "G_hat": float(g), "stderr": float(se)}
        if exact is not None:
            err = float(g - exact(r))
            row["exact"] = float(exact(r))
            row["within"] = abs(err) <= max(3 * se, tol)
            ok = ok and row["within"]
        rows.append(row)
    _dump(out / "summary.json", {"model": spec.name, "method": est.method, "points": rows, "flagged": est.flagged,
                                 "analytic": exact is not None, "passed": ok})
    for row in rows:
        extra = f"  exact {row['exact']:.5f}" if "exact" in row else ""
        print(f"rho={row['rho']:.3f}  G={row['G_hat']:.5f} +- {row['stderr']:.5f}{extra}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    from .suite import run_suite

    cfg = _load_json(args.config)
    quick = bool(cfg.get("quick", False))
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
    results = run_suite(args.cell_filter, quick=quick, seed=seed)
    if not results:
        raise ConfigError("cell filter selected no checks")
    out = _out_dir(args, "verify")
    _dump(out / "verify.json", {"cells": [{"name": r.name, "passed": r.passed, "details": r.details} for r in results],
                                "passed": all(r.passed for r in results)})
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}")
    return EXIT_PASS if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {"simulate": cmd_simulate, "riemann": cmd_riemann, "cauchy": cmd_cauchy, "flux": cmd_flux,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hydrolim", description="Hydrodynamic limits of attractive lattice gases.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "verify", help="JSON configuration file")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed", type=int, help="base seed overriding the configuration")
        s.add_argument("--jobs", type=int, default=1, help="worker processes")
        s.add_argument("--cell-filter", help="regular expression selecting cells")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except re.error as exc:
        print(f"config error: bad --cell-filter ({exc})", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
