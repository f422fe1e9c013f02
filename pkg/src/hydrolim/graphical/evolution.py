"""Deterministic evolution along an event stream, coupling and currents."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..lattice import Configuration, leq
from ..models._steps import MODE_PERIODIC, MODE_TAILS
from . import _engine as E
from .stream import EventStream


@dataclass(frozen=True)
class Observer:
    """Observer path x_t = origin + floor(speed * t), placed on the bond left of x_t."""

    speed: float = 0.0
    origin: int = 0

    @property
    def descriptor(self) -> str:
        if self.speed == 0.0:
            return f"fixed@{self.origin}"
        return f"speed={self.speed!r}@{self.origin}"


@dataclass(frozen=True)
class CurrentRecord:
    observer: Observer
    time: float
    plus: int
    minus: int
    tilde: int

    @property
    def net(self) -> int:
        return self.plus - self.minus + self.tilde


@dataclass
class RunStats:
    events: int = 0
    moves: int = 0
    in_left: int = 0
    out_left: int = 0
    in_right: int = 0
    out_right: int = 0
    bound_violations: int = 0
    conservation_violations: int = 0
    displacement: int = 0
    order_violations: int = 0
    observer_outside: int = 0

    @classmethod
    def from_array(cls, a) -> "RunStats":
        return cls(*(int(v) for v in a[: E.N_STATS]))


@dataclass
class Trajectory:
    times: list[float]
    configurations: list[Configuration]
    currents: list[list[CurrentRecord]] = field(default_factory=list)
    stats: RunStats = field(default_factory=RunStats)

    def to_csv(self, snapshots_path=None, currents_path=None) -> None:
        if snapshots_path is not None:
            write_snapshots_csv(snapshots_path, self.times, self.configurations)
        if currents_path is not None:
            write_currents_csv(currents_path, self.times, self.currents)


def _mode(eta: Configuration) -> int:
    return MODE_PERIODIC if eta.boundary.is_periodic else MODE_TAILS


def _check_stream(eta: Configuration, events: EventStream) -> None:
    r = events.family.locality_radius
    if eta.cap != events.family.K:
        raise ValueError(f"configuration cap {eta.cap} differs from model K={events.family.K}")
    if eta.boundary.is_periodic:
        if (events.lo, events.hi) != (eta.window_lo, eta.window_hi):
            raise ValueError("on a torus the event window must equal the configuration window")
    elif events.lo < eta.window_lo - r or events.hi > eta.window_hi + r:
        raise ValueError("event sites reach beyond the reservoir band of the window")


class _Runner:
    """Mutable state of a single trajectory (used inside one call only)."""

    def __init__(self, env, eta0: Configuration, events: EventStream, observers=(), check=False):
        _check_stream(eta0, events)
        self.eta0 = eta0
        self.events = events
        fam = events.family
        self.step = fam.step
        self.params = fam.kernel_params(env, eta0.window_lo, eta0.size, eta0.boundary.is_periodic)
        self.occ = np.array(eta0.occupancies, dtype=np.int64)
        self.mode = _mode(eta0)
        self.lam = (float(eta0.boundary.left), float(eta0.boundary.right))
        self.observers = list(observers)
        self.obs_speed = np.array([o.speed for o in self.observers], dtype=float)
        self.obs_origin = np.array([o.origin - eta0.window_lo for o in self.observers], dtype=np.int64)
        self.obs_pos = self.obs_origin.copy()
        self.obs_counts = np.zeros((len(self.observers), 3), dtype=np.int64)
        self.stats = np.zeros(E.N_STATS, dtype=np.int64)
        self.check = bool(check)
        self.t = 0.0

    def advance(self, t: float) -> None:
        lo = self.eta0.window_lo
        for b in self.events.batches(self.t, t):
            E.run_events(self.step, self.params, self.occ, b.times, b.sites, b.aux, b.keys, 0, t, lo, self.mode,
                         self.eta0.cap, self.lam[0], self.lam[1], self.obs_speed, self.obs_origin, self.obs_pos,
                         self.obs_counts, 0.0, self.stats, self.check)
        if self.observers:
            E._move_observers(self.occ, self.obs_speed, self.obs_origin, self.obs_pos, self.obs_counts, t,
                              self.mode, self.eta0.cap, self.lam[0], self.lam[1], self.stats)
        self.t = t

    def configuration(self) -> Configuration:
        return self.eta0.with_occupancies(self.occ.copy())

    def currents(self) -> list[CurrentRecord]:
        return [CurrentRecord(o, self.t, int(c[0]), int(c[1]), int(c[2])) for o, c in zip(self.observers, self.obs_counts)]


def simulate(env, eta0: Configuration, events: EventStream, times, observers=(), check: bool = False) -> Trajectory:
    """Run the graphical construction and record snapshots at ``times``."""
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("snapshot times must be nondecreasing")
    if times and times[-1] > events.horizon + 1e-12:
        raise ValueError("snapshot time beyond the stream horizon")
    run = _Runner(env, eta0, events, observers, check)
    configs, currents = [], []
    for t in times:
        run.advance(t)
        configs.append(run.configuration())
        currents.append(run.currents())
    return Trajectory(times, configs, currents, RunStats.from_array(run.stats))


def evolve(env, eta0: Configuration, events: EventStream, t: float, check: bool = False) -> Configuration:
    """eta_t: apply every event with time <= t in order."""
    return simulate(env, eta0, events, [t], check=check).configurations[-1]


def current(env, eta0: Configuration, events: EventStream, observer: Observer, t: float) -> CurrentRecord:
    return simulate(env, eta0, events, [t], [observer]).currents[-1][0]


@dataclass
class CoupledTrajectory:
    times: list[float]
    configurations: list[list[Configuration]]
    stats: RunStats
    ordered_pairs: list[tuple[int, int]]


def coupled_trajectory(env, etas, events: EventStream, times, check_order: bool = True) -> CoupledTrajectory:
    """Run every initial state on the same stream, recording snapshots.

    With ``check_order`` each event is followed by a comparison of all
    initially ordered pairs at the sites it touched.
    """
    etas = list(etas)
    if not etas:
        raise ValueError("need at least one configuration")
    base = etas[0]
    for other in etas[1:]:
        if other.window_lo != base.window_lo or other.size != base.size or other.boundary != base.boundary:
            raise ValueError("coupled configurations need a common window and boundary")
    _check_stream(base, events)
    fam = events.family
    params = fam.kernel_params(env, base.window_lo, base.size, base.boundary.is_periodic)
    occ2 = np.stack([e.occupancies for e in etas]).astype(np.int64)
    pairs = [(a, b) for a in range(len(etas)) for b in range(len(etas)) if a != b and leq(etas[a], etas[b])]
    pa = np.array([p[0] for p in pairs], dtype=np.int64)
    pb = np.array([p[1] for p in pairs], dtype=np.int64)
    stats = np.zeros(E.N_STATS, dtype=np.int64)
    mode = _mode(base)
    lam_l, lam_r = float(base.boundary.left), float(base.boundary.right)
    out, t_prev = [], 0.0
    for t in times:
        for b in events.batches(t_prev, t):
            E.run_events_coupled(fam.step, params, occ2, b.times, b.sites, b.aux, b.keys, 0, t, base.window_lo,
                                 mode, base.cap, lam_l, lam_r, pa, pb, stats, check_order)
        out.append([base.with_occupancies(row.copy()) for row in occ2])
        t_prev = t
    return CoupledTrajectory([float(t) for t in times], out, RunStats.from_array(stats), pairs)


def couple(env, etas, events: EventStream, t: float, check_order: bool = False) -> list[Configuration]:
    """Evolve several initial states on one shared stream up to time t."""
    traj = coupled_trajectory(env, etas, events, [t], check_order=check_order)
    if check_order and traj.stats.order_violations:
        raise AssertionError(f"{traj.stats.order_violations} order violations under the coupling")
    return traj.configurations[-1]


def write_snapshots_csv(path, times, configs) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "site", "occupancy"])
        for t, eta in zip(times, configs):
            for x, n in zip(eta.sites, eta.occupancies):
                w.writerow([repr(float(t)), int(x), int(n)])


def write_currents_csv(path, times, currents) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "observer", "net", "plus", "minus"])
        for t, recs in zip(times, currents):
            for r in recs:
                w.writerow([repr(float(t)), r.observer.descriptor, r.net, r.plus, r.minus])
