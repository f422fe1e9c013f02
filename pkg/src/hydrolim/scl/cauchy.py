"""Cauchy problems for piecewise-constant data.

The default strategy evolves the data exactly under the piecewise-linear
interpolant G_delta of the flux on a density grid R_delta (front tracking):
every Riemann problem between grid-valued states is solved by a hull of
finitely many points, so the solution stays R_delta-valued and
piecewise constant, and interactions are resolved one at a time in time
order.  The only approximation is snapping the initial data to R_delta.
Snapshots are taken every dt = R dx with the CFL ratio R <= 1/(2V) enforced.

``strategy="glimm"`` runs the random-choice scheme on a staggered dx grid
with the true flux instead.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from ..lattice import PiecewiseConstantProfile, delta_distance, total_variation
from .envelope import lower_hull_indices
from .flux import FluxFunction, variational_extremum


@dataclass
class CauchyTrajectory:
    times: np.ndarray
    profiles: list[PiecewiseConstantProfile]
    flux: FluxFunction
    dx: float
    dt: float
    strategy: str
    initial_error: float
    interactions: int = 0
    step_errors: list[float] = field(default_factory=list)
    emitted: list[tuple[float, float, float]] = field(default_factory=list)

    def at(self, t: float) -> PiecewiseConstantProfile:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return self.profiles[k]

    @property
    def total_variations(self) -> np.ndarray:
        return np.array([total_variation(p) for p in self.profiles])

    def fronts_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "position", "left_value", "right_value"])
            for t, p in zip(self.times, self.profiles):
                for k, x in enumerate(p.positions):
                    w.writerow([repr(float(t)), repr(float(x)), repr(float(p.values[k])), repr(float(p.values[k + 1]))])


def density_levels(G: FluxFunction, step: float) -> np.ndarray:
    n = max(int(round(G.K / step)), 1)
    levels = np.linspace(0.0, G.K, n + 1)
    if G.kind == "table":
        levels = np.union1d(levels, G.rhos)
    if G.density_set is not None:
        levels = np.union1d(levels, G.density_set)
    return levels


def snap(values, levels: np.ndarray) -> np.ndarray:
    """Nearest level (ties to the lower one)."""
    values = np.asarray(values, dtype=float)
    k = np.clip(np.searchsorted(levels, values), 1, levels.size - 1)
    lo, hi = levels[k - 1], levels[k]
    return np.where(values - lo <= hi - values, k - 1, k)


class _Tracker:
    """Front tracking for a flux given by values on a sorted level set."""

    def __init__(self, levels: np.ndarray, g: np.ndarray):
        self.levels = levels
        self.g = g
        self._fans: dict[tuple[int, int], list[tuple[float, int, int]]] = {}

    def fan(self, i: int, j: int) -> list[tuple[float, int, int]]:
        """(speed, left state, right state) of the fronts solving (i, j), by increasing speed."""
        key = (i, j)
        hit = self._fans.get(key)
        if hit is not None:
            return hit
        lv, g = self.levels, self.g
        if i == j:
            out = []
        elif i < j:
            idx = np.arange(i, j + 1)
            v = idx[lower_hull_indices(lv[idx], g[idx])]
            out = [(self.speed(a, b), int(a), int(b)) for a, b in zip(v[:-1], v[1:])]
        else:
            idx = np.arange(j, i + 1)
            v = idx[lower_hull_indices(lv[idx], -g[idx])][::-1]
            out = [(self.speed(a, b), int(a), int(b)) for a, b in zip(v[:-1], v[1:])]
        self._fans[key] = out
        return out

    def speed(self, a: int, b: int) -> float:
        lo, hi = (a, b) if a < b else (b, a)
        return float((self.g[hi] - self.g[lo]) / (self.levels[hi] - self.levels[lo]))


class _FrontList:
    def __init__(self, tracker: _Tracker, left_state: int):
        self.tr = tracker
        self.left_state = left_state
        self.x0: list[float] = []
        self.t0: list[float] = []
        self.s: list[float] = []
        self.l: list[int] = []
        self.r: list[int] = []
        self.prev: list[int] = []
        self.next: list[int] = []
        self.alive: list[bool] = []
        self.head = -1
        self.tail = -1
        self.heap: list = []
        self.interactions = 0

    def new(self, x, t, s, l, r) -> int:
        k = len(self.x0)
        self.x0.append(x)
        self.t0.append(t)
        self.s.append(s)
        self.l.append(l)
        self.r.append(r)
        self.prev.append(-1)
        self.next.append(-1)
        self.alive.append(True)
        return k

    def pos(self, k: int, t: float) -> float:
        return self.x0[k] + self.s[k] * (t - self.t0[k])

    def link(self, a: int, b: int) -> None:
        if a >= 0:
            self.next[a] = b
        else:
            self.head = b
        if b >= 0:
            self.prev[b] = a
        else:
            self.tail = a

    def schedule(self, a: int, now: float) -> None:
        b = self.next[a] if a >= 0 else -1
        if a < 0 or b < 0 or self.s[a] <= self.s[b]:
            return
        num = (self.x0[b] - self.s[b] * self.t0[b]) - (self.x0[a] - self.s[a] * self.t0[a])
        t_hit = max(num / (self.s[a] - self.s[b]), now)
        heapq.heappush(self.heap, (t_hit, a, b))

    def emit(self, x: float, t: float, i: int, j: int) -> list[int]:
        return [self.new(x, t, s, a, b) for s, a, b in self.tr.fan(i, j)]

    def splice(self, before: int, after: int, ids: list[int]) -> None:
        prev = before
        for k in ids:
            self.link(prev, k)
            prev = k
        self.link(prev, after)

    def advance(self, t_end: float, max_interactions: int) -> None:
        while self.heap and self.heap[0][0] <= t_end:
            t_hit, a, b = heapq.heappop(self.heap)
            if not (self.alive[a] and self.alive[b] and self.next[a] == b):
                continue
            x = self.pos(a, t_hit)
            self.alive[a] = self.alive[b] = False
            before, after = self.prev[a], self.next[b]
            ids = self.emit(x, t_hit, self.l[a], self.r[b])
            self.splice(before, after, ids)
            self.interactions += 1
            if self.interactions > max_interactions:
                raise RuntimeError("front tracking exceeded the interaction budget")
            self.schedule(before, t_hit)
            for k in ids:
                self.schedule(k, t_hit)

    def profile(self, t: float) -> PiecewiseConstantProfile:
        lv = self.tr.levels
        pos, vals = [], [lv[self.left_state]]
        k = self.head
        while k >= 0:
            x = self.pos(k, t)
            if pos and x <= pos[-1]:
                # fronts meeting at this instant: keep the outer states
                vals[-1] = lv[self.r[k]]
            else:
                pos.append(x)
                vals.append(lv[self.r[k]])
            k = self.next[k]
        return PiecewiseConstantProfile(np.array(pos), np.array(vals)).simplify()


def _snapshot_times(T: float, dt: float, times) -> np.ndarray:
    if times is None:
        n = int(np.floor(T / dt + 1e-9))
        out = dt * np.arange(n + 1)
        if T - out[-1] > 1e-12:
            out = np.append(out, T)
        return out
    out = np.unique(np.asarray(times, dtype=float))
    if out.size and (out[0] < 0 or out[-1] > T + 1e-12):
        raise ValueError("snapshot times must lie in [0, T]")
    return out


def check_cfl(G: FluxFunction, ratio: float) -> None:
    V = G.lipschitz
    if ratio <= 0 or ratio * V > 0.5 + 1e-12:
        raise ValueError(f"CFL violated: dt/dx = {ratio} exceeds 1/(2V) = {0.5 / V if V else float('inf')}")


def cauchy_solve(
    G: FluxFunction,
    u0: PiecewiseConstantProfile,
    T: float,
    dx: float,
    ratio: float | None = None,
    times=None,
    strategy: str = "front_tracking",
    density_step: float | None = None,
    seed: int = 0,
    max_interactions: int = 10_000_000,
) -> CauchyTrajectory:
    """Entropy solution of u_t + G(u)_x = 0 from step data u0 on [0, T].

    ``ratio`` is dt/dx (default 1/(2V)); it must satisfy the CFL bound.
    ``density_step`` sets the spacing of R_delta (default dx).
    """
    if T < 0 or dx <= 0:
        raise ValueError("need T >= 0 and dx > 0")
    V = G.lipschitz
    ratio = (0.5 / V if V > 0 else 1.0) if ratio is None else float(ratio)
    check_cfl(G, ratio)
    dt = ratio * dx
    snaps = _snapshot_times(T, dt, times)
    if strategy == "front_tracking":
        return _front_tracking(G, u0, T, dx, dt, snaps, density_step or dx, max_interactions)
    if strategy == "glimm":
        return _glimm(G, u0, T, dx, dt, snaps, seed)
    raise ValueError(f"unknown strategy {strategy!r}")


def _front_tracking(G, u0, T, dx, dt, snaps, step, max_interactions) -> CauchyTrajectory:
    levels = density_levels(G, step)
    tr = _Tracker(levels, np.asarray(G(levels), dtype=float))
    idx = snap(u0.values, levels)
    snapped = PiecewiseConstantProfile(u0.positions, levels[idx]).simplify()
    init_err = _windowed_delta(u0, snapped)
    fl = _FrontList(tr, int(idx[0]))
    prev = -1
    for x, i, j in zip(snapped.positions, snap(snapped.values[:-1], levels), snap(snapped.values[1:], levels)):
        ids = fl.emit(float(x), 0.0, int(i), int(j))
        if ids:
            fl.splice(prev, -1, ids)
            prev = ids[-1]
    k = fl.head
    while k >= 0:
        fl.schedule(k, 0.0)
        k = fl.next[k]
    profiles = []
    for t in snaps:
        fl.advance(float(t), max_interactions)
        profiles.append(fl.profile(float(t)))
    emitted = sorted({(float(levels[a]), float(levels[b]), s) for fan in tr._fans.values() for s, a, b in fan})
    return CauchyTrajectory(snaps, profiles, G.interpolant(levels), dx, dt, "front_tracking", init_err,
                            fl.interactions, [0.0] * max(len(snaps) - 1, 0), emitted)


def _windowed_delta(u: PiecewiseConstantProfile, v: PiecewiseConstantProfile) -> float:
    pts = np.concatenate([u.positions, v.positions])
    if pts.size == 0:
        return 0.0 if u.left == v.left else float("inf")
    a, b = float(pts.min()) - 1.0, float(pts.max()) + 1.0
    return delta_distance(u.restrict(a, b, 0.0), v.restrict(a, b, 0.0))


def _glimm(G, u0, T, dx, dt, snaps, seed) -> CauchyTrajectory:
    """Random choice on a staggered grid: one sample point per step shared by all cells."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x61,)))
    V = G.lipschitz
    lo, hi = u0.support
    pad = V * T + 2 * dx
    x0 = np.floor((lo - pad) / dx) * dx
    m = int(np.ceil((hi + pad - x0) / dx))
    centers = x0 + (np.arange(m) + 0.5) * dx
    u = np.asarray(u0(centers), dtype=float)
    left, right = u0.left, u0.right
    t, k = 0.0, 0
    profiles = []
    si = 0
    while si < len(snaps) and snaps[si] <= 1e-15:
        profiles.append(_cells(x0, dx, u, left, right))
        si += 1
    while si < len(snaps):
        # shift the grid by half a cell: new cells are centred on the old interfaces
        a = rng.uniform(-1.0, 1.0)
        ul = np.concatenate([[left], u])
        ur = np.concatenate([u, [right]])
        v = a * dx / (2 * dt)
        u = variational_extremum(G, ul, ur, np.full(ul.shape, v))[1]
        x0 -= dx / 2
        t += dt
        k += 1
        while si < len(snaps) and snaps[si] <= t + 1e-12:
            profiles.append(_cells(x0, dx, u, left, right))
            si += 1
        # the staggered grid alternates; drop the outermost cell every other step to keep the width fixed
        if k % 2 == 0:
            u = u[1:-1]
            x0 += dx
    return CauchyTrajectory(snaps, profiles, G, dx, dt, "glimm", 0.0)


def _cells(x0, dx, u, left, right) -> PiecewiseConstantProfile:
    edges = x0 + dx * np.arange(u.size + 1)
    return PiecewiseConstantProfile.from_steps(edges, u, left, right).simplify()


@dataclass(frozen=True)
class Approximation:
    profile: PiecewiseConstantProfile
    delta: float
    eps: float

    @property
    def ratio(self) -> float:
        """delta(eps) = Delta(u0, output) / eps."""
        return self.delta / self.eps


def approximate_profile(
    u0: PiecewiseConstantProfile,
    eps: float,
    density_set=None,
    strategy: str = "delta",
    seed: int = 0,
) -> Approximation:
    """R-valued step function with steps >= eps close to u0 in Delta.

    ``strategy="delta"`` averages u0 over eps-cells and quantizes the averages
    to R with error diffusion, which keeps the running mass error below one
    level gap times eps.  ``strategy="glimm"`` samples u0 at one random point
    per cell instead.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    levels = None if density_set is None else np.unique(np.asarray(density_set, dtype=float))

    def q(x):
        return x if levels is None else levels[snap(x, levels)]

    steps = np.diff(u0.positions)
    in_levels = levels is None or np.all(np.isin(u0.values, levels))
    if in_levels and (steps.size == 0 or steps.min() >= eps):
        return Approximation(u0, 0.0, eps)
    lo, hi = u0.support
    m = max(int(np.ceil((hi - lo) / eps - 1e-12)), 1)
    edges = lo + eps * np.arange(m + 1)
    if strategy == "delta":
        mass = np.diff(u0.primitive(edges))
        out = np.empty(m)
        carry = 0.0
        for k in range(m):
            target = (mass[k] + carry) / eps
            out[k] = q(target) if levels is not None else target
            carry += mass[k] - out[k] * eps
    elif strategy == "glimm":
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x62,)))
        out = q(u0(edges[:-1] + eps * rng.uniform(size=m)))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    prof = PiecewiseConstantProfile.from_steps(edges, out, float(q(u0.left)), float(q(u0.right))).simplify()
    a, b = float(edges[0]), float(edges[-1])
    delta = delta_distance(u0.restrict(a, b, 0.0), prof.restrict(a, b, 0.0))
    return Approximation(prof, delta, eps)
