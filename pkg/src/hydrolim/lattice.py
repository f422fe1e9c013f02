"""Finite-window configurations, step-function profiles and the metrics on them."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._hash import ghost_occupancy

PERIODIC = "periodic"
TAILS = "tails"


@dataclass(frozen=True)
class Boundary:
    """Boundary policy of a finite window.

    ``periodic`` wraps the window onto a torus.  ``tails`` surrounds it with
    reservoir sites whose occupancies are binomial at the given densities.
    """

    kind: str = TAILS
    left: float = 0.0
    right: float = 0.0

    def __post_init__(self):
        if self.kind not in (PERIODIC, TAILS):
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    @classmethod
    def periodic(cls) -> "Boundary":
        return cls(PERIODIC, 0.0, 0.0)

    @classmethod
    def tails(cls, left: float = 0.0, right: float = 0.0) -> "Boundary":
        return cls(TAILS, float(left), float(right))

    @property
    def is_periodic(self) -> bool:
        return self.kind == PERIODIC


@dataclass(frozen=True, eq=False)
class Configuration:
    """Occupancies on the sites ``window_lo .. window_hi`` (inclusive)."""

    window_lo: int
    occupancies: np.ndarray
    cap: int = 1
    boundary: Boundary = field(default_factory=Boundary)

    def __post_init__(self):
        occ = np.array(self.occupancies, dtype=np.int64, copy=True).reshape(-1)
        if occ.size == 0:
            raise ValueError("empty window")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")
        if occ.min() < 0 or occ.max() > self.cap:
            raise ValueError("occupancies outside [0, cap]")
        b = self.boundary
        if not b.is_periodic:
            for lam in (b.left, b.right):
                if not 0.0 <= lam <= self.cap:
                    raise ValueError("tail density outside [0, cap]")
        occ.flags.writeable = False
        object.__setattr__(self, "occupancies", occ)
        object.__setattr__(self, "window_lo", int(self.window_lo))

    @classmethod
    def from_window(cls, lo: int, hi: int, fill: int = 0, cap: int = 1, boundary: Boundary | None = None):
        return cls(lo, np.full(hi - lo + 1, fill), cap, boundary or Boundary())

    @property
    def window_hi(self) -> int:
        return self.window_lo + self.size - 1

    @property
    def size(self) -> int:
        return int(self.occupancies.shape[0])

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.window_lo, self.window_hi + 1)

    @property
    def total(self) -> int:
        return int(self.occupancies.sum())

    def __len__(self):
        return self.size

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.window_lo == other.window_lo
            and self.cap == other.cap
            and self.boundary == other.boundary
            and np.array_equal(self.occupancies, other.occupancies)
        )

    def __hash__(self):
        return hash((self.window_lo, self.cap, self.boundary, self.occupancies.tobytes()))

    def index(self, x: int) -> int | None:
        """Array index of site x, wrapping on the torus; None if outside."""
        i = x - self.window_lo
        if self.boundary.is_periodic:
            return i % self.size
        return i if 0 <= i < self.size else None

    def read(self, x: int, key: int = 0, origin: int = 0) -> int:
        """Occupancy at site x, drawing reservoir values for outside sites.

        Reservoir draws depend on ``key`` and on ``x - origin`` only.
        """
        i = self.index(x)
        if i is not None:
            return int(self.occupancies[i])
        lam = self.boundary.left if x < self.window_lo else self.boundary.right
        return int(ghost_occupancy(np.uint64(key), x - origin, self.cap, lam))

    def __getitem__(self, x: int) -> int:
        i = self.index(x)
        if i is None:
            raise IndexError(f"site {x} outside window [{self.window_lo}, {self.window_hi}]")
        return int(self.occupancies[i])

    def with_occupancies(self, occ) -> "Configuration":
        return Configuration(self.window_lo, occ, self.cap, self.boundary)

    def shift(self, x: int) -> "Configuration":
        """Return tau_x eta, i.e. (tau_x eta)(y) = eta(x + y)."""
        return Configuration(self.window_lo - x, self.occupancies, self.cap, self.boundary)

    def to_csv(self, path) -> None:
        write_configuration_csv(path, self)


def leq(eta: Configuration, xi: Configuration) -> bool:
    """Coordinatewise order eta <= xi."""
    _check_compatible(eta, xi)
    return bool(np.all(eta.occupancies <= xi.occupancies))


def _check_compatible(eta: Configuration, xi: Configuration) -> None:
    if eta.window_lo != xi.window_lo or eta.size != xi.size:
        raise ValueError("configurations live on different windows")
    if eta.cap != xi.cap or eta.boundary != xi.boundary:
        raise ValueError("configurations have different cap or boundary")


@dataclass(frozen=True, eq=False)
class PiecewiseConstantProfile:
    """Right-continuous step function given by its front list.

    ``values[0]`` is the value left of ``positions[0]``, ``values[i]`` holds on
    ``[positions[i-1], positions[i])`` and ``values[-1]`` is the right tail.
    """

    positions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, copy=True).reshape(-1)
        val = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if val.size != pos.size + 1:
            raise ValueError("need exactly one more value than fronts")
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise ValueError("front positions must be strictly increasing")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(val))):
            raise ValueError("non-finite profile data")
        pos.flags.writeable = False
        val.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", val)

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstantProfile":
        return cls(np.empty(0), np.array([value]))

    @classmethod
    def riemann(cls, left: float, right: float, at: float = 0.0) -> "PiecewiseConstantProfile":
        return cls(np.array([at]), np.array([left, right]))

    @classmethod
    def from_steps(cls, edges, inner, left: float = 0.0, right: float = 0.0) -> "PiecewiseConstantProfile":
        """Profile equal to inner[i] on [edges[i], edges[i+1]) and to the tails outside."""
        edges = np.asarray(edges, dtype=float)
        inner = np.asarray(inner, dtype=float)
        if edges.size != inner.size + 1:
            raise ValueError("need len(edges) == len(inner) + 1")
        return cls(edges, np.concatenate([[left], inner, [right]]))

    @property
    def left(self) -> float:
        return float(self.values[0])

    @property
    def right(self) -> float:
        return float(self.values[-1])

    @property
    def n_fronts(self) -> int:
        return int(self.positions.size)

    @property
    def support(self) -> tuple[float, float]:
        """Interval outside which the profile equals its tails."""
        if self.positions.size == 0:
            return (0.0, 0.0)
        return (float(self.positions[0]), float(self.positions[-1]))

    @property
    def fronts(self) -> list[tuple[float, float]]:
        """(position, value just left of the position) pairs."""
        return [(float(p), float(v)) for p, v in zip(self.positions, self.values[:-1])]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.values[np.searchsorted(self.positions, x, side="right")]

    def simplify(self) -> "PiecewiseConstantProfile":
        """Drop fronts across which the value does not change."""
        keep = self.values[1:] != self.values[:-1]
        vals = np.concatenate([[self.values[0]], self.values[1:][keep]])
        return PiecewiseConstantProfile(self.positions[keep], vals)

    def primitive(self, x):
        """Integral of (u - left tail) from -inf to x."""
        x = np.asarray(x, dtype=float)
        if self.positions.size == 0:
            return np.zeros_like(x)
        excess = self.values[1:-1] - self.left
        seg = excess * np.diff(self.positions)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        k = np.searchsorted(self.positions, x, side="right")
        base = cum[np.clip(k - 1, 0, cum.size - 1)]
        start = self.positions[np.clip(k - 1, 0, self.positions.size - 1)]
        height = self.values[k] - self.left
        return np.where(k == 0, 0.0, base + height * (x - start))

    def integral(self, a: float, b: float) -> float:
        """Integral of u over [a, b]."""
        if b < a:
            return -self.integral(b, a)
        pa, pb = self.primitive(np.array([a, b]))
        return float(pb - pa + self.left * (b - a))

    def mass(self) -> float:
        """Integral of u when both tails vanish."""
        if self.left != 0.0 or self.right != 0.0:
            raise ValueError("mass is infinite for nonzero tails")
        return float(self.primitive(np.array([self.support[1]]))[0]) if self.n_fronts else 0.0

    def restrict(self, a: float, b: float, outside: float | tuple[float, float] | None = None) -> "PiecewiseConstantProfile":
        """Keep the profile on [a, b) and replace it by constants outside.

        ``outside`` defaults to the values of u just inside each end.
        """
        if not a < b:
            raise ValueError("need a < b")
        if outside is None:
            lo_val, hi_val = float(self(a)), float(self(np.nextafter(b, -np.inf)))
        elif isinstance(outside, tuple):
            lo_val, hi_val = outside
        else:
            lo_val = hi_val = float(outside)
        inner = (self.positions > a) & (self.positions < b)
        pos = np.concatenate([[a], self.positions[inner], [b]])
        mid = self(np.concatenate([[a], self.positions[inner]]))
        return PiecewiseConstantProfile(pos, np.concatenate([[lo_val], mid, [hi_val]])).simplify()

    def to_csv(self, path) -> None:
        write_profile_csv(path, self)


def empirical_measure(eta: Configuration, N: int, tails: str | tuple[float, float] = "zero") -> PiecewiseConstantProfile:
    """Density step function of pi^N(eta): value eta(y) on [y/N, (y+1)/N).

    ``tails="zero"`` gives the measure of the finite configuration itself.
    ``tails="boundary"`` continues it by the reservoir densities, and a pair
    of floats sets the tails explicitly.
    """
    if N < 1:
        raise ValueError("scale N must be >= 1")
    if tails == "zero":
        left = right = 0.0
    elif tails == "boundary":
        left, right = eta.boundary.left, eta.boundary.right
    else:
        left, right = tails
    edges = np.arange(eta.window_lo, eta.window_hi + 2, dtype=float) / N
    return PiecewiseConstantProfile.from_steps(edges, eta.occupancies.astype(float), left, right).simplify()


def delta_distance(u: PiecewiseConstantProfile, v: PiecewiseConstantProfile, tol: float = 1e-12) -> float:
    """sup_x |int_{-inf}^x (u - v)|, computed exactly from the front lists."""
    if abs(u.left - v.left) > tol or abs(u.right - v.right) > tol:
        raise ValueError("profiles have different tails; cumulative difference is undefined")
    pts = np.union1d(u.positions, v.positions)
    if pts.size == 0:
        return 0.0
    # the cumulative difference is piecewise linear with kinks at pts only
    diff = u(pts[:-1]) - v(pts[:-1])
    cum = np.concatenate([[0.0], np.cumsum(diff * np.diff(pts))])
    return float(np.max(np.abs(cum)))


def total_variation(u: PiecewiseConstantProfile) -> float:
    return float(np.sum(np.abs(np.diff(u.values))))


def write_profile_csv(path, u: PiecewiseConstantProfile) -> None:
    """Rows (position, value): value holds from the position to the next row.

    The first row has position ``-inf`` and carries the left tail.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["position", "value"])
        w.writerow(["-inf", repr(float(u.values[0]))])
        for p, val in zip(u.positions, u.values[1:]):
            w.writerow([repr(float(p)), repr(float(val))])


def read_profile_csv(path) -> PiecewiseConstantProfile:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    if not rows or rows[0][0] != "-inf":
        raise ValueError(f"{path}: first data row must carry the left tail")
    vals = [float(r[1]) for r in rows]
    pos = [float(r[0]) for r in rows[1:]]
    return PiecewiseConstantProfile(np.array(pos), np.array(vals))


def write_configuration_csv(path, eta: Configuration) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site", "occupancy"])
        for x, n in zip(eta.sites, eta.occupancies):
            w.writerow([int(x), int(n)])


def read_configuration_csv(path, cap: int = 1, boundary: Boundary | None = None) -> Configuration:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    sites, occ = data[:, 0], data[:, 1]
    if sites.size and not np.array_equal(sites, np.arange(sites[0], sites[0] + sites.size)):
        raise ValueError(f"{path}: sites must be consecutive")
    return Configuration(int(sites[0]), occ, cap, boundary or Boundary())


def scaled_window(N: int, half_width: float) -> tuple[int, int]:
    """Sites covering the macroscopic interval [-half_width, half_width)."""
    w = int(math.ceil(N * half_width))
    return -w, w - 1
