"""Quenched environments: i.i.d. site, bond, overtaking and path-type disorder."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DISORDER_KINDS = ("none", "site_rates", "bond_rates", "overtaking_scale", "site_types")


@dataclass(frozen=True)
class DisorderSpec:
    """i.i.d. law for the environment field.

    ``law`` is ``"uniform"`` (on ``[low, high]``) or ``"choice"`` (``values``
    with ``probs``).  ``c`` bounds rates in ``[c, 1/c]``; when omitted the
    tightest admissible value is used.
    """

    kind: str = "none"
    law: str | None = None
    low: float | None = None
    high: float | None = None
    values: tuple = ()
    probs: tuple = ()
    c: float | None = None

    def __post_init__(self):
        if self.kind not in DISORDER_KINDS:
            raise ValueError(f"unknown disorder kind {self.kind!r}")
        if self.kind == "none":
            return
        if self.law == "uniform":
            if self.low is None or self.high is None or not self.low <= self.high:
                raise ValueError("uniform law needs low <= high")
        elif self.law == "choice":
            if len(self.values) == 0 or len(self.values) != len(self.probs):
                raise ValueError("choice law needs matching values and probs")
            p = np.asarray(self.probs, dtype=float)
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError("choice probabilities must sum to 1")
        else:
            raise ValueError(f"unknown disorder law {self.law!r}")
        lo, hi = self.support
        if self.kind == "site_types":
            if lo < 0 or any(float(v) != int(v) for v in self.values):
                raise ValueError("site_types law must take non-negative integer values")
            return
        if lo <= 0:
            raise ValueError("disorder rates must be positive")
        if self.c is not None:
            if not 0.0 < self.c <= 1.0:
                raise ValueError("c must lie in (0, 1]")
            if self.kind in ("site_rates", "bond_rates") and (lo < self.c - 1e-15 or hi > 1.0 / self.c + 1e-12):
                raise ValueError(f"disorder support [{lo}, {hi}] leaves [c, 1/c] for c={self.c}")

    @classmethod
    def from_dict(cls, d: dict | None) -> "DisorderSpec":
        if not d:
            return cls()
        d = dict(d)
        kind = d.pop("kind", "none")
        if kind == "none":
            return cls()
        law = d.pop("law")
        c = d.pop("c", None)
        if law == "uniform":
            return cls(kind, "uniform", float(d["low"]), float(d["high"]), c=c)
        return cls(kind, "choice", values=tuple(d["values"]), probs=tuple(float(p) for p in d["probs"]), c=c)

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == "none":
            return (1.0, 1.0)
        if self.law == "uniform":
            return (float(self.low), float(self.high))
        vals = [float(v) for v, p in zip(self.values, self.probs) if p > 0]
        return (min(vals), max(vals))

    @property
    def upper(self) -> float:
        """Largest value the field can take (1 without disorder)."""
        return self.support[1]

    @property
    def c_effective(self) -> float:
        if self.c is not None:
            return float(self.c)
        lo, hi = self.support
        if self.kind in ("none", "site_types"):
            return 1.0
        return float(min(1.0, lo, 1.0 / hi))

    @property
    def mean(self) -> float:
        if self.kind == "none":
            return 1.0
        if self.law == "uniform":
            return 0.5 * (self.low + self.high)
        return float(np.dot(np.asarray(self.values, float), self.probs))

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "none":
            return np.ones(shape)
        if self.law == "uniform":
            return rng.uniform(self.low, self.high, size=shape)
        idx = rng.choice(len(self.values), size=shape, p=np.asarray(self.probs, float))
        return np.asarray(self.values, dtype=float)[idx]


@dataclass(frozen=True, eq=False)
class Environment:
    """Frozen disorder field on the sites ``lo .. lo + len(values) - 1``.

    ``values`` has one row per site; its meaning depends on ``kind``: a rate
    for ``site_rates``, one rate per displacement for ``bond_rates`` (column
    ``z + radius``), a 2k-vector of overtaking rates (forward then backward)
    for ``overtaking_rates``, and a path-type index for ``kstep_mis``.
    """

    kind: str
    lo: int
    values: np.ndarray
    c: float = 1.0
    periodic: bool = False
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, copy=True)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.kind == "site_rates":
            if np.any(vals < self.c - 1e-15) or np.any(vals > 1.0 / self.c + 1e-12):
                raise ValueError("site rates leave [c, 1/c]")
        if self.kind == "overtaking_rates":
            k = vals.shape[1] // 2
            check_overtaking_rates(vals[:, :k], vals[:, k:])

    @property
    def hi(self) -> int:
        return self.lo + self.values.shape[0] - 1

    def covers(self, lo: int, hi: int) -> bool:
        return self.periodic or (self.lo <= lo and hi <= self.hi)

    def row(self, x: int):
        i = x - self.lo
        if self.periodic:
            i %= self.values.shape[0]
        elif not 0 <= i < self.values.shape[0]:
            raise IndexError(f"site {x} outside environment [{self.lo}, {self.hi}]")
        return self.values[i]

    def rows(self, lo: int, n: int) -> np.ndarray:
        """Rows for sites lo .. lo + n - 1."""
        idx = np.arange(lo, lo + n) - self.lo
        if self.periodic:
            idx %= self.values.shape[0]
        elif idx[0] < 0 or idx[-1] >= self.values.shape[0]:
            raise ValueError(f"environment [{self.lo}, {self.hi}] does not cover [{lo}, {lo + n - 1}]")
        return self.values[idx]


def check_overtaking_rates(forward, backward) -> None:
    """Reject rates that break the ordering needed for monotonicity."""
    f = np.atleast_2d(np.asarray(forward, dtype=float))
    b = np.atleast_2d(np.asarray(backward, dtype=float))
    if np.any(f < 0) or np.any(b < 0):
        raise ValueError("overtaking rates must be non-negative")
    if np.any(np.diff(f, axis=1) > 0):
        raise ValueError("forward overtaking rates must be nonincreasing in the distance")
    if np.any(np.diff(b, axis=1) > 0):
        raise ValueError("backward overtaking rates must be nonincreasing in the distance")
    if np.any(f[:, 0] + b[:, 0] <= 0):
        raise ValueError("nearest-neighbour rates must not both vanish")
