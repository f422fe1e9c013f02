"""Seeded Poisson event streams realizing the graphical construction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._hash import seed_key
from ..models.families import TransformationFamily
from ._engine import event_keys

#: expected events per slab; slab width depends only on the base rate and window
SLAB_EVENTS = 1 << 16
#: slabs never span more than this much time, so short runs on small windows stay cheap
SLAB_MAX_WIDTH = 8.0


@dataclass(frozen=True)
class EventBatch:
    times: np.ndarray
    sites: np.ndarray
    aux: np.ndarray
    keys: np.ndarray

    def __len__(self):
        return int(self.times.shape[0])


@dataclass(frozen=True, eq=False)
class EventStream:
    """Poisson points (t, x, v) on (0, horizon] x window x V.

    Time is cut into slabs of fixed width.  Each slab draws its point count,
    ordered times, sites and auxiliary values from its own counter-based
    generator ``SeedSequence(seed, spawn_key=(slab, attempt))``, so any part
    of the stream can be materialized without generating what precedes it.
    Shifts only change the offsets, never the underlying draws.
    """

    family: TransformationFamily
    base_lo: int
    base_hi: int
    horizon: float
    seed: int
    time_offset: float = 0.0
    site_offset: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def lo(self) -> int:
        return self.base_lo - self.site_offset

    @property
    def hi(self) -> int:
        return self.base_hi - self.site_offset

    @property
    def window(self) -> tuple[int, int]:
        return (self.lo, self.hi)

    @property
    def n_sites(self) -> int:
        return self.base_hi - self.base_lo + 1

    @property
    def rate_per_site(self) -> float:
        return float(self.family.rate_per_site)

    @property
    def slab_width(self) -> float:
        return min(SLAB_EVENTS / (self.rate_per_site * self.n_sites), SLAB_MAX_WIDTH)

    def _slab(self, s: int):
        hit = self._cache.get(s)
        if hit is not None:
            return hit
        w = self.slab_width
        lam = self.rate_per_site * self.n_sites * w
        attempt = 0
        while True:
            rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(s, attempt)))
            m = int(rng.poisson(lam))
            spacing = np.cumsum(rng.standard_exponential(m + 1))
            times = s * w + w * (spacing[:m] / spacing[m])
            if m == 0 or (times[0] > s * w and times[-1] < (s + 1) * w and np.all(np.diff(times) > 0)):
                break
            attempt += 1
        sites = self.base_lo + rng.integers(0, self.n_sites, size=m)
        aux = np.ascontiguousarray(self.family.sample_aux(rng, m), dtype=np.float64)
        ids = (np.int64(s) << np.int64(32)) + np.arange(m, dtype=np.int64)
        keys = event_keys(np.uint64(seed_key(self.seed)), ids)
        out = (times, sites.astype(np.int64), aux, keys)
        if len(self._cache) > 4:
            self._cache.clear()
        self._cache[s] = out
        return out

    def batches(self, t_from: float = 0.0, t_to: float | None = None):
        """Yield events with t_from < t <= t_to (stream time), in time order."""
        t_to = self.horizon if t_to is None else min(t_to, self.horizon)
        if t_to <= t_from:
            return
        w = self.slab_width
        b_from, b_to = t_from + self.time_offset, t_to + self.time_offset
        for s in range(int(b_from // w), int(b_to // w) + 1):
            times, sites, aux, keys = self._slab(s)
            sel = slice(np.searchsorted(times, b_from, side="right"), np.searchsorted(times, b_to, side="right"))
            if sel.stop > sel.start:
                yield EventBatch(times[sel] - self.time_offset, sites[sel] - self.site_offset, aux[sel], keys[sel])

    def points(self) -> list[tuple[float, int, np.ndarray]]:
        """All points as (t, x, v) tuples; meant for small streams."""
        out = []
        for b in self.batches():
            out.extend((float(t), int(x), v.copy()) for t, x, v in zip(b.times, b.sites, b.aux))
        return out

    def __len__(self):
        return sum(len(b) for b in self.batches())

    def site_counts(self) -> np.ndarray:
        counts = np.zeros(self.n_sites, dtype=np.int64)
        for b in self.batches():
            counts += np.bincount(b.sites - self.lo, minlength=self.n_sites)
        return counts


def generate_events(window, family: TransformationFamily, T: float, seed: int, band: int = 0) -> EventStream:
    """Event stream on sites window[0]-band .. window[1]+band over (0, T]."""
    lo, hi = int(window[0]) - band, int(window[1]) + band
    if hi < lo:
        raise ValueError("empty window")
    if T < 0:
        raise ValueError("negative horizon")
    return EventStream(family, lo, hi, float(T), int(seed))


def shift_stream(events: EventStream, x0: int, t0: float) -> EventStream:
    """Space-time shift: the point (t, x) becomes (t - t0, x - x0), keeping t > t0."""
    if t0 < 0 or t0 > events.horizon:
        raise ValueError("time shift outside [0, horizon]")
    return EventStream(
        events.family,
        events.base_lo,
        events.base_hi,
        events.horizon - t0,
        events.seed,
        events.time_offset + t0,
        events.site_offset + int(x0),
    )
