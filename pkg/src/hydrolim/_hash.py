"""Stateless hashing used for reservoir (ghost) site occupancies.

Ghost occupancies outside a finite window are drawn per event from a
binomial law at the tail density.  They must be reproducible from the event
identity alone so that replays, shifts and coupled runs see the same values,
hence a counter-based hash instead of a stateful generator.
"""

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0


@nb.njit(cache=True, inline="always")
def mix64(z):
    """splitmix64 finalizer on a uint64."""
    z = np.uint64(z)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, inline="always")
def hash_uniform(key, counter):
    """Uniform in [0, 1) determined by (key, counter)."""
    z = mix64(np.uint64(key) + _GOLDEN * np.uint64(np.int64(counter) + np.int64(1 << 40)))
    return np.float64(z >> np.uint64(11)) * _INV53


@nb.njit(cache=True, inline="always")
def ghost_occupancy(key, offset, cap, density):
    """Binomial(cap, density/cap) occupancy of a reservoir site.

    ``offset`` is the site position relative to the event site, which keeps
    the draw invariant under spatial shifts of the whole stream.
    """
    p = density / cap
    n = 0
    for j in range(cap):
        if hash_uniform(key, offset * 64 + j) < p:
            n += 1
    return n


@nb.njit(cache=True)
def event_key(seed_key, event_id):
    return mix64(np.uint64(seed_key) ^ mix64(np.uint64(event_id)))


def seed_key(seed: int) -> int:
    """Reduce an arbitrary non-negative integer seed to a 64-bit hash key."""
    return int(mix64(np.uint64(seed % (1 << 64))))
