"""Jitted event loops shared by evolve, simulate and couple."""

import numba as nb
import numpy as np

from .._hash import mix64
from ..models._steps import MODE_PERIODIC, MODE_TAILS, read

# layout of the int64 statistics vector
ST_EVENTS = 0
ST_MOVES = 1
ST_IN_LEFT = 2
ST_OUT_LEFT = 3
ST_IN_RIGHT = 4
ST_OUT_RIGHT = 5
ST_BOUNDS = 6
ST_CONSERVATION = 7
ST_DISPLACEMENT = 8
ST_ORDER = 9
ST_OBSERVER_OUT = 10
N_STATS = 11


@nb.njit(cache=True, inline="always")
def _write(occ, j, d, mode):
    n = occ.shape[0]
    if 0 <= j < n:
        occ[j] += d
        return True
    if mode == MODE_PERIODIC:
        occ[j % n] += d
        return True
    return False


@nb.njit(cache=True)
def _move_observers(occ, obs_speed, obs_origin, obs_pos, obs_counts, tau, mode, cap, lam_l, lam_r, stats):
    n = occ.shape[0]
    for o in range(obs_speed.shape[0]):
        target = obs_origin[o] + np.int64(np.floor(obs_speed[o] * tau))
        p = obs_pos[o]
        if target > p:
            s = 0
            for y in range(p, target):
                if mode != MODE_PERIODIC and (y < 0 or y >= n):
                    stats[ST_OBSERVER_OUT] += 1
                s += read(occ, y, y, mode, cap, lam_l, lam_r, np.uint64(0))
            obs_counts[o, 2] -= s
        elif target < p:
            s = 0
            for y in range(target, p):
                if mode != MODE_PERIODIC and (y < 0 or y >= n):
                    stats[ST_OBSERVER_OUT] += 1
                s += read(occ, y, y, mode, cap, lam_l, lam_r, np.uint64(0))
            obs_counts[o, 2] += s
        obs_pos[o] = target


@nb.njit(cache=True, inline="always")
def _crossing(a, b, p):
    # +1 if the bond left of p is crossed rightwards, -1 leftwards
    if a < p and p <= b:
        return 1
    if b < p and p <= a:
        return -1
    return 0


@nb.njit  # takes a jitted step as argument, which the on-disk cache keys unreliably
def run_events(step, params, occ, times, sites, aux, keys, start, t_stop, lo, mode, cap, lam_l, lam_r,
               obs_speed, obs_origin, obs_pos, obs_counts, t_origin, stats, check):
    """Apply events start.. with time <= t_stop to occ; returns next index.

    Observer positions and origins are array indices (site - lo); the
    position p stands for the bond between p - 1 and p.
    """
    n = occ.shape[0]
    n_obs = obs_speed.shape[0]
    total = 0
    if check:
        total = occ.sum()
    e = start
    while e < times.shape[0] and times[e] <= t_stop:
        if n_obs > 0:
            _move_observers(occ, obs_speed, obs_origin, obs_pos, obs_counts, times[e] - t_origin,
                            mode, cap, lam_l, lam_r, stats)
        i = sites[e] - lo
        j = step(occ, i, aux[e], params, mode, cap, lam_l, lam_r, keys[e])
        stats[ST_EVENTS] += 1
        if j != i:
            src_in = _write(occ, i, -1, mode)
            dst_in = _write(occ, j, 1, mode)
            stats[ST_MOVES] += 1
            stats[ST_DISPLACEMENT] += j - i
            if mode == MODE_TAILS:
                if not src_in:
                    if dst_in:
                        if i < 0:
                            stats[ST_IN_LEFT] += 1
                        else:
                            stats[ST_IN_RIGHT] += 1
                elif not dst_in:
                    if j < 0:
                        stats[ST_OUT_LEFT] += 1
                    else:
                        stats[ST_OUT_RIGHT] += 1
            for o in range(n_obs):
                p = obs_pos[o]
                if mode == MODE_PERIODIC:
                    pm = p % n
                    c = _crossing(i, j, pm) + _crossing(i, j, pm - n) + _crossing(i, j, pm + n)
                else:
                    c = _crossing(i, j, p)
                if c > 0:
                    obs_counts[o, 0] += c
                elif c < 0:
                    obs_counts[o, 1] -= c
            if check:
                if src_in:
                    ii = i % n
                    if occ[ii] < 0 or occ[ii] > cap:
                        stats[ST_BOUNDS] += 1
                    total -= 1
                if dst_in:
                    jj = j % n
                    if occ[jj] < 0 or occ[jj] > cap:
                        stats[ST_BOUNDS] += 1
                    total += 1
                if occ.sum() != total:
                    stats[ST_CONSERVATION] += 1
                    total = occ.sum()
        e += 1
    return e


@nb.njit  # takes a jitted step as argument, which the on-disk cache keys unreliably
def run_events_coupled(step, params, occ2, times, sites, aux, keys, start, t_stop, lo, mode, cap, lam_l, lam_r,
                       pairs_a, pairs_b, stats, check):
    """Apply each event to every row of occ2; count order violations.

    ``pairs_a[q] <= pairs_b[q]`` are the row pairs that must stay ordered.
    Only sites touched by the event can break the order, so only those are
    compared.
    """
    n_rows, n = occ2.shape
    touched = np.empty(2 * n_rows, dtype=np.int64)
    e = start
    while e < times.shape[0] and times[e] <= t_stop:
        i = sites[e] - lo
        n_t = 0
        for r in range(n_rows):
            row = occ2[r]
            j = step(row, i, aux[e], params, mode, cap, lam_l, lam_r, keys[e])
            if j != i:
                src_in = _write(row, i, -1, mode)
                dst_in = _write(row, j, 1, mode)
                stats[ST_MOVES] += 1
                if src_in:
                    touched[n_t] = i % n
                    n_t += 1
                if dst_in:
                    touched[n_t] = j % n
                    n_t += 1
                if check:
                    if src_in and occ2[r, i % n] < 0:
                        stats[ST_BOUNDS] += 1
                    if dst_in and occ2[r, j % n] > cap:
                        stats[ST_BOUNDS] += 1
        stats[ST_EVENTS] += 1
        if check and n_t > 0:
            for q in range(pairs_a.shape[0]):
                a = pairs_a[q]
                b = pairs_b[q]
                for t in range(n_t):
                    y = touched[t]
                    if occ2[a, y] > occ2[b, y]:
                        stats[ST_ORDER] += 1
                        break
        e += 1
    return e


@nb.njit(cache=True)
def event_keys(seed_key, ids):
    out = np.empty(ids.shape[0], dtype=np.uint64)
    for k in range(ids.shape[0]):
        out[k] = mix64(np.uint64(seed_key) ^ mix64(np.uint64(ids[k])))
    return out
