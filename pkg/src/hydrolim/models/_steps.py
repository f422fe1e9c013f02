"""Jitted single-event updates, one per model family.

Every step function has the signature

    step(occ, i, aux, params, mode, cap, lam_l, lam_r, key) -> target index

where ``occ`` is the occupancy array, ``i`` the (array) index of the event
site, ``aux`` the auxiliary vector of the event and ``params`` a
family-specific tuple.  The return value is the index the particle at ``i``
moves to, or ``i`` itself when nothing happens.  Indices may fall outside the
array; ``read`` resolves them according to ``mode``.
"""

import numba as nb
import numpy as np

from .._hash import ghost_occupancy

MODE_PERIODIC = 0
MODE_TAILS = 1
MODE_CLOSED = 2


@nb.njit(cache=True, inline="always")
def read(occ, j, i, mode, cap, lam_l, lam_r, key):
    n = occ.shape[0]
    if 0 <= j < n:
        return occ[j]
    if mode == MODE_PERIODIC:
        return occ[j % n]
    if mode == MODE_TAILS:
        lam = lam_l if j < 0 else lam_r
        return ghost_occupancy(key, j - i, cap, lam)
    # closed windows behave as if surrounded by full sites
    return cap


@nb.njit(cache=True, inline="always")
def env_index(i, n_env, off, mode):
    if mode == MODE_PERIODIC:
        return i % n_env
    return i + off


@nb.njit(cache=True)
def misanthrope_step(occ, i, aux, params, mode, cap, lam_l, lam_r, key):
    radius, bond, rscale, b, norm, off = params
    n0 = read(occ, i, i, mode, cap, lam_l, lam_r, key)
    if n0 == 0:
        return i
    z = np.int64(aux[0])
    j = i + z
    m0 = read(occ, j, i, mode, cap, lam_l, lam_r, key)
    e = env_index(i, rscale.shape[0], off, mode)
    col = z + radius if bond else 0
    if aux[1] * norm < rscale[e, col] * b[n0, m0]:
        return j
    return i


@nb.njit(cache=True)
def kstep_exclusion_step(occ, i, aux, params, mode, cap, lam_l, lam_r, key):
    alpha, norm, off, k = params
    if read(occ, i, i, mode, cap, lam_l, lam_r, key) == 0:
        return i
    for s in range(k):
        j = i + np.int64(aux[s])
        if read(occ, j, i, mode, cap, lam_l, lam_r, key) == 0:
            e = env_index(i, alpha.shape[0], off, mode)
            if aux[k] * norm < alpha[e]:
                return j
            return i
    return i


@nb.njit(cache=True)
def overtaking_step(occ, i, aux, params, mode, cap, lam_l, lam_r, key):
    beta, bound, off, k = params
    if read(occ, i, i, mode, cap, lam_l, lam_r, key) == 0:
        return i
    d = 1 if aux[1] > 0 else -1
    for s in range(1, k + 1):
        j = i + d * s
        if read(occ, j, i, mode, cap, lam_l, lam_r, key) == 0:
            e = env_index(i, beta.shape[0], off, mode)
            col = s - 1 if d > 0 else k + s - 1
            if aux[0] * bound <= beta[e, col]:
                return j
            return i
    return i


@nb.njit(cache=True)
def kstep_misanthrope_step(occ, i, aux, params, mode, cap, lam_l, lam_r, key):
    types, cum, paths, rates, bound, off = params
    n0 = read(occ, i, i, mode, cap, lam_l, lam_r, key)
    if n0 == 0:
        return i
    e = env_index(i, types.shape[0], off, mode)
    t = types[e]
    row = cum[t]
    p = np.searchsorted(row, aux[0], side="right")
    if p >= row.shape[0]:
        p = row.shape[0] - 1
    k = paths.shape[2]
    for s in range(k):
        j = i + paths[t, p, s]
        m0 = read(occ, j, i, mode, cap, lam_l, lam_r, key)
        if m0 < cap:
            if aux[1] * bound < rates[t, p, s, n0, m0]:
                return j
            return i
    return i
