"""Brute-force certification that a transformation family is monotone."""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from ..lattice import Boundary, Configuration
from ._steps import MODE_CLOSED
from .families import TransformationFamily, all_configurations


@dataclass(frozen=True)
class Counterexample:
    eta: Configuration
    xi: Configuration
    x: int
    v: np.ndarray
    image_eta: Configuration
    image_xi: Configuration


@dataclass(frozen=True)
class MonotonicityCertificate:
    ok: bool
    window_size: int
    pairs: int
    samples_requested: int
    samples_checked: int
    counterexample: Counterexample | None = None

    @property
    def coverage(self) -> float:
        return self.samples_checked / max(self.samples_requested, 1)

    @property
    def complete(self) -> bool:
        return self.samples_checked == self.samples_requested

    def __bool__(self):
        return self.ok

    def summary(self) -> str:
        state = "certified" if self.ok else "counterexample"
        return (
            f"{state}: window={self.window_size} pairs={self.pairs} "
            f"samples={self.samples_checked}/{self.samples_requested} coverage={self.coverage:.3f}"
        )


@nb.njit  # takes a jitted step as argument, which the on-disk cache keys unreliably
def _scan(step, params, configs, pairs_a, pairs_b, background, xs, aux, cap, width, pad):
    n_conf = configs.shape[0]
    length = width + 2 * pad
    arr = np.empty(length, dtype=np.int64)
    images = np.empty((n_conf, length), dtype=np.int64)
    for s in range(xs.shape[0]):
        i = xs[s]
        for c in range(n_conf):
            arr[:pad] = background[s, :pad]
            arr[pad : pad + width] = configs[c]
            arr[pad + width :] = background[s, pad:]
            j = step(arr, i, aux[s], params, MODE_CLOSED, cap, 0.0, 0.0, np.uint64(0))
            if j != i and 0 <= j < length:
                arr[i] -= 1
                arr[j] += 1
            images[c] = arr
        for q in range(pairs_a.shape[0]):
            a = pairs_a[q]
            b = pairs_b[q]
            for site in range(length):
                if images[a, site] > images[b, site]:
                    return s, q
    return -1, -1


def ordered_pairs(configs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (a, b), a != b, with configs[a] <= configs[b] coordinatewise."""
    le = np.all(configs[:, None, :] <= configs[None, :, :], axis=2)
    np.fill_diagonal(le, False)
    a, b = np.nonzero(le)
    return a.astype(np.int64), b.astype(np.int64)


def check_monotone(
    family: TransformationFamily,
    window_size: int = 5,
    aux_samples: int = 10_000,
    seed: int = 0,
    env=None,
    budget: float = 2e9,
) -> MonotonicityCertificate:
    """Check T(eta) <= T(xi) for all ordered pairs on a small window.

    All configurations of the window are enumerated; the window is embedded
    in a random background of width twice the locality radius on each side
    (resampled per auxiliary draw) and the event site ranges over the window
    widened by the locality radius.  ``budget`` caps pair comparisons; when
    it binds, fewer samples are checked and the certificate reports partial
    coverage.
    """
    K = family.K
    r = family.locality_radius
    pad = 2 * r
    length = window_size + 2 * pad
    configs = all_configurations(window_size, K)
    pa, pb = ordered_pairs(configs)
    n_pairs = pa.size
    samples = aux_samples
    if n_pairs * aux_samples * length > budget:
        samples = max(1, int(budget // (n_pairs * length)))
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xC0,)))
    background = rng.integers(0, K + 1, size=(samples, 2 * pad)).astype(np.int64)
    xs = rng.integers(r, r + window_size + 2 * r, size=samples).astype(np.int64)
    aux = np.ascontiguousarray(family.sample_aux(rng, samples))
    if env is None:
        env = family.environment(0, length - 1, seed=seed)
    params = family.kernel_params(env, 0, length, periodic=False)
    s, q = _scan(family.step, params, configs, pa, pb, background, xs, aux, K, window_size, pad)
    if s < 0:
        return MonotonicityCertificate(True, window_size, n_pairs, aux_samples, samples)

    def embed(c):
        occ = np.concatenate([background[s, :pad], configs[c], background[s, pad:]])
        return Configuration(0, occ, K, Boundary.tails(0.0, 0.0))

    eta, xi = embed(pa[q]), embed(pb[q])
    x = int(xs[s])
    ex = Counterexample(
        eta, xi, x, aux[s].copy(), _closed_apply(family, env, x, aux[s], eta), _closed_apply(family, env, x, aux[s], xi)
    )
    return MonotonicityCertificate(False, window_size, n_pairs, aux_samples, s + 1, ex)


def _closed_apply(family, env, x, v, eta):
    occ = np.array(eta.occupancies)
    params = family.kernel_params(env, 0, occ.size, periodic=False)
    j = family.step(occ, x, np.asarray(v, dtype=float), params, MODE_CLOSED, family.K, 0.0, 0.0, np.uint64(0))
    if j != x and 0 <= j < occ.size:
        occ[x] -= 1
        occ[j] += 1
    return eta.with_occupancies(occ)
