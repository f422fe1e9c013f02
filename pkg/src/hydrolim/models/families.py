"""Monotone conservative transformations T^{alpha,x,v} for each model family.

Each family provides two routes to the same update: a readable Python
``apply`` acting on a :class:`Configuration`, and a jitted step function used
by the event loop.  Tests hold them against each other.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod

import numpy as np

from ..lattice import Configuration
from . import _steps
from .environment import DisorderSpec, Environment, check_overtaking_rates
from .kernels import JumpKernel, rate_table_violations, validate_rate_table


def move_particle(eta: Configuration, x: int, y: int) -> Configuration:
    """eta^{x,y}: one particle from x to y; reservoir sites absorb writes."""
    if x == y:
        return eta
    occ = np.array(eta.occupancies)
    for site, d in ((x, -1), (y, +1)):
        i = eta.index(site)
        if i is not None:
            occ[i] += d
    return eta.with_occupancies(occ)


class TransformationFamily(ABC):
    """A model: sampler for auxiliary values plus the local update rule."""

    model_id: str = ""
    K: int = 1
    aux_dim: int = 1
    disorder: DisorderSpec
    #: whether the disorder-free model has explicit product invariant measures
    product_invariant: bool = False

    @property
    @abstractmethod
    def locality_radius(self) -> int:
        """Largest displacement an update can cause."""

    @property
    @abstractmethod
    def rate_per_site(self) -> float:
        """Total mass m(V): events per site per unit time."""

    @property
    @abstractmethod
    def step(self):
        """Jitted step function (see ``_steps``)."""

    @abstractmethod
    def sample_aux(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n auxiliary vectors drawn from m / m(V), shape (n, aux_dim)."""

    @abstractmethod
    def apply(self, env: Environment | None, x: int, v, eta: Configuration, key: int = 0) -> Configuration:
        """Reference implementation of T^{alpha,x,v} eta."""

    @abstractmethod
    def jump_rates(self, env: Environment | None, x: int, eta: Configuration) -> dict[int, float]:
        """Generator rates {y: rate of a jump x -> y} in configuration eta."""

    @abstractmethod
    def _env_fields(self, env: Environment | None, lo: int, n: int) -> np.ndarray:
        """Per-site parameter rows for sites lo .. lo + n - 1."""

    @abstractmethod
    def _pack(self, rows: np.ndarray, off: int) -> tuple:
        """Kernel parameter tuple from environment rows."""

    def kernel_params(self, env: Environment | None, lo: int, n: int, periodic: bool) -> tuple:
        """Parameters for the step function on an array of n sites starting at lo.

        Non-periodic arrays also receive events on a band of locality_radius
        sites on each side, so the environment must cover that band.
        """
        off = 0 if periodic else self.locality_radius
        rows = self._env_fields(env, lo - off, n + 2 * off)
        return self._pack(rows, off)

    def environment(self, lo: int, hi: int, seed: int = 0, periodic: bool = False) -> Environment | None:
        """Sample a disorder field covering [lo, hi] plus the event band."""
        from .spec import sample_environment_for

        return sample_environment_for(self, (lo, hi), seed, periodic=periodic)

    @property
    def max_speed(self) -> float:
        """Mean displacement per unit time bound used for window fencing."""
        return self.rate_per_site * self.locality_radius

    def __repr__(self):
        return f"{type(self).__name__}(K={self.K}, radius={self.locality_radius}, disorder={self.disorder.kind})"


class Misanthrope(TransformationFamily):
    """Misanthrope process with optional site or bond disorder.

    A particle at x proposes the displacement z ~ p and jumps iff
    u < alpha(x, x+z) b(eta(x), eta(x+z)) / (C max b), with C = 1/c.
    """

    model_id = "misanthrope"
    aux_dim = 2

    def __init__(self, kernel: JumpKernel, rates, disorder: DisorderSpec | None = None, strict: bool = True):
        self.kernel = kernel
        self.b = validate_rate_table(rates) if strict else np.array(rates, dtype=float)
        if not strict and (self.b.ndim != 2 or self.b.shape[0] != self.b.shape[1] or self.b.max() <= 0):
            raise ValueError("rate table must be square with a positive entry")
        self.K = self.b.shape[0] - 1
        self.disorder = disorder or DisorderSpec()
        if self.disorder.kind not in ("none", "site_rates", "bond_rates"):
            raise ValueError(f"misanthrope does not support {self.disorder.kind} disorder")
        self.C = 1.0 / self.disorder.c_effective
        self.norm = float(self.b.max()) * self.C
        self._z, self._p = kernel.arrays()
        self._cum = np.cumsum(self._p)
        self._cum[-1] = 1.0
        # uniform mean-field measures are invariant only without disorder and for special b
        self.product_invariant = self.K == 1 and self.disorder.kind == "none"

    @property
    def locality_radius(self) -> int:
        return self.kernel.radius

    @property
    def rate_per_site(self) -> float:
        return self.norm

    @property
    def max_speed(self) -> float:
        return self.C * float(self.b.max()) * float(np.dot(np.abs(self._z), self._p))

    @property
    def step(self):
        return _steps.misanthrope_step

    def sample_aux(self, rng, n):
        u = rng.random((n, 2))
        idx = np.minimum(np.searchsorted(self._cum, u[:, 0], side="right"), self._z.size - 1)
        u[:, 0] = self._z[idx]
        return u

    def alpha(self, env, x: int, z: int) -> float:
        if env is None or env.kind == "none":
            return 1.0
        row = env.row(x)
        if env.kind == "bond_rates":
            return float(row[z + self.locality_radius])
        return float(row)

    def apply(self, env, x, v, eta, key=0):
        z, u = int(v[0]), float(v[1])
        n0 = eta.read(x, key, x)
        if n0 == 0:
            return eta
        y = x + z
        m0 = eta.read(y, key, x)
        if u * self.norm < self.alpha(env, x, z) * self.b[n0, m0]:
            return move_particle(eta, x, y)
        return eta

    def jump_rates(self, env, x, eta):
        n0 = eta.read(x)
        out = {}
        if n0 == 0:
            return out
        for z, p in zip(self._z, self._p):
            r = self.alpha(env, x, int(z)) * p * self.b[n0, eta.read(x + int(z))]
            if r > 0:
                out[x + int(z)] = out.get(x + int(z), 0.0) + float(r)
        return out

    def _env_fields(self, env, lo, n):
        width = 2 * self.locality_radius + 1
        if env is None or env.kind == "none":
            return np.ones((n, 1))
        rows = env.rows(lo, n)
        if env.kind == "bond_rates":
            return np.ascontiguousarray(rows, dtype=float).reshape(n, width)
        return np.asarray(rows, dtype=float).reshape(n, 1)

    def _pack(self, rows, off):
        bond = rows.shape[1] > 1
        return (
            np.int64(self.locality_radius),
            bool(bond),
            np.ascontiguousarray(rows, dtype=np.float64),
            np.ascontiguousarray(self.b, dtype=np.float64),
            float(self.norm),
            np.int64(off),
        )


def absorbed_walk_paths(kernel: JumpKernel, k: int) -> tuple[np.ndarray, np.ndarray]:
    """All k-step paths (positions) of the kernel's walk absorbed at 0.

    Returns (paths, probs) with paths sorted lexicographically.
    """
    table = {(): 1.0}
    for step in range(k):
        nxt: dict[tuple, float] = {}
        for path, prob in table.items():
            pos = path[-1] if path else 0
            if step > 0 and pos == 0:
                key = path + (0,)
                nxt[key] = nxt.get(key, 0.0) + prob
                continue
            for z, p in zip(kernel.offsets, kernel.probs):
                key = path + (pos + z,)
                nxt[key] = nxt.get(key, 0.0) + prob * p
        table = nxt
    keys = sorted(table)
    return np.array(keys, dtype=np.int64).reshape(len(keys), k), np.array([table[q] for q in keys])


class KStepExclusion(TransformationFamily):
    """k-step exclusion: follow the walk until the first empty site.

    Site disorder alpha(x) in [c, 1/c] thins the proposals: the jump happens
    iff u < c alpha(x).
    """

    model_id = "kstep_exclusion"
    K = 1

    def __init__(self, kernel: JumpKernel, k: int, disorder: DisorderSpec | None = None):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.kernel = kernel
        self.k = int(k)
        self.aux_dim = self.k + 1
        self.disorder = disorder or DisorderSpec()
        if self.disorder.kind not in ("none", "site_rates"):
            raise ValueError(f"k-step exclusion does not support {self.disorder.kind} disorder")
        self.C = 1.0 / self.disorder.c_effective
        self.paths, self.path_probs = absorbed_walk_paths(kernel, self.k)
        self._cum = np.cumsum(self.path_probs)
        self._cum[-1] = 1.0
        self.product_invariant = self.disorder.kind == "none"

    @property
    def locality_radius(self) -> int:
        return int(np.abs(self.paths).max())

    @property
    def rate_per_site(self) -> float:
        return self.C

    @property
    def step(self):
        return _steps.kstep_exclusion_step

    def sample_aux(self, rng, n):
        u = rng.random((n, 2))
        idx = np.minimum(np.searchsorted(self._cum, u[:, 0], side="right"), self.paths.shape[0] - 1)
        out = np.empty((n, self.k + 1))
        out[:, : self.k] = self.paths[idx]
        out[:, self.k] = u[:, 1]
        return out

    def alpha(self, env, x):
        if env is None or env.kind == "none":
            return 1.0
        return float(env.row(x))

    @staticmethod
    def first_empty(eta, x, path, key=0):
        for z in path:
            if eta.read(x + int(z), key, x) == 0:
                return x + int(z)
        return None

    def apply(self, env, x, v, eta, key=0):
        v = np.asarray(v, dtype=float)
        u = float(v[self.k]) if v.size > self.k else 0.0
        if eta.read(x, key, x) == 0:
            return eta
        y = self.first_empty(eta, x, v[: self.k], key)
        if y is None or not u * self.C < self.alpha(env, x):
            return eta
        return move_particle(eta, x, y)

    def jump_rates(self, env, x, eta):
        out = {}
        if eta.read(x) == 0:
            return out
        a = self.alpha(env, x)
        for path, q in zip(self.paths, self.path_probs):
            y = self.first_empty(eta, x, path)
            if y is not None:
                out[y] = out.get(y, 0.0) + float(q * a)
        return out

    def _env_fields(self, env, lo, n):
        if env is None or env.kind == "none":
            return np.ones(n)
        return np.asarray(env.rows(lo, n), dtype=float).reshape(n)

    def _pack(self, rows, off):
        return (np.ascontiguousarray(rows, dtype=np.float64), float(self.C), np.int64(off), np.int64(self.k))


class Overtaking(TransformationFamily):
    """Exclusion with overtaking over at most k - 1 occupied sites.

    With direction d and first empty site x + j d (j <= k) the particle jumps
    iff u <= beta_x^{d j} / B, where B bounds all rates.
    """

    model_id = "overtaking"
    K = 1
    aux_dim = 2

    def __init__(self, k: int, forward, backward=None, disorder: DisorderSpec | None = None):
        self.k = int(k)
        f = np.asarray(forward, dtype=float).reshape(-1)
        b = np.zeros(self.k) if backward is None else np.asarray(backward, dtype=float).reshape(-1)
        if f.size != self.k or b.size != self.k:
            raise ValueError("need k forward and k backward rates")
        check_overtaking_rates(f, b)
        self.forward, self.backward = f, b
        self.disorder = disorder or DisorderSpec()
        if self.disorder.kind not in ("none", "overtaking_scale"):
            raise ValueError(f"overtaking does not support {self.disorder.kind} disorder")
        self.bound = float(max(f.max(), b.max())) * self.disorder.upper
        self.product_invariant = self.disorder.kind == "none"

    @property
    def locality_radius(self) -> int:
        return self.k

    @property
    def rate_per_site(self) -> float:
        return 2.0 * self.bound

    @property
    def max_speed(self) -> float:
        return float(np.sum(np.arange(1, self.k + 1) * (self.forward + self.backward))) * self.disorder.upper

    @property
    def step(self):
        return _steps.overtaking_step

    def sample_aux(self, rng, n):
        u = rng.random((n, 2))
        u[:, 1] = np.where(u[:, 1] < 0.5, -1.0, 1.0)
        return u

    def rates_at(self, env, x) -> np.ndarray:
        """(beta^1..beta^k, beta^-1..beta^-k) at site x."""
        base = np.concatenate([self.forward, self.backward])
        if env is None or env.kind == "none":
            return base
        if env.kind == "overtaking_rates":
            return np.asarray(env.row(x), dtype=float)
        return base * float(env.row(x))

    def first_empty(self, eta, x, d, key=0):
        for j in range(1, self.k + 1):
            if eta.read(x + d * j, key, x) == 0:
                return j
        return None

    def apply(self, env, x, v, eta, key=0):
        u, d = float(v[0]), (1 if v[1] > 0 else -1)
        if eta.read(x, key, x) == 0:
            return eta
        j = self.first_empty(eta, x, d, key)
        if j is None:
            return eta
        beta = self.rates_at(env, x)[j - 1 if d > 0 else self.k + j - 1]
        if u * self.bound <= beta:
            return move_particle(eta, x, x + d * j)
        return eta

    def jump_rates(self, env, x, eta):
        out = {}
        if eta.read(x) == 0:
            return out
        beta = self.rates_at(env, x)
        for d in (1, -1):
            j = self.first_empty(eta, x, d)
            if j is not None:
                r = beta[j - 1 if d > 0 else self.k + j - 1]
                if r > 0:
                    out[x + d * j] = float(r)
        return out

    def _env_fields(self, env, lo, n):
        base = np.concatenate([self.forward, self.backward])
        if env is None or env.kind == "none":
            return np.tile(base, (n, 1))
        rows = env.rows(lo, n)
        if env.kind == "overtaking_rates":
            return np.asarray(rows, dtype=float)
        return np.asarray(rows, dtype=float).reshape(n, 1) * base

    def _pack(self, rows, off):
        return (np.ascontiguousarray(rows, dtype=np.float64), float(self.bound), np.int64(off), np.int64(self.k))


class PathType:
    """Path law q and rates b^j(path, n, m) shared by the sites of one type.

    ``paths`` has shape (P, k), ``probs`` shape (P,), ``rates`` shape
    (P, k, K+1, K+1).  Paths are stored in lexicographic order, which fixes
    the inverse-transform map F_q.
    """

    def __init__(self, paths, probs, rates):
        paths = np.asarray(paths, dtype=np.int64)
        probs = np.asarray(probs, dtype=float)
        rates = np.asarray(rates, dtype=float)
        if paths.ndim != 2 or probs.shape != (paths.shape[0],) or rates.shape[:2] != paths.shape:
            raise ValueError("inconsistent path table shapes")
        if rates.ndim != 4 or rates.shape[2] != rates.shape[3]:
            raise ValueError("rates must have shape (P, k, K+1, K+1)")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError("path probabilities must sum to 1")
        order = np.lexsort(paths.T[::-1])
        self.paths = paths[order]
        self.probs = probs[order] / probs.sum()
        self.rates = rates[order]

    @property
    def k(self) -> int:
        return self.paths.shape[1]

    @property
    def K(self) -> int:
        return self.rates.shape[2] - 1

    def violations(self) -> list[str]:
        out = []
        for p in range(self.paths.shape[0]):
            for j in range(self.k):
                for msg in rate_table_violations(self.rates[p, j]):
                    if msg != "b vanishes identically":
                        out.append(f"path {tuple(self.paths[p])}, step {j + 1}: {msg}")
            for j in range(1, self.k):
                if self.rates[p, j, self.K, 0] > self.rates[p, j - 1, 1, self.K - 1] + 1e-15:
                    out.append(
                        f"path {tuple(self.paths[p])}: rate of a {j + 1}-step jump exceeds a {j}-step jump rate"
                    )
        return out

    def to_json(self) -> list:
        return [
            {"path": [int(z) for z in path], "prob": float(q), "rates": r.tolist()}
            for path, q, r in zip(self.paths, self.probs, self.rates)
        ]

    @classmethod
    def from_json(cls, entries) -> "PathType":
        return cls([e["path"] for e in entries], [e["prob"] for e in entries], [e["rates"] for e in entries])


class KStepMisanthrope(TransformationFamily):
    """k-step misanthrope process with per-site path types.

    The path Z = F_q(v1) is scanned for the first site with fewer than K
    particles, Y = x + Z_N, and the jump happens iff v2 < b^N(Z, eta(x), eta(Y)) / B.
    """

    model_id = "kstep_misanthrope"
    aux_dim = 2

    def __init__(self, types, disorder: DisorderSpec | None = None, strict: bool = True):
        self.types = [t if isinstance(t, PathType) else PathType(*t) for t in types]
        if not self.types:
            raise ValueError("need at least one path type")
        ks = {t.k for t in self.types}
        Ks = {t.K for t in self.types}
        if len(ks) != 1 or len(Ks) != 1:
            raise ValueError("all path types must share k and K")
        self.k, self.K = ks.pop(), Ks.pop()
        if strict:
            bad = [m for t in self.types for m in t.violations()]
            if bad:
                raise ValueError("invalid k-step misanthrope rates: " + "; ".join(bad[:5]))
        self.disorder = disorder or DisorderSpec()
        if self.disorder.kind not in ("none", "site_types"):
            raise ValueError(f"k-step misanthrope does not support {self.disorder.kind} disorder")
        if self.disorder.kind == "site_types" and int(self.disorder.upper) >= len(self.types):
            raise ValueError("site_types law refers to a missing path type")
        self.bound = float(max(t.rates.max() for t in self.types))
        if self.bound <= 0:
            raise ValueError("all rates vanish")
        P = max(t.paths.shape[0] for t in self.types)
        T = len(self.types)
        self._cum = np.ones((T, P))
        self._paths = np.zeros((T, P, self.k), dtype=np.int64)
        self._rates = np.zeros((T, P, self.k, self.K + 1, self.K + 1))
        for i, t in enumerate(self.types):
            c = np.cumsum(t.probs)
            c[-1] = 1.0
            self._cum[i, : c.size] = c
            self._paths[i, : c.size] = t.paths
            self._rates[i, : c.size] = t.rates

    @classmethod
    def from_misanthrope(cls, kernel: JumpKernel, rates, strict: bool = True) -> "KStepMisanthrope":
        z, p = kernel.arrays()
        b = np.asarray(rates, dtype=float)
        return cls([PathType(z.reshape(-1, 1), p, np.broadcast_to(b, (z.size, 1) + b.shape))], strict=strict)

    @classmethod
    def from_overtaking(cls, k: int, forward, backward) -> "KStepMisanthrope":
        steps = np.arange(1, k + 1)
        paths = np.stack([-steps, steps])
        nm = np.array([[0.0, 0.0], [1.0, 0.0]])
        rates = np.stack([np.array([bj * nm for bj in backward]), np.array([bj * nm for bj in forward])])
        return cls([PathType(paths, [0.5, 0.5], rates)])

    @classmethod
    def from_kstep_exclusion(cls, kernel: JumpKernel, k: int) -> "KStepMisanthrope":
        paths, probs = absorbed_walk_paths(kernel, k)
        nm = np.array([[0.0, 0.0], [1.0, 0.0]])
        return cls([PathType(paths, probs, np.broadcast_to(nm, (paths.shape[0], k, 2, 2)))])

    @property
    def locality_radius(self) -> int:
        return int(max(np.abs(t.paths).max() for t in self.types))

    @property
    def rate_per_site(self) -> float:
        return self.bound

    @property
    def step(self):
        return _steps.kstep_misanthrope_step

    def sample_aux(self, rng, n):
        return rng.random((n, 2))

    def type_at(self, env, x) -> PathType:
        if env is None or env.kind == "none":
            return self.types[0]
        return self.types[int(env.row(x))]

    def path_for(self, t: PathType, v1: float) -> int:
        c = np.cumsum(t.probs)
        c[-1] = 1.0
        return min(int(np.searchsorted(c, v1, side="right")), t.paths.shape[0] - 1)

    def apply(self, env, x, v, eta, key=0):
        v1, v2 = float(v[0]), float(v[1])
        n0 = eta.read(x, key, x)
        if n0 == 0:
            return eta
        t = self.type_at(env, x)
        p = self.path_for(t, v1)
        for j, z in enumerate(t.paths[p]):
            y = x + int(z)
            m0 = eta.read(y, key, x)
            if m0 < self.K:
                if v2 * self.bound < t.rates[p, j, n0, m0]:
                    return move_particle(eta, x, y)
                return eta
        return eta

    def jump_rates(self, env, x, eta):
        n0 = eta.read(x)
        out = {}
        if n0 == 0:
            return out
        t = self.type_at(env, x)
        for p in range(t.paths.shape[0]):
            for j, z in enumerate(t.paths[p]):
                y = x + int(z)
                m0 = eta.read(y)
                if m0 < self.K:
                    r = t.probs[p] * t.rates[p, j, n0, m0]
                    if r > 0 and y != x:
                        out[y] = out.get(y, 0.0) + float(r)
                    break
        return out

    def _env_fields(self, env, lo, n):
        if env is None or env.kind == "none":
            return np.zeros(n, dtype=np.int64)
        return np.asarray(env.rows(lo, n), dtype=np.int64).reshape(n)

    def _pack(self, rows, off):
        return (
            np.ascontiguousarray(rows, dtype=np.int64),
            self._cum,
            self._paths,
            self._rates,
            float(self.bound),
            np.int64(off),
        )


def all_configurations(size: int, K: int):
    """Every occupancy vector in {0..K}^size, as an array of shape ((K+1)^size, size)."""
    return np.array(list(itertools.product(range(K + 1), repeat=size)), dtype=np.int64).reshape(-1, size)


# Functional forms of the updates.


def misanthrope_apply(family: Misanthrope, env, x, v, eta, key=0):
    return family.apply(env, x, v, eta, key)


def kstep_exclusion_apply(family: KStepExclusion, env, x, v, eta, key=0):
    return family.apply(env, x, v, eta, key)


def overtaking_apply(family: Overtaking, env, x, v, eta, key=0):
    return family.apply(env, x, v, eta, key)


def kstep_misanthrope_apply(family: KStepMisanthrope, env, x, v, eta, key=0):
    return family.apply(env, x, v, eta, key)
