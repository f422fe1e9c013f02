"""Jump kernels p(.) and misanthrope rate tables b(n, m)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta


@dataclass(frozen=True)
class JumpKernel:
    """Finitely supported jump distribution on Z minus {0}."""

    offsets: tuple[int, ...]
    probs: tuple[float, ...]
    truncated_mass: float = 0.0

    def __post_init__(self):
        z = tuple(int(v) for v in self.offsets)
        p = np.asarray(self.probs, dtype=float)
        if len(z) == 0 or len(z) != p.size:
            raise ValueError("kernel needs matching non-empty offsets and probabilities")
        if len(set(z)) != len(z):
            raise ValueError("repeated kernel offsets")
        if 0 in z:
            raise ValueError("kernel must not charge the zero displacement")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("kernel probabilities must be non-negative and sum to 1")
        order = np.argsort(z)
        object.__setattr__(self, "offsets", tuple(z[i] for i in order))
        object.__setattr__(self, "probs", tuple(float(p[i] / p.sum()) for i in order))

    @classmethod
    def nearest_neighbor(cls, p_right: float = 1.0) -> "JumpKernel":
        if p_right == 1.0:
            return cls((1,), (1.0,))
        if p_right == 0.0:
            return cls((-1,), (1.0,))
        return cls((-1, 1), (1.0 - p_right, p_right))

    @classmethod
    def from_pairs(cls, pairs) -> "JumpKernel":
        pairs = [(int(z), float(p)) for z, p in pairs if float(p) > 0.0]
        return cls(tuple(z for z, _ in pairs), tuple(p for _, p in pairs))

    @classmethod
    def geometric(cls, ratio: float, p_right: float = 1.0, tol: float = 1e-6) -> "JumpKernel":
        """p(+-z) proportional to ratio**(z-1), truncated where the tail mass drops below tol."""
        if not 0.0 < ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        r_max = max(1, int(np.ceil(np.log(tol) / np.log(ratio))))
        w = ratio ** np.arange(r_max)
        lost = ratio**r_max
        return cls._two_sided(w, p_right, lost)

    @classmethod
    def power_law(cls, exponent: float, p_right: float = 1.0, tol: float = 1e-6, r_max: int | None = None) -> "JumpKernel":
        """p(+-z) proportional to z**-exponent, truncated at r_max (auto from tol)."""
        if exponent <= 1.0:
            raise ValueError("exponent must exceed 1 for a summable kernel")
        total = float(zeta(exponent, 1))
        if r_max is None:
            r_max = 1
            while zeta(exponent, r_max + 1) / total >= tol:
                r_max *= 2
            lo, hi = r_max // 2, r_max
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if zeta(exponent, mid + 1) / total < tol:
                    hi = mid
                else:
                    lo = mid
            r_max = max(hi, 1)
        w = np.arange(1, r_max + 1, dtype=float) ** -exponent
        lost = float(zeta(exponent, r_max + 1)) / total
        return cls._two_sided(w, p_right, lost)

    @classmethod
    def _two_sided(cls, w, p_right, lost):
        w = np.asarray(w, dtype=float) / np.sum(w)
        z = np.arange(1, w.size + 1)
        offsets, probs = [], []
        if p_right > 0:
            offsets += list(z)
            probs += list(p_right * w)
        if p_right < 1:
            offsets += list(-z)
            probs += list((1 - p_right) * w)
        return cls(tuple(offsets), tuple(probs), float(lost))

    @property
    def radius(self) -> int:
        return max(abs(z) for z in self.offsets)

    @property
    def mean(self) -> float:
        return float(np.dot(self.offsets, self.probs))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.offsets, dtype=np.int64), np.asarray(self.probs, dtype=float)

    def to_json(self) -> list:
        return [[z, p] for z, p in zip(self.offsets, self.probs)]


def k_exclusion_rates(K: int) -> np.ndarray:
    """b(n, m) = 1{n > 0} 1{m < K}."""
    b = np.zeros((K + 1, K + 1))
    b[1:, :K] = 1.0
    return b


def linear_misanthrope_rates(K: int) -> np.ndarray:
    """b(n, m) = n (K - m), a monotone choice with K-dependent speed-up."""
    n = np.arange(K + 1, dtype=float)
    return np.outer(n, K - n)


NAMED_RATE_TABLES = {
    "k_exclusion": k_exclusion_rates,
    "linear": linear_misanthrope_rates,
}


def rate_table_violations(b: np.ndarray) -> list[str]:
    """Reasons why b fails the misanthrope assumptions (empty if it passes)."""
    b = np.asarray(b, dtype=float)
    out = []
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] < 2:
        return ["rate table must be a square (K+1)x(K+1) array with K >= 1"]
    if not np.all(np.isfinite(b)) or np.any(b < 0):
        out.append("rates must be finite and non-negative")
    if np.any(b[0, :] != 0):
        out.append("b(0, .) must vanish")
    if np.any(b[:, -1] != 0):
        out.append("b(., K) must vanish")
    if np.any(np.diff(b, axis=0) < 0):
        out.append("b must be nondecreasing in its first argument")
    if np.any(np.diff(b, axis=1) > 0):
        out.append("b must be nonincreasing in its second argument")
    if b.max() <= 0:
        out.append("b vanishes identically")
    return out


def validate_rate_table(b) -> np.ndarray:
    b = np.array(b, dtype=float)
    bad = rate_table_violations(b)
    if bad:
        raise ValueError("invalid rate table: " + "; ".join(bad))
    return b
