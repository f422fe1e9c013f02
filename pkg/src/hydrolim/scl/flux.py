"""Lipschitz flux functions G on [0, K] and their variational extrema."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NAMED_FLUXES = {
    "tasep": [0.0, 1.0, -1.0],
    "two_step": [0.0, 1.0, 1.0, -2.0],
    "burgers": [0.0, 0.0, 1.0],
}


@dataclass(frozen=True, eq=False)
class FluxFunction:
    """Flux given by polynomial coefficients (ascending) or a linear-interpolation table.

    ``density_set`` optionally lists the densities where values are trusted;
    the function is then meant to be affine between consecutive points.
    """

    kind: str
    coeffs: np.ndarray | None = None
    rhos: np.ndarray | None = None
    values: np.ndarray | None = None
    K: float = 1.0
    density_set: np.ndarray | None = None
    name: str | None = None
    lipschitz_margin: float = 0.0

    def __post_init__(self):
        if self.kind == "polynomial":
            c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
            object.__setattr__(self, "coeffs", c if c.size else np.zeros(1))
        elif self.kind == "table":
            r = np.asarray(self.rhos, dtype=float)
            g = np.asarray(self.values, dtype=float)
            if r.size < 2 or r.shape != g.shape or np.any(np.diff(r) <= 0):
                raise ValueError("table flux needs >= 2 strictly increasing densities with values")
            object.__setattr__(self, "rhos", r)
            object.__setattr__(self, "values", g)
            object.__setattr__(self, "K", float(r[-1]) if self.K is None else float(self.K))
        else:
            raise ValueError(f"unknown flux representation {self.kind!r}")
        if self.density_set is not None:
            object.__setattr__(self, "density_set", np.unique(np.asarray(self.density_set, dtype=float)))

    # construction

    @classmethod
    def polynomial(cls, coeffs, K: float = 1.0, name: str | None = None) -> "FluxFunction":
        return cls("polynomial", coeffs=np.asarray(coeffs, dtype=float), K=float(K), name=name)

    @classmethod
    def table(cls, rhos, values, K: float | None = None, density_set=None, name=None, lipschitz_margin=0.0):
        rhos = np.asarray(rhos, dtype=float)
        return cls("table", rhos=rhos, values=np.asarray(values, dtype=float),
                   K=float(rhos[-1]) if K is None else float(K), density_set=density_set, name=name,
                   lipschitz_margin=float(lipschitz_margin))

    @classmethod
    def named(cls, tag: str, K: float = 1.0) -> "FluxFunction":
        if tag not in NAMED_FLUXES:
            raise ValueError(f"unknown flux tag {tag!r}")
        return cls.polynomial(NAMED_FLUXES[tag], K, name=tag)

    @classmethod
    def from_dict(cls, d: dict, K: float = 1.0) -> "FluxFunction":
        if "polynomial" in d:
            return cls.polynomial(d["polynomial"], d.get("K", K), d.get("name"))
        if "table" in d:
            arr = np.asarray(d["table"], dtype=float)
            return cls.table(arr[:, 0], arr[:, 1], d.get("K", K), name=d.get("name"))
        if "named" in d:
            return cls.named(d["named"], d.get("K", K))
        raise ValueError(f"unrecognised flux spec {d!r}")

    def to_dict(self) -> dict:
        if self.kind == "polynomial":
            return {"polynomial": self.coeffs.tolist(), "K": self.K}
        return {"table": np.column_stack([self.rhos, self.values]).tolist(), "K": self.K}

    # evaluation

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(r, self.coeffs)
        return np.interp(r, self.rhos, self.values)

    def derivative(self, r):
        """G'(r); for tables the slope of the segment to the right of r."""
        r = np.asarray(r, dtype=float)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(r, np.polynomial.polynomial.polyder(self.coeffs))
        slopes = np.diff(self.values) / np.diff(self.rhos)
        k = np.clip(np.searchsorted(self.rhos, r, side="right") - 1, 0, slopes.size - 1)
        return slopes[k]

    def second_derivative(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(r, np.polynomial.polynomial.polyder(self.coeffs, 2))
        return np.zeros_like(r)

    def negated(self) -> "FluxFunction":
        if self.kind == "polynomial":
            return FluxFunction.polynomial(-self.coeffs, self.K)
        return FluxFunction.table(self.rhos, -self.values, self.K, self.density_set)

    def interpolant(self, levels) -> "FluxFunction":
        """Piecewise-linear interpolant on ``levels`` (sorted, covering the range used)."""
        levels = np.unique(np.asarray(levels, dtype=float))
        if self.kind == "table":
            levels = np.union1d(levels, self.rhos[(self.rhos >= levels[0]) & (self.rhos <= levels[-1])])
        return FluxFunction.table(levels, self(levels), self.K, density_set=levels)

    # structure

    def real_roots(self, coeffs, lo: float | None = None, hi: float | None = None) -> np.ndarray:
        lo = 0.0 if lo is None else lo
        hi = self.K if hi is None else hi
        c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
        if c.size <= 1:
            return np.empty(0)
        roots = np.polynomial.polynomial.polyroots(c)
        real = roots[np.abs(roots.imag) <= 1e-9 * (1 + np.abs(roots.real))].real
        return np.sort(real[(real >= lo - 1e-12) & (real <= hi + 1e-12)])

    @property
    def inflexion_points(self) -> np.ndarray:
        if self.kind != "polynomial":
            return np.empty(0)
        r = self.real_roots(np.polynomial.polynomial.polyder(self.coeffs, 2))
        return r[(r > 0) & (r < self.K)]

    @property
    def breakpoints(self) -> np.ndarray:
        return self.rhos.copy() if self.kind == "table" else np.empty(0)

    @property
    def lipschitz(self) -> float:
        """V = sup |G'| on [0, K]."""
        if self.kind == "table":
            return float(np.max(np.abs(np.diff(self.values) / np.diff(self.rhos)))) + self.lipschitz_margin
        d2 = np.polynomial.polynomial.polyder(self.coeffs, 2)
        pts = np.concatenate([[0.0, self.K], self.real_roots(d2)])
        return float(np.max(np.abs(self.derivative(pts))))

    def speed_range(self, a: float, b: float) -> float:
        """sup |G'| on [min(a, b), max(a, b)]."""
        lo, hi = min(a, b), max(a, b)
        if self.kind == "table":
            pts = np.concatenate([[lo, hi], self.rhos[(self.rhos > lo) & (self.rhos < hi)]])
            seg = np.concatenate([[lo], self.rhos[(self.rhos > lo) & (self.rhos < hi)], [hi]])
            if hi == lo:
                return float(abs(self.derivative(lo)))
            return float(np.max(np.abs(np.diff(self(seg)) / np.diff(seg))))
        pts = np.concatenate([[lo, hi], self.real_roots(np.polynomial.polynomial.polyder(self.coeffs, 2), lo, hi)])
        return float(np.max(np.abs(self.derivative(pts))))

    def stationary_points(self, v) -> np.ndarray:
        """Candidates for extrema of G(r) - v r on [0, K], one row per v.

        Polynomials: real roots of G'(r) = v (NaN padded).  Tables: the
        breakpoints, where all extrema of a piecewise-linear function sit.
        """
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if self.kind == "table":
            return np.broadcast_to(self.rhos, (v.size, self.rhos.size))
        d = np.polynomial.polynomial.polyder(self.coeffs)
        # negligible leading terms would put spurious roots near infinity
        d = np.polynomial.polynomial.polytrim(d, 1e-14 * max(np.abs(d).max(initial=0.0), 1e-300))
        deg = d.size - 1
        if deg <= 0 or not np.any(d):
            return np.full((v.size, 0), np.nan)
        if deg == 1:
            return ((v - d[0]) / d[1]).reshape(-1, 1)
        if deg == 2:
            a, b = d[2], d[1]
            c = d[0] - v
            disc = b * b - 4 * a * c
            sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
            # numerically stable pair of roots
            q = -0.5 * (b + np.copysign(sq, b))
            r1 = q / a
            with np.errstate(divide="ignore", invalid="ignore"):
                r2 = np.where(q != 0, c / q, -b / a - r1)
            return np.column_stack([r1, r2])
        comp = np.zeros((v.size, deg, deg))
        monic = d / d[-1]
        comp[:, 1:, :-1] = np.eye(deg - 1)
        comp[:, :, -1] = -monic[:-1]
        comp[:, 0, -1] = -(d[0] - v) / d[-1]
        roots = np.linalg.eigvals(comp)
        ok = np.abs(roots.imag) <= 1e-7 * (1 + np.abs(roots.real))
        out = np.where(ok, roots.real, np.nan)
        # polish each root with two Newton steps on G' - v; far-off roots may overflow and keep their value
        d2 = np.polynomial.polynomial.polyder(d)
        with np.errstate(all="ignore"):
            for _ in range(2):
                f = np.polynomial.polynomial.polyval(out, d) - v[:, None]
                fp = np.polynomial.polynomial.polyval(out, d2)
                step = np.where(fp != 0, f / fp, 0.0)
                out = out - np.where(np.isfinite(step), step, 0.0)
        return out


def variational_extremum(G: FluxFunction, lam, rho, v, tol: float = 1e-13):
    """Value and selected point of inf (lam <= rho) / sup (lam > rho) of G(r) - v r.

    The optimum runs over r between lam and rho.  Among (near-)ties the
    smallest minimizer / largest maximizer is returned, which is the
    left-limit convention h(v) = h(v - 0) for the Riemann fan.
    Broadcasts over its array arguments.
    """
    lam, rho, v = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (lam, rho, v)))
    shape = lam.shape
    lam, rho, v = lam.ravel(), rho.ravel(), v.ravel()
    lo, hi = np.minimum(lam, rho), np.maximum(lam, rho)
    inner = G.stationary_points(v)
    if G.density_set is not None and G.kind == "polynomial":
        inner = np.broadcast_to(G.density_set, (v.size, G.density_set.size))
    cand = np.column_stack([lo, hi, inner]) if inner.shape[1] else np.column_stack([lo, hi])
    cand = np.where((cand >= lo[:, None]) & (cand <= hi[:, None]), cand, np.nan)
    f = G(np.nan_to_num(cand, nan=0.0)) - v[:, None] * np.nan_to_num(cand, nan=0.0)
    minimize = lam <= rho
    sgn = np.where(minimize, 1.0, -1.0)[:, None]
    score = np.where(np.isnan(cand), np.inf, sgn * f)
    best = score.min(axis=1)
    scale = 1.0 + np.abs(best)
    tie = score <= (best + tol * scale)[:, None]
    pick_small = np.where(tie, cand, np.inf).min(axis=1)
    pick_large = np.where(tie, cand, -np.inf).max(axis=1)
    arg = np.where(minimize, pick_small, pick_large)
    value = sgn[:, 0] * best
    return value.reshape(shape), arg.reshape(shape)


def rh_speed(G: FluxFunction, u_minus: float, u_plus: float) -> float:
    """Rankine-Hugoniot speed (G(u-) - G(u+)) / (u- - u+)."""
    if u_minus == u_plus:
        raise ValueError("equal states carry no discontinuity")
    return float((G(u_minus) - G(u_plus)) / (u_minus - u_plus))


def oleinik_check(G: FluxFunction, u_minus: float, u_plus: float, tol: float = 1e-9, grid: float = 1e-4) -> bool:
    """Chord below G for increasing jumps, above G for decreasing jumps (touching allowed)."""
    if u_minus == u_plus:
        raise ValueError("equal states carry no discontinuity")
    lo, hi = min(u_minus, u_plus), max(u_minus, u_plus)
    n = max(int(np.ceil((hi - lo) / grid)), 2) + 1
    r = np.linspace(lo, hi, n)
    if G.kind == "table":
        r = np.union1d(r, G.rhos[(G.rhos > lo) & (G.rhos < hi)])
    s = rh_speed(G, u_minus, u_plus)
    chord = G(u_minus) + s * (r - u_minus)
    gap = G(r) - chord
    if u_minus < u_plus:
        return bool(np.all(gap >= -tol))
    return bool(np.all(gap <= tol))
