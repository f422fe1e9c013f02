"""Entropy solutions of Riemann problems via the variational formula."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..lattice import PiecewiseConstantProfile
from .envelope import DEFAULT_GRID, ConvexEnvelope, envelope
from .flux import FluxFunction, oleinik_check, rh_speed, variational_extremum


@dataclass(frozen=True)
class Wave:
    """Shock (speed_lo == speed_hi) or rarefaction fan between two states."""

    kind: str
    u_minus: float
    u_plus: float
    speed_lo: float
    speed_hi: float

    def __post_init__(self):
        for name in ("u_minus", "u_plus", "speed_lo", "speed_hi"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True, eq=False)
class RiemannFan:
    """Self-similar solution u(x, t) = h(x / t) with data lam on the left, rho on the right."""

    flux: FluxFunction
    lam: float
    rho: float
    envelope: ConvexEnvelope

    @property
    def increasing(self) -> bool:
        return self.lam <= self.rho

    @property
    def waves(self) -> list[Wave]:
        """Waves ordered by speed, from the lam side to the rho side."""
        pieces = list(self.envelope.pieces)
        if not self.increasing:
            pieces = pieces[::-1]
        out = []
        for p in pieces:
            lo_state, hi_state = (p.a, p.b) if self.increasing else (p.b, p.a)
            if p.kind == "chord":
                out.append(Wave("shock", lo_state, hi_state, p.slope_a, p.slope_a))
            else:
                s0, s1 = (p.slope_a, p.slope_b) if self.increasing else (p.slope_b, p.slope_a)
                out.append(Wave("rarefaction", lo_state, hi_state, s0, s1))
        return out

    @property
    def shocks(self) -> list[Wave]:
        return [w for w in self.waves if w.kind == "shock"]

    @property
    def speed_support(self) -> tuple[float, float]:
        """Speeds outside which the solution equals lam (left) or rho (right)."""
        w = self.waves
        if not w:
            return (0.0, 0.0)
        return (w[0].speed_lo, w[-1].speed_hi)

    def h(self, v):
        """h_c(v), left-limit convention at shocks."""
        v = np.asarray(v, dtype=float)
        if self.lam == self.rho:
            return np.full(v.shape, self.lam)
        return variational_extremum(self.flux, self.lam, self.rho, v)[1]

    def current(self, v):
        return riemann_current(self.flux, self.lam, self.rho, v)

    def profile(self, x, t: float):
        x = np.asarray(x, dtype=float)
        if t <= 0:
            return np.where(x < 0, self.lam, self.rho)
        return self.h(x / t)

    def mass(self, x1, x2, t: float):
        """Integral of u(., t) over [x1, x2]: t (G_{x1/t} - G_{x2/t})."""
        if t <= 0:
            raise ValueError("t must be positive")
        return t * (self.current(np.asarray(x1, dtype=float) / t) - self.current(np.asarray(x2, dtype=float) / t))

    def to_profile(self, t: float, dx: float, lo: float, hi: float) -> PiecewiseConstantProfile:
        """Cell averages of u(., t) on a dx grid over [lo, hi], constant tails outside."""
        edges = lo + dx * np.arange(int(np.ceil((hi - lo) / dx)) + 1)
        mass = self.mass(edges[:-1], edges[1:], t)
        return PiecewiseConstantProfile.from_steps(edges, mass / dx, self.lam, self.rho).simplify()


def riemann_solve(G: FluxFunction, lam: float, rho: float, grid: float = DEFAULT_GRID) -> RiemannFan:
    lam, rho = float(lam), float(rho)
    for u in (lam, rho):
        if u < -1e-12 or u > G.K + 1e-12:
            raise ValueError(f"state {u} outside [0, {G.K}]")
    return RiemannFan(G, lam, rho, envelope(G, lam, rho, grid))


def riemann_current(G: FluxFunction, lam: float, rho: float, v):
    """G_v(lam, rho): inf (lam <= rho) or sup (lam > rho) of G(r) - v r between the states."""
    out = variational_extremum(G, lam, rho, v)[0]
    return float(out) if np.ndim(out) == 0 else out


# single-inflexion catalogue ---------------------------------------------------


@dataclass(frozen=True)
class RiemannCase:
    """Closed-form structure of a Riemann solution for a single-inflexion flux."""

    kind: str  # shock | rarefaction_fan | contact | constant
    lam: float
    rho: float
    inflexion: float
    tangent_state: float | None = None
    shock_speed: float | None = None

    def __eq__(self, other):
        if isinstance(other, str):
            return self.kind == other
        return NotImplemented

    __hash__ = object.__hash__


def single_inflexion(G: FluxFunction) -> tuple[float, bool]:
    """Inflexion point a and whether G is convex on [0, a) (then concave)."""
    if G.kind != "polynomial":
        raise ValueError("closed-form classification needs a twice differentiable (polynomial) flux")
    pts = G.inflexion_points
    if pts.size != 1:
        raise ValueError(f"flux has {pts.size} inflexion points in (0, K); expected exactly one")
    a = float(pts[0])
    left = float(G.second_derivative(a / 2))
    right = float(G.second_derivative((a + G.K) / 2))
    if left * right >= 0:
        raise ValueError("second derivative does not change sign at the inflexion point")
    return a, left > 0


def tangent_partner(G: FluxFunction, w: float, lo: float, hi: float) -> float | None:
    """Point y in [lo, hi] where the chord from w touches G tangentially: S[w; y] = G'(y)."""

    def f(y):
        return float(G.derivative(y)) * (y - w) - float(G(y) - G(w))

    ys = np.linspace(lo, hi, 2049)
    fs = np.array([f(y) for y in ys])
    ok = np.abs(ys - w) > 1e-12
    ys, fs = ys[ok], fs[ok]
    for k in range(ys.size - 1):
        if fs[k] == 0:
            return float(ys[k])
        if fs[k] * fs[k + 1] < 0:
            return float(brentq(f, ys[k], ys[k + 1], xtol=1e-15, rtol=1e-15))
    if fs.size and fs[-1] == 0:
        return float(ys[-1])
    return None


def classify_riemann(G: FluxFunction, lam: float, rho: float) -> RiemannCase:
    """Shock / rarefaction fan / contact discontinuity for a single-inflexion flux."""
    lam, rho = float(lam), float(rho)
    a, convex_left = single_inflexion(G)
    if lam == rho:
        return RiemannCase("constant", lam, rho, a)
    if not convex_left:
        # reflection x -> -x swaps the states and negates G
        case = classify_riemann(G.negated(), rho, lam)
        speed = None if case.shock_speed is None else -case.shock_speed
        return RiemannCase(case.kind, lam, rho, a, case.tangent_state, speed)
    K = G.K
    if lam < rho:
        if rho <= a:
            return RiemannCase("rarefaction_fan", lam, rho, a)
        if lam >= a:
            return RiemannCase("shock", lam, rho, a, shock_speed=rh_speed(G, lam, rho))
        w = tangent_partner(G, rho, 0.0, a)
        if w is None or lam >= w:
            return RiemannCase("shock", lam, rho, a, w, rh_speed(G, lam, rho))
        return RiemannCase("contact", lam, rho, a, w, rh_speed(G, w, rho))
    if lam <= a:
        return RiemannCase("shock", lam, rho, a, shock_speed=rh_speed(G, lam, rho))
    if rho >= a:
        return RiemannCase("rarefaction_fan", lam, rho, a)
    w = tangent_partner(G, rho, a, K)
    if w is None or lam <= w:
        return RiemannCase("shock", lam, rho, a, w, rh_speed(G, lam, rho))
    return RiemannCase("contact", lam, rho, a, w, rh_speed(G, w, rho))


def inverse_speed(G: FluxFunction, v, lo: float, hi: float):
    """Solve G'(u) = v for u in [lo, hi] where G' is monotone (vectorized bisection)."""
    v = np.asarray(v, dtype=float)
    a = np.full(v.shape, lo)
    b = np.full(v.shape, hi)
    inc = float(G.derivative(hi)) >= float(G.derivative(lo))
    for _ in range(80):
        m = 0.5 * (a + b)
        gm = G.derivative(m)
        go_right = (gm < v) if inc else (gm > v)
        a = np.where(go_right, m, a)
        b = np.where(go_right, b, m)
    return 0.5 * (a + b)


def case_profile(G: FluxFunction, case: RiemannCase, v):
    """Closed-form h(v) built from the case structure (not from the variational formula)."""
    v = np.asarray(v, dtype=float)
    lam, rho = case.lam, case.rho
    if case.kind == "constant":
        return np.full(v.shape, lam)
    if case.kind == "shock":
        return np.where(v <= case.shock_speed, lam, rho)
    if case.kind == "rarefaction_fan":
        s0, s1 = float(G.derivative(lam)), float(G.derivative(rho))
        inner = inverse_speed(G, np.clip(v, min(s0, s1), max(s0, s1)), min(lam, rho), max(lam, rho))
        return np.where(v <= s0, lam, np.where(v >= s1, rho, inner))
    # contact: fan from lam to the tangent state, then a jump to rho at its characteristic speed
    w = case.tangent_state
    s0, s1 = float(G.derivative(lam)), float(G.derivative(w))
    inner = inverse_speed(G, np.clip(v, min(s0, s1), max(s0, s1)), min(lam, w), max(lam, w))
    return np.where(v <= s0, lam, np.where(v <= s1, inner, rho))


# distances to exact fans -------------------------------------------------------


def delta_to_fan(profile: PiecewiseConstantProfile, fan: RiemannFan, t: float, lo: float, hi: float) -> float:
    """sup over x in [lo, hi] of |integral_lo^x (profile - u(., t))|, evaluated exactly.

    The difference of primitives is piecewise smooth; its extrema lie at the
    profile's breakpoints, wave boundaries, or where the fan crosses a step value.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    cand = [lo, hi]
    pos = profile.positions
    cand.extend(pos[(pos > lo) & (pos < hi)].tolist())
    for w in fan.waves:
        cand.extend([w.speed_lo * t, w.speed_hi * t])
        if w.kind == "rarefaction":
            s_lo, s_hi = min(w.speed_lo, w.speed_hi), max(w.speed_lo, w.speed_hi)
            a, b = min(w.u_minus, w.u_plus), max(w.u_minus, w.u_plus)
            vals = np.asarray(profile.values)
            inside = vals[(vals > a) & (vals < b)]
            if inside.size:
                cand.extend((np.clip(fan.flux.derivative(inside), s_lo, s_hi) * t).tolist())
    x = np.unique(np.clip(np.asarray(cand, dtype=float), lo, hi))
    d = profile.primitive(x) - profile.primitive(lo) + profile.left * (x - lo) - fan.mass(lo, x, t)
    return float(np.max(np.abs(d)))


def fan_discontinuities(fan: RiemannFan) -> list[tuple[float, float, float]]:
    """(u_minus, u_plus, speed) for every jump of the fan."""
    return [(w.u_minus, w.u_plus, w.speed_lo) for w in fan.shocks]


def check_admissible(G: FluxFunction, jumps, tol: float = 1e-9) -> list[str]:
    """Oleinik and Rankine-Hugoniot checks; returns a list of failure descriptions."""
    bad = []
    for um, up, s in jumps:
        if um == up:
            continue
        if not oleinik_check(G, um, up, tol):
            bad.append(f"oleinik fails for ({um}, {up})")
        rh = rh_speed(G, um, up)
        if abs(rh - s) > tol * max(1.0, abs(rh)):
            bad.append(f"speed {s} differs from Rankine-Hugoniot {rh} for ({um}, {up})")
    return bad
