"""Lower convex / upper concave envelopes of a flux on an interval."""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .flux import FluxFunction

DEFAULT_GRID = 1e-4


@nb.njit(cache=True)
def lower_hull_indices(x, y):
    """Vertices of the lower hull of points sorted by x (monotone chain).

    A middle point is dropped unless the slope strictly increases across it,
    so collinear runs collapse to their endpoints.  Comparing slopes rather
    than cross products keeps the test consistent with front speeds.
    """
    n = x.shape[0]
    out = np.empty(n, dtype=np.int64)
    m = 0
    for k in range(n):
        while m >= 2:
            a = out[m - 2]
            b = out[m - 1]
            s1 = (y[b] - y[a]) / (x[b] - x[a])
            s2 = (y[k] - y[b]) / (x[k] - x[b])
            if s1 >= s2:
                m -= 1
            else:
                break
        out[m] = k
        m += 1
    return out[:m].copy()


@dataclass(frozen=True)
class EnvelopePiece:
    """Chord (affine hull piece) or arc (hull coincides with G) on [a, b]."""

    kind: str
    a: float
    b: float
    slope_a: float
    slope_b: float


@dataclass(frozen=True, eq=False)
class ConvexEnvelope:
    """G_c on [lo, hi]; for ``upper`` the concave envelope (stored as -lower(-G))."""

    flux: FluxFunction
    lo: float
    hi: float
    pieces: tuple
    upper: bool = False

    @property
    def breakpoints(self) -> np.ndarray:
        if not self.pieces:
            return np.array([self.lo])
        return np.array([self.pieces[0].a] + [p.b for p in self.pieces])

    @property
    def values(self) -> np.ndarray:
        return self(self.breakpoints)

    @property
    def v_low(self) -> float:
        """Slope at the left end (v_* for lower, the largest slope for upper)."""
        return self.pieces[0].slope_a if self.pieces else float(self.flux.derivative(self.lo))

    @property
    def v_high(self) -> float:
        return self.pieces[-1].slope_b if self.pieces else float(self.flux.derivative(self.hi))

    @property
    def derivative_range(self) -> tuple[float, float]:
        a, b = self.v_low, self.v_high
        return (min(a, b), max(a, b))

    @property
    def kinks(self) -> np.ndarray:
        """Theta: junctions where the one-sided slopes differ."""
        out = []
        for p, q in zip(self.pieces, self.pieces[1:]):
            if abs(q.slope_a - p.slope_b) > 1e-12 * (1 + abs(p.slope_b)):
                out.append(p.b)
        return np.array(out)

    @property
    def flat_slopes(self) -> np.ndarray:
        """Sigma_low: slopes of the maximal affine pieces (chords and affine arcs)."""
        return np.array([p.slope_a for p in self.pieces if p.kind == "chord"])

    @property
    def chords(self) -> list[EnvelopePiece]:
        return [p for p in self.pieces if p.kind == "chord"]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.array(self.flux(r), dtype=float)
        for p in self.chords:
            m = (r >= p.a) & (r <= p.b)
            ga = float(self.flux(p.a))
            out = np.where(m, ga + p.slope_a * (r - p.a), out)
        return out

    def derivative(self, r):
        """Right derivative of G_c."""
        r = np.asarray(r, dtype=float)
        out = np.array(self.flux.derivative(r), dtype=float)
        for p in self.chords:
            out = np.where((r >= p.a) & (r < p.b), p.slope_a, out)
        return out


def _newton_tangent(G: FluxFunction, a: float, b: float, free_a: bool, free_b: bool, lo: float, hi: float):
    """Refine a hull chord so that it is tangent to G at its free ends."""
    for _ in range(60):
        L = b - a
        if L <= 0:
            return None
        s = (G(b) - G(a)) / L
        ga, gb = float(G.derivative(a)), float(G.derivative(b))
        dsa = (s - ga) / L
        dsb = (gb - s) / L
        if free_a and free_b:
            f1, f2 = ga - s, gb - s
            j11 = float(G.second_derivative(a)) - dsa
            j12 = -dsb
            j21 = -dsa
            j22 = float(G.second_derivative(b)) - dsb
            det = j11 * j22 - j12 * j21
            if det == 0:
                return None
            da = (f1 * j22 - f2 * j12) / det
            db = (j11 * f2 - j21 * f1) / det
        elif free_a:
            d = float(G.second_derivative(a)) - dsa
            if d == 0:
                return None
            da, db = (ga - s) / d, 0.0
        elif free_b:
            d = float(G.second_derivative(b)) - dsb
            if d == 0:
                return None
            da, db = 0.0, (gb - s) / d
        else:
            return a, b
        a = min(max(a - da, lo), hi)
        b = min(max(b - db, lo), hi)
        if abs(da) + abs(db) < 1e-15:
            break
    if not (b > a):
        return None
    return a, b


def _lower_pieces(G: FluxFunction, lo: float, hi: float, grid: float) -> list[EnvelopePiece]:
    if G.kind == "table":
        inner = G.rhos[(G.rhos > lo) & (G.rhos < hi)]
        x = np.concatenate([[lo], inner, [hi]])
        y = G(x)
        v = lower_hull_indices(x, y)
        pieces = []
        for i, j in zip(v[:-1], v[1:]):
            s = float((y[j] - y[i]) / (x[j] - x[i]))
            pieces.append(EnvelopePiece("chord", float(x[i]), float(x[j]), s, s))
        return pieces

    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        # too short to grid: a single chord, exact up to the interval width
        s = float((G(hi) - G(lo)) / (hi - lo))
        return [EnvelopePiece("chord", lo, hi, s, s)]

    n = max(int(np.ceil((hi - lo) / grid)), 2) + 1
    x = np.linspace(lo, hi, n)
    y = G(x)
    v = lower_hull_indices(x, y)
    raw = []  # (kind, a, b, fixed_a, fixed_b)
    for i, j in zip(v[:-1], v[1:]):
        if j - i == 1:
            if raw and raw[-1][0] == "arc":
                raw[-1] = ("arc", raw[-1][1], float(x[j]))
            else:
                raw.append(("arc", float(x[i]), float(x[j])))
        else:
            raw.append(("chord", float(x[i]), float(x[j])))

    pieces: list[EnvelopePiece] = []
    for k, item in enumerate(raw):
        if item[0] == "arc":
            pieces.append(EnvelopePiece("arc", item[1], item[2], 0.0, 0.0))
            continue
        a, b = item[1], item[2]
        res = _newton_tangent(G, a, b, a > lo, b < hi, lo, hi)
        short = (b - a) <= 3 * grid
        if res is None or (short and np.all(G.second_derivative(np.linspace(a, b, 5)) >= -1e-9)):
            # a numerical chord across a convex stretch: really an arc
            pieces.append(EnvelopePiece("arc", a, b, 0.0, 0.0))
            continue
        pieces.append(EnvelopePiece("chord", res[0], res[1], 0.0, 0.0))

    # glue arcs to the refined chord endpoints and merge neighbouring arcs
    glued: list[list] = []
    for p in pieces:
        if p.kind == "arc" and glued and glued[-1][0] == "arc":
            glued[-1][2] = p.b
        else:
            glued.append([p.kind, p.a, p.b])
    for k in range(len(glued)):
        if glued[k][0] == "chord":
            if k > 0:
                glued[k - 1][2] = glued[k][1]
            if k + 1 < len(glued):
                glued[k + 1][1] = glued[k][2]
    out = []
    for kind, a, b in glued:
        if b - a <= 1e-14:
            continue
        if kind == "chord":
            s = float((G(b) - G(a)) / (b - a))
            out.append(EnvelopePiece("chord", a, b, s, s))
        else:
            out.append(EnvelopePiece("arc", a, b, float(G.derivative(a)), float(G.derivative(b))))
    return out


def lower_envelope(G: FluxFunction, lam: float, rho: float, grid: float = DEFAULT_GRID) -> ConvexEnvelope:
    """Lower convex envelope of G on [lam, rho] (lam <= rho)."""
    lo, hi = float(lam), float(rho)
    if hi < lo:
        raise ValueError("lower_envelope needs lam <= rho; use upper_envelope otherwise")
    if hi == lo:
        return ConvexEnvelope(G, lo, hi, ())
    return ConvexEnvelope(G, lo, hi, tuple(_lower_pieces(G, lo, hi, grid)))


def upper_envelope(G: FluxFunction, lo: float, hi: float, grid: float = DEFAULT_GRID) -> ConvexEnvelope:
    """Upper concave envelope of G on [lo, hi], via the lower envelope of -G."""
    lo, hi = float(lo), float(hi)
    if hi < lo:
        raise ValueError("upper_envelope needs lo <= hi")
    if hi == lo:
        return ConvexEnvelope(G, lo, hi, (), upper=True)
    pieces = tuple(
        EnvelopePiece(p.kind, p.a, p.b, -p.slope_a, -p.slope_b) for p in _lower_pieces(G.negated(), lo, hi, grid)
    )
    return ConvexEnvelope(G, lo, hi, pieces, upper=True)


def envelope(G: FluxFunction, lam: float, rho: float, grid: float = DEFAULT_GRID) -> ConvexEnvelope:
    """Envelope that drives the Riemann problem (lam, rho): lower if lam <= rho, else upper."""
    if lam <= rho:
        return lower_envelope(G, lam, rho, grid)
    return upper_envelope(G, rho, lam, grid)


def grid_hull(G: FluxFunction, lo: float, hi: float, grid: float = DEFAULT_GRID, upper: bool = False):
    """Dense-grid hull (x, G_c(x)) used as a brute-force reference."""
    n = max(int(np.ceil((hi - lo) / grid)), 2) + 1
    x = np.linspace(lo, hi, n)
    y = G(x)
    yy = -y if upper else y
    v = lower_hull_indices(x, yy)
    return x, np.interp(x, x[v], y[v])
