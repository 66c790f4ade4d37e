"""Complex-plane numerics: Julia rasters, Boettcher angles, polynomial-like domains."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedJulia, DomainsNotFound, NotRenormalizable
from .maps import EvenPolynomial, IterateSegment, MultimodalMap, composite_polynomial
from .numeric import bisect

ESCAPED_NEVER = -1
CRIT_HORIZON = 500
ELLIPSE_RANGE = (1.05, 4.0)
ELLIPSE_STEPS = 16
TRACE_STEPS = 512  # continuation steps per turn of the outer curve
NEWTON_ITERS = 8
# deep tower levels evaluate with a roundoff floor near 1e-10
TRACE_TOL = 1e-8


@dataclass(frozen=True)
class ComplexPolynomial:
    """Composite of the factors as a single polynomial of degree 2^N."""

    coeffs: tuple  # ascending powers
    n_type: int

    @classmethod
    def from_map(cls, f: MultimodalMap) -> "ComplexPolynomial":
        return cls(tuple(float(c) for c in composite_polynomial(f).coef), f.n_type)

    @classmethod
    def from_family(cls, bs) -> "ComplexPolynomial":
        """Composite of x -> b x^2 - b - 1 without the parameter range check."""
        P = np.polynomial.Polynomial
        acc = P([0.0, 1.0])
        for b in bs:
            acc = P([-b - 1.0, 0.0, b])(acc)
        return cls(tuple(float(c) for c in acc.coef), len(bs))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def leading(self):
        return self.coeffs[-1]

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def derivative(self, z):
        return np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(self.coeffs))

    def critical_points(self):
        return np.polynomial.polynomial.polyroots(np.polynomial.polynomial.polyder(self.coeffs))

    def escape_radius(self) -> float:
        """Past this radius every orbit increases monotonically to infinity."""
        a = abs(self.leading)
        bound = 2 * (1 + max(abs(c) for c in self.coeffs))
        return max(bound, 2 * (1 + sum(abs(c) for c in self.coeffs[:-1])) / min(a, 1.0))

    def connected(self, horizon: int = CRIT_HORIZON) -> bool:
        R = self.escape_radius()
        z = np.asarray(self.critical_points(), dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(horizon):
                z = self(z)
                if not np.all(np.abs(z) <= R):
                    return False
        return True


@dataclass(frozen=True)
class RasterGrid:
    center: complex
    width: float
    height: float
    nx: int
    ny: int
    escape_radius: float
    max_iter: int

    def points(self):
        xs = self.center.real + (np.arange(self.nx) + 0.5) / max(self.nx, 1) * self.width - self.width / 2
        ys = self.center.imag + (np.arange(self.ny) + 0.5) / max(self.ny, 1) * self.height - self.height / 2
        return xs[None, :] + 1j * ys[:, None]

    @classmethod
    def around(cls, P: ComplexPolynomial, center=0j, width=4.0, height=4.0, n=200, max_iter=200):
        return cls(complex(center), width, height, n, n, P.escape_radius(), max_iter)


def julia_raster(P: ComplexPolynomial, grid: RasterGrid) -> np.ndarray:
    """First iterate beyond the escape radius per pixel; ESCAPED_NEVER when bounded."""
    if grid.escape_radius < 2 * (1 + max(abs(c) for c in P.coeffs)):
        raise ValueError("escape radius below the monotone-escape bound")
    z = grid.points().astype(complex)
    out = np.full(z.shape, ESCAPED_NEVER, dtype=np.int64)
    if z.size == 0:
        return out
    alive = np.abs(z) <= grid.escape_radius
    out[~alive] = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, grid.max_iter + 1):
            idx = np.nonzero(alive)
            if idx[0].size == 0:
                break
            w = P(z[idx])
            z[idx] = w
            esc = ~(np.abs(w) <= grid.escape_radius)
            out[idx[0][esc], idx[1][esc]] = n
            alive[idx[0][esc], idx[1][esc]] = False
    return out


def raster_csv(P: ComplexPolynomial, grid: RasterGrid) -> str:
    r = julia_raster(P, grid)
    pts = grid.points()
    lines = ["x,y,escape_time"]
    for i in range(r.shape[0]):
        for j in range(r.shape[1]):
            lines.append(f"{pts[i, j].real!r},{pts[i, j].imag!r},{int(r[i, j])}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- Boettcher
def _monic_scale(P: ComplexPolynomial) -> float:
    a = P.leading
    return math.copysign(abs(a) ** (1 / (P.degree - 1)), a)


def boettcher(P: ComplexPolynomial, z, max_terms: int = 60):
    """Boettcher coordinate tangent to the identity at infinity, after the
    affine change making P monic."""
    d = P.degree
    mu = _monic_scale(P)
    w = mu * np.asarray(z, dtype=complex)
    phi = w.copy()
    cur = w
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(max_terms):
            nxt = mu * P(cur / mu)
            ratio = nxt / cur ** d
            phi = phi * ratio ** (1.0 / d ** (n + 1))
            cur = nxt
            if np.all(np.abs(cur) > 1e60):
                break
    return phi


@dataclass(frozen=True)
class ExternalSamples:
    pairs: tuple  # (theta_in, theta_out)
    degree: int
    winding: int
    potential: float

    def max_deviation(self) -> float:
        dev = 0.0
        for t, s in self.pairs:
            e = (s - (self.degree * t) % 1.0) % 1.0
            dev = max(dev, min(e, 1 - e))
        return dev

    def to_csv(self) -> str:
        return "theta_in,theta_out\n" + "".join(f"{a!r},{b!r}\n" for a, b in self.pairs)


def _ray_point(P: ComplexPolynomial, target: complex, guess: complex):
    """Newton for boettcher(z) = target."""
    z = guess
    for _ in range(50):
        val = boettcher(P, z)
        h = 1e-7 * max(abs(z), 1.0)
        der = (boettcher(P, z + h) - boettcher(P, z - h)) / (2 * h)
        step = (val - target) / der
        z = z - step
        if abs(step) <= 1e-15 * abs(z):
            break
    return complex(z)


def external_map_samples(P: ComplexPolynomial, count: int = 256,
                         potential: float = 2.0) -> ExternalSamples:
    """Angles of points on the equipotential |phi| = e^potential and of their images."""
    if not P.connected():
        raise DisconnectedJulia("a critical orbit escapes", coeffs=list(P.coeffs))
    mu = _monic_scale(P)
    rad = math.exp(potential)
    pairs = []
    for i in range(count):
        t = i / count
        target = rad * np.exp(2j * np.pi * t)
        z = _ray_point(P, target, target / mu)
        t_in = (np.angle(boettcher(P, z)) / (2 * np.pi)) % 1.0
        t_out = (np.angle(boettcher(P, P(z))) / (2 * np.pi)) % 1.0
        pairs.append((float(t_in), float(t_out)))
    # lift of theta_out along the closed sample loop
    outs = [s for _, s in pairs] + [pairs[0][1]]
    lift = 0.0
    for a, b in zip(outs, outs[1:]):
        step = (b - a + 0.5) % 1.0 - 0.5
        lift += step
    return ExternalSamples(tuple(pairs), P.degree, int(round(lift)), potential)


# ------------------------------------------------------ polynomial-like maps
def complex_jet(fac, z):
    """Value and first derivative of a factor on complex arrays."""
    if isinstance(fac, EvenPolynomial):
        v, d1, _ = fac.jet(z)
        return v, d1
    if isinstance(fac, IterateSegment):
        a = fac.inbound
        y, d = a(z), a.scale
        facs = fac.base.factors
        n = fac.base.n_type
        for s in range(fac.count):
            y, dy = complex_jet(facs[(fac.start + s) % n], y)
            d = d * dy
        return fac.outbound(y), fac.outbound.scale * d
    raise TypeError(f"cannot evaluate {type(fac).__name__} on complex input")


def map_jet(g: MultimodalMap, z):
    """The full composite g_{N-1} o ... o g_0 and its derivative."""
    d = 1.0
    for fac in g.factors:
        z, dz = complex_jet(fac, z)
        d = d * dz
    return z, d


@dataclass(frozen=True)
class Domains:
    U: tuple  # polygon vertices of the inner boundary
    V: tuple  # ellipse semi-axes
    degree: int
    r_inner: float
    r_outer: float

    @property
    def modulus_bound(self) -> float:
        if self.r_outer <= self.r_inner:
            return 0.0
        return math.log(self.r_outer / self.r_inner) / (2 * math.pi)

    def to_dict(self):
        return {"U": [[z.real, z.imag] for z in self.U], "V": list(self.V),
                "degree": self.degree, "r_inner": self.r_inner, "r_outer": self.r_outer,
                "modulus_bound": self.modulus_bound}


def winding_number(curve, w=0j) -> int:
    c = np.asarray(curve, dtype=complex) - w
    ang = np.angle(np.concatenate([c[1:], c[:1]]) / c)
    return int(round(float(np.sum(ang)) / (2 * np.pi)))


def _start_points(g: MultimodalMap, axes, reach: float = 8.0, cells: int = 4096):
    """First real preimage x > 1 of each leftmost ellipse point -a, or nan."""
    xs = np.linspace(1.0, reach, cells + 1)
    with np.errstate(all="ignore"):
        ys = map_jet(g, xs.astype(complex))[0].real
    G = lambda x: float(map_jet(g, complex(x))[0].real)
    out = []
    for a in axes:
        below = np.nonzero(ys[1:] <= -a)[0]
        if below.size == 0:
            out.append(np.nan)
            continue
        i = below[0] + 1
        out.append(bisect(lambda x: G(x) + a, xs[i - 1], xs[i]))
    return np.array(out, dtype=complex)


def trace_inner_boundaries(g: MultimodalMap, a, b, steps_per_turn: int = TRACE_STEPS):
    """Lift the ellipses (a, b) through g, d turns each, all candidates at once.

    Returns (curves, ok) with curves of shape (len(a), d * steps_per_turn)."""
    d = 2 ** g.n_type
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    z = _start_points(g, a)
    start = z.copy()
    M = d * steps_per_turn
    curves = np.empty((a.size, M), dtype=complex)
    ok = np.isfinite(z)
    with np.errstate(all="ignore"):
        for i in range(M):
            th = np.pi + 2 * np.pi * (i + 1) / steps_per_turn
            tgt = a * np.cos(th) + 1j * b * np.sin(th)
            tol = TRACE_TOL * (1 + np.abs(tgt))
            for _ in range(NEWTON_ITERS):
                v, dv = map_jet(g, z)
                res = np.abs(v - tgt)
                if np.all((res <= tol) | ~ok):
                    break
                z = z - (v - tgt) / dv
            ok &= res <= tol
            curves[:, i] = z
    closes = np.abs(curves[:, -1] - start) <= 1e-7 * (1 + np.abs(start))
    return curves, ok & closes


def _check_candidate(g, curve, a, b, d):
    if winding_number(curve) != 1:
        return False
    if np.any((curve.real / a) ** 2 + (curve.imag / b) ** 2 >= 1 - 1e-9):
        return False
    image = map_jet(g, curve)[0]
    return winding_number(image) == d


def polylike_domains(g: MultimodalMap, axes_range=ELLIPSE_RANGE, steps: int = ELLIPSE_STEPS,
                     steps_per_turn: int = TRACE_STEPS) -> Domains:
    """Best ellipse V about [-1, 1] whose preimage component U about 0 is
    compactly inside V with degree 2^N; best means largest round-annulus bound."""
    d = 2 ** g.n_type
    grid = np.geomspace(axes_range[0], axes_range[1], steps)
    A, B = np.meshgrid(grid, grid, indexing="ij")
    A, B = A.ravel(), B.ravel()
    curves, ok = trace_inner_boundaries(g, A, B, steps_per_turn)
    best, best_seen = None, None
    for i in range(A.size):
        # samples can miss the farthest boundary point by half a segment
        seg = np.abs(np.diff(np.append(curves[i], curves[i][:1])))
        r1 = float(np.max(np.abs(curves[i])) + np.max(seg) / 2)
        cand = Domains(tuple(curves[i]), (float(A[i]), float(B[i])), d, r1,
                       float(min(A[i], B[i])))
        if best_seen is None or cand.modulus_bound > best_seen.modulus_bound:
            best_seen = cand
        if not ok[i] or not _check_candidate(g, curves[i], A[i], B[i], d):
            continue
        if best is None or cand.modulus_bound > best.modulus_bound:
            best = cand
    if best is None:
        raise DomainsNotFound("no ellipse candidate passed the degree and nesting checks",
                              best=best_seen and best_seen.V)
    return best


def tower_domains(f: MultimodalMap, level: int, max_period=None, **kw) -> Domains:
    """polylike_domains for the level-th renormalization of f."""
    from .renorm import level_map, renorm_tower
    if level == 0:
        return polylike_domains(f, **kw)
    try:
        tower = renorm_tower(f, level, max_period)
    except NotRenormalizable as e:
        raise DomainsNotFound("map is not renormalizable", level=level) from e
    if len(tower) < level:
        raise DomainsNotFound("tower too shallow", level=level, depth=len(tower))
    return polylike_domains(level_map(tower, level), **kw)


@dataclass(frozen=True)
class AnnulusBound:
    value: object  # float or "unbounded"
    inner: object = None
    outer: object = None
    diagnostic: str = ""

    def to_dict(self):
        return {"value": self.value, "inner_radius": self.inner, "outer_radius": self.outer,
                "diagnostic": self.diagnostic}


def round_annulus_bound(r_inner: float, r_outer: float) -> AnnulusBound:
    if r_outer <= r_inner:
        return AnnulusBound(0.0, r_inner, r_outer, "outer radius does not exceed inner radius")
    return AnnulusBound(math.log(r_outer / r_inner) / (2 * math.pi), r_inner, r_outer)


def modulus_lower_bound(obj, **kw) -> AnnulusBound:
    """'unbounded' for a polynomial, else the round-annulus bound of its domains."""
    if isinstance(obj, ComplexPolynomial):
        return AnnulusBound("unbounded", diagnostic="polynomial")
    if isinstance(obj, Domains):
        return round_annulus_bound(obj.r_inner, obj.r_outer)
    dom = polylike_domains(obj, **kw)
    return round_annulus_bound(dom.r_inner, dom.r_outer)
