"""The extended map F(x, j) = (f_j(x), j + 1 mod N) and its entry structure."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import EntryNotFound, NoOrientationReversingFixedPoint, OrbitEscape, PullbackDegenerate
from .maps import EVAL_TOL, MultimodalMap, evaluate, validate
from .numeric import isolate_roots, to_real, unit_roundoff, workprec
from .errors import ValidationFailure

ROOT_CELLS = 4096


@dataclass(frozen=True)
class FiberPoint:
    x: float
    fiber: int = 0


@dataclass(frozen=True)
class FiberInterval:
    lo: float
    hi: float
    fiber: int = 0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    @classmethod
    def symmetric(cls, r, fiber=0):
        r = abs(r)
        return cls(-r, r, fiber)

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def center(self):
        return (self.lo + self.hi) / 2

    @property
    def is_symmetric(self):
        return abs(self.lo + self.hi) <= 1e-9 * self.length

    def contains(self, x, fiber=None) -> bool:
        if fiber is not None and fiber != self.fiber:
            return False
        return self.lo < x < self.hi

    def contains_interval(self, other: "FiberInterval", tol=0.0) -> bool:
        return (other.fiber == self.fiber and other.lo >= self.lo - tol
                and other.hi <= self.hi + tol)

    def close_to(self, other: "FiberInterval", tol) -> bool:
        return (other.fiber == self.fiber and abs(other.lo - self.lo) <= tol
                and abs(other.hi - self.hi) <= tol)

    def to_dict(self):
        return {"lo": float(self.lo), "hi": float(self.hi), "fiber": self.fiber}


@dataclass(frozen=True)
class ExtendedMap:
    base: MultimodalMap
    alpha: float
    beta: float

    @property
    def n_type(self):
        return self.base.n_type

    @property
    def bits(self):
        return self.base.precision_bits

    @property
    def I0(self) -> FiberInterval:
        return FiberInterval.symmetric(self.alpha, 0)

    def step(self, x, fiber):
        return self.base.factors[fiber].value(x), (fiber + 1) % self.n_type

    def critical_points(self):
        z = to_real(0, self.bits)
        return [FiberPoint(z, j) for j in range(self.n_type)]


@dataclass(frozen=True)
class Entry:
    k: int
    point: FiberPoint
    index: int  # which component of B was entered


@dataclass(frozen=True)
class Chain:
    """Pullbacks of a target along an orbit. ``intervals[s]`` is the pullback
    of the target by k - s steps, so F maps
    intervals[s] into intervals[s + 1] and intervals[k] is the target."""

    intervals: tuple
    orbit: tuple

    @property
    def depth(self):
        return len(self.intervals) - 1

    def critical_hits(self):
        """Indices s with a critical point inside intervals[s]."""
        return [s for s, g in enumerate(self.intervals) if g.lo < 0 < g.hi]


@dataclass(frozen=True)
class NiceVerdict:
    nice: bool
    horizon: int
    witness_k: int | None = None

    def to_dict(self):
        d = {"verdict": "nice-up-to-horizon" if self.nice else "not-nice", "horizon": self.horizon}
        if self.witness_k is not None:
            d["witness_k"] = self.witness_k
        return d


def _fixed_point_scan(f: MultimodalMap):
    bits = f.precision_bits
    g_vec = lambda xs: f.iterate(xs, 0, f.n_type) - xs
    with workprec(bits):
        g = lambda x: f.iterate(x, 0, f.n_type) - x
        return isolate_roots(g_vec, g, 0.0, 1.0, ROOT_CELLS, bits)


def extend(f: MultimodalMap) -> ExtendedMap:
    rep = validate(f)
    if not rep.ok:
        raise ValidationFailure(f"map fails validation: {rep.failures()}")
    bits = f.precision_bits
    roots = _fixed_point_scan(f)
    with workprec(bits):
        cands = [z for z in roots if 0 < z < 1 and evaluate(f, z, 1) < 0]
        if not cands:
            raise NoOrientationReversingFixedPoint(
                "no fixed point in (0,1) with negative derivative",
                scan=[float(z) for z in roots])
        alpha = min(cands)
        pre = []
        for target in (alpha, -alpha):
            g_vec = lambda xs, t=target: f.iterate(xs, 0, f.n_type) - t
            g = lambda x, t=target: f.iterate(x, 0, f.n_type) - t
            pre += isolate_roots(g_vec, g, -1.0, 1.0, ROOT_CELLS, bits)
        beta = min(pre, key=lambda x: abs(x + 1)) if pre else -alpha
    return ExtendedMap(f, alpha, beta)


def eval_extended(F: ExtendedMap, p: FiberPoint, n: int, tol: float = EVAL_TOL) -> FiberPoint:
    x, j = p.x, p.fiber
    with workprec(F.bits):
        for s in range(n):
            x, j = F.step(x, j)
            if not abs(x) <= 1 + tol:
                raise OrbitEscape(f"orbit left the fiber interval at step {s + 1}", step=s + 1)
    return FiberPoint(x, j)


def orbit(F: ExtendedMap, p: FiberPoint, n: int):
    pts = [p]
    x, j = p.x, p.fiber
    with workprec(F.bits):
        for _ in range(n):
            x, j = F.step(x, j)
            pts.append(FiberPoint(x, j))
    return pts


def orbit_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "fiber", "x"])
    for s, p in enumerate(points):
        w.writerow([s, p.fiber, repr(float(p.x))])
    return buf.getvalue()


def _locate(B, x, j):
    for i, comp in enumerate(B):
        if comp.fiber == j and comp.lo < x < comp.hi:
            return i
    return None


def first_entry(F: ExtendedMap, B, x: FiberPoint, horizon: int):
    """Smallest k in 1..horizon with F^k(x) in B (first return when x is in B)."""
    if not B:
        raise ValueError("target set is empty")
    xv, j = x.x, x.fiber
    with workprec(F.bits):
        for k in range(1, horizon + 1):
            xv, j = F.step(xv, j)
            if not abs(xv) <= 1 + EVAL_TOL:
                raise OrbitEscape(f"orbit left the fiber interval at step {k}", step=k)
            i = _locate(B, xv, j)
            if i is not None:
                return Entry(k, FiberPoint(xv, j), i)
    return None


def pullback_step(factor, lo, hi, seed, bits, fiber):
    """Component containing ``seed`` of factor^{-1}((lo, hi))."""
    v = factor.critical_value
    if lo >= v:
        raise PullbackDegenerate("target lies above the critical value")
    h_lo = to_real(1, bits) if lo <= -1 else factor.inverse_right(lo, bits)
    if hi > v:
        a, b = -h_lo, h_lo
    else:
        h_hi = factor.inverse_right(hi, bits)
        a, b = (h_hi, h_lo) if seed >= 0 else (-h_lo, -h_hi)
    if not b - a > 8 * unit_roundoff(bits) * max(1, abs(a), abs(b)):
        raise PullbackDegenerate("pullback component below working precision",
                                 interval=(float(a), float(b)))
    return FiberInterval(a, b, fiber)


def pullback_chain(F: ExtendedMap, x: FiberPoint, k: int, target: FiberInterval) -> Chain:
    """Pull ``target`` back along the orbit of x for k steps."""
    pts = orbit(F, x, k)
    if not target.contains(pts[-1].x, pts[-1].fiber):
        raise EntryNotFound("orbit does not land in the target")
    out = [target]
    with workprec(F.bits):
        g = target
        for s in range(k - 1, -1, -1):
            p = pts[s]
            g = pullback_step(F.base.factors[p.fiber], g.lo, g.hi, p.x, F.bits, p.fiber)
            out.append(g)
    out.reverse()
    return Chain(tuple(out), tuple(pts))


def landing_component(F: ExtendedMap, B, x: FiberPoint, horizon: int) -> FiberInterval:
    """Component around x of the first-entry domain of the nice set B."""
    e = first_entry(F, B, x, horizon)
    if e is None:
        raise EntryNotFound(f"no entry within horizon {horizon}", horizon=horizon)
    return pullback_chain(F, x, e.k, B[e.index]).intervals[0]


def landing_with_time(F: ExtendedMap, B, x: FiberPoint, horizon: int):
    e = first_entry(F, B, x, horizon)
    if e is None:
        raise EntryNotFound(f"no entry within horizon {horizon}", horizon=horizon)
    return pullback_chain(F, x, e.k, B[e.index]).intervals[0], e


def is_nice(F: ExtendedMap, B, horizon: int, tol: float = 1e-9) -> NiceVerdict:
    """Boundary orbits must avoid B.  An orbit that lands on a boundary point of
    B is no longer followed, since its future is that boundary point's."""
    bdry = [(c.lo, c.fiber) for c in B] + [(c.hi, c.fiber) for c in B]
    scale = max(c.length for c in B)
    eps = tol * scale
    first_bad = None
    with workprec(F.bits):
        for x, j in bdry:
            for k in range(1, horizon + 1):
                x, j = F.step(x, j)
                if any(jj == j and abs(x - y) <= eps for y, jj in bdry):
                    break
                if any(c.fiber == j and c.lo + eps < x < c.hi - eps for c in B):
                    if first_bad is None or k < first_bad:
                        first_bad = k
                    break
    if first_bad is None:
        return NiceVerdict(True, horizon)
    return NiceVerdict(False, horizon, first_bad)


def iterate_derivative(F: ExtendedMap, x, fiber: int, count: int):
    """(F^count)'(x) on the given fiber, by the chain rule."""
    d = 1
    with workprec(F.bits):
        for s in range(count):
            fac = F.base.factors[(fiber + s) % F.n_type]
            _, d1, _ = fac.jet(x)
            d = d * d1
            x = fac.value(x)
    return d
