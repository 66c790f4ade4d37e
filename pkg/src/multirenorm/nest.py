"""Principal nest, central cascades, Yoccoz profiles and the enhanced nest."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .boxmap import (ExtendedMap, FiberInterval, FiberPoint, first_entry, iterate_derivative,
                     landing_with_time, orbit, pullback_chain)
from .errors import EntryNotFound, NoSuccessor, NuNotFound, PullbackDegenerate
from .numeric import isolate_roots, to_real, workprec

SUPERSTABLE_TOL = 1e-9
SAME_TOL = 1e-9
# landing components within this relative distance of the level but not equal
# to it cannot be told apart from roundoff
AMBIGUOUS_TOL = 1e-6
SCAN_POINTS = 1024
DESCENT_CELLS = 512


@dataclass(frozen=True)
class PrincipalNest:
    levels: tuple
    return_times: tuple  # first return time of the critical point to each level (when it exists)
    return_points: tuple
    kinds: tuple  # "base", "landing" or "descent"
    status: str
    horizon: int

    @property
    def scaling_factors(self):
        return tuple(float(a.length / b.length) for a, b in zip(self.levels, self.levels[1:]))

    @property
    def depth(self):
        return len(self.levels) - 1

    def central(self, k) -> bool:
        """Whether the critical return to level k lands in level k + 1."""
        return self.levels[k + 1].contains(self.return_points[k].x, self.return_points[k].fiber)

    def non_central_moments(self):
        return [k + 1 for k in range(len(self.levels) - 1)
                if k < len(self.return_points) and not self.central(k)]

    def first_periodic_level(self):
        """Index of the first level whose landing component is itself."""
        for k in range(1, len(self.kinds)):
            if self.kinds[k] == "descent":
                return k - 1
        if self.status in ("periodic", "superstable"):
            return len(self.levels) - 1
        return None

    def to_dict(self):
        return {
            "levels": [iv.to_dict() for iv in self.levels],
            "kinds": list(self.kinds),
            "return_times": list(self.return_times),
            "scaling": list(self.scaling_factors),
            "moments": self.non_central_moments(),
            "height": len(self.non_central_moments()),
            "status": self.status,
            "horizon": self.horizon,
        }


def orientation_reversing_fixed_point(F: ExtendedMap, I: FiberInterval, r: int):
    """Smallest |x| over interior x of I with F^r(x) = x and (F^r)'(x) < 0, or None."""
    bits = F.bits
    f = F.base
    g_vec = lambda xs: f.iterate(xs, I.fiber, r) - xs
    with workprec(bits):
        g = lambda x: f.iterate(x, I.fiber, r) - x
        roots = isolate_roots(g_vec, g, float(I.lo), float(I.hi), DESCENT_CELLS, bits)
        cands = [abs(z) for z in roots if 0 < abs(z) < I.hi * (1 - 1e-12)
                 and iterate_derivative(F, z, I.fiber, r) < 0]
    return min(cands) if cands else None


def principal_nest(F: ExtendedMap, depth: int, horizon: int | None = None) -> PrincipalNest:
    """Base interval from the fixed point, then landing components of the critical point.

    When that landing component equals the current level, that level is
    a periodic interval; the nest then continues inside it from the
    orientation-reversing fixed point of the return map closest to 0.
    """
    c0 = F.critical_points()[0]
    levels, kinds, rts, rps = [F.I0], ["base"], [], []
    status = "depth-reached"
    hz = horizon or 64
    for _ in range(depth + 1):
        I = levels[-1]
        e = first_entry(F, [I], c0, hz)
        if e is None:
            if len(levels) == 1:
                raise EntryNotFound(f"critical orbit does not return to I_0 within {hz}",
                                    horizon=hz)
            status = "no-return"
            break
        rts.append(e.k)
        rps.append(e.point)
        if len(levels) == depth + 1:
            break
        if abs(e.point.x) <= SUPERSTABLE_TOL * I.length:
            status = "superstable"
            break
        try:
            L = pullback_chain(F, c0, e.k, I).intervals[0]
        except PullbackDegenerate:
            status = "precision-exhausted"
            break
        if not L.close_to(I, SAME_TOL * I.length) and L.close_to(I, AMBIGUOUS_TOL * I.length):
            status = "precision-exhausted"
            break
        if L.close_to(I, SAME_TOL * I.length):
            a = orientation_reversing_fixed_point(F, I, e.k)
            if a is None:
                status = "periodic"
                break
            levels.append(FiberInterval.symmetric(a, I.fiber))
            kinds.append("descent")
        else:
            levels.append(L)
            kinds.append("landing")
        if horizon is None:
            hz = max(64, 10 * e.k)
    return PrincipalNest(tuple(levels), tuple(rts), tuple(rps), tuple(kinds), status, hz)


@dataclass(frozen=True)
class Cascade:
    start: int
    end: int
    kind: str  # "saddle-node-like" or "other"

    @property
    def length(self):
        return self.end - self.start


@dataclass(frozen=True)
class CascadeDecomposition:
    cascades: tuple
    non_central_moments: tuple

    @property
    def height(self):
        return len(self.non_central_moments)

    def to_dict(self):
        return {"cascades": [[c.start, c.end, c.kind] for c in self.cascades],
                "moments": list(self.non_central_moments), "height": self.height}


def has_fixed_point(F: ExtendedMap, I: FiberInterval, r: int, points: int = SCAN_POINTS) -> bool:
    xs = np.linspace(float(I.lo), float(I.hi), points + 2)[1:-1]
    ys = F.base.iterate(xs, I.fiber, r) - xs
    s = np.sign(ys)
    return bool(np.any(s == 0) or np.any(s[:-1] * s[1:] < 0))


def cascade_decomposition(F: ExtendedMap, nest: PrincipalNest) -> CascadeDecomposition:
    if len(nest.levels) < 2:
        return CascadeDecomposition((), ())
    moments = nest.non_central_moments()
    bounds = [0] + moments
    last = len(nest.levels) - 1
    if bounds[-1] < last:
        bounds.append(last)
    out = []
    for a, b in zip(bounds, bounds[1:]):
        kind = "other"
        if b - a >= 2:
            if not has_fixed_point(F, nest.levels[a + 1], nest.return_times[a]):
                kind = "saddle-node-like"
        out.append(Cascade(a, b, kind))
    return CascadeDecomposition(tuple(out), tuple(moments))


@dataclass(frozen=True)
class YoccozProfile:
    rows: tuple  # (j, rho_j, normalized)
    eta: float

    @property
    def total(self):
        return sum(r for _, r, _ in self.rows)

    @property
    def within_band(self) -> bool:
        return all(1 / self.eta <= v <= self.eta for _, _, v in self.rows)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j", "ratio", "normalized"])
        for j, r, v in self.rows:
            w.writerow([j, repr(float(r)), repr(float(v))])
        return buf.getvalue()


def yoccoz_profile(levels, eta: float = 20.0) -> YoccozProfile:
    """Annulus ratios along a nested cascade, outermost first."""
    L = len(levels)
    if L < 4:
        raise ValueError("need at least four cascade levels")
    top = levels[0].length
    rows = []
    for j in range(1, L):
        rho = (levels[j - 1].length - levels[j].length) / top
        rows.append((j, float(rho), float(rho * min(j, L - j) ** 2)))
    return YoccozProfile(tuple(rows), eta)


def limit_scaling_estimate(*nests) -> dict:
    vals = [s for n in nests for s in n.scaling_factors]
    if not vals:
        raise ValueError("no scaling factors available")
    return {"value": max(vals), "label": "enumerated lower bound", "intervals": len(vals)}


# ------------------------------------------------------------ enhanced nest
def _crit_in(iv: FiberInterval) -> bool:
    return iv.lo < 0 < iv.hi


def _lhat(F, T: FiberInterval, x: FiberPoint, horizon: int):
    """(component of D_T or T containing x, time mapping it into T)."""
    if T.contains(x.x, x.fiber):
        return T, 0
    L, e = landing_with_time(F, [T], x, horizon)
    return L, e.k


def successor(F: ExtendedMap, T: FiberInterval, horizon: int = 64, with_depth: bool = False):
    """Smallest successor of T, by length; ties go to the earliest found."""
    c = FiberPoint(to_real(0, F.bits), T.fiber)
    best = None
    for cp in F.critical_points():
        try:
            T1, k1 = _lhat(F, T, cp, horizon)
        except EntryNotFound:
            continue
        pts = orbit(F, c, horizon)
        for n in range(1, horizon + 1):
            if not T1.contains(pts[n].x, pts[n].fiber):
                continue
            try:
                ch = pullback_chain(F, c, n, T1)
            except PullbackDegenerate:
                continue
            hits = [s for s in range(1, n) if _crit_in(ch.intervals[s])]
            last = max(hits) if hits else 0
            for e in range(last, n):
                kid = ch.intervals[e]
                if kid.contains(c.x, c.fiber):
                    cand, kc = kid, 0
                else:
                    try:
                        cand, kc = _lhat(F, kid, c, horizon)
                    except (EntryNotFound, PullbackDegenerate):
                        continue
                if not T.contains_interval(cand, SAME_TOL * T.length) \
                        or cand.close_to(T, SAME_TOL * T.length):
                    continue
                depth = kc + (n - e) + k1
                if best is None or cand.length < best[0].length * (1 - SAME_TOL):
                    best = (cand, depth)
    if best is None:
        best = _periodic_descent(F, T, c, horizon)
    if best is None:
        raise NoSuccessor(f"no successor within horizon {horizon}", horizon=horizon)
    return best if with_depth else best[0]


def _periodic_descent(F, T, c, horizon):
    """For a periodic T every pullback along the critical orbit is T itself;
    the chain then continues at the next scale, inside the orientation-reversing
    fixed point of the return map.  Its depth is the return time."""
    e = first_entry(F, [T], c, horizon)
    if e is None or abs(e.point.x) <= SUPERSTABLE_TOL * T.length:
        return None
    try:
        L = pullback_chain(F, c, e.k, T).intervals[0]
    except PullbackDegenerate:
        return None
    if not L.close_to(T, SAME_TOL * T.length):
        return None
    a = orientation_reversing_fixed_point(F, T, e.k)
    return None if a is None else (FiberInterval.symmetric(a, T.fiber), e.k)


def omega_samples(F: ExtendedMap, start: int, count: int):
    pts = orbit(F, F.critical_points()[0], start + count)
    return pts[start:]


def admissible_return(F: ExtendedMap, T: FiberInterval, omega, horizon: int):
    """Smallest nu meeting the critical-count and omega-containment rules.

    Returns (nu, H, G, time from G into T)."""
    N = F.n_type
    c = FiberPoint(to_real(0, F.bits), T.fiber)
    pts = orbit(F, c, horizon)
    for v in range(1, horizon + 1):
        x = pts[v]
        if not T.contains(x.x, x.fiber):
            continue
        try:
            ch = pullback_chain(F, c, v, T)
        except PullbackDegenerate:
            continue
        hits = sum(1 for s in range(v) if _crit_in(ch.intervals[s]))
        if hits > N * N:
            continue
        H = ch.intervals[0]
        try:
            L, kl = landing_with_time(F, [T], x, horizon)
            G = pullback_chain(F, c, v, L).intervals[0]
        except (EntryNotFound, PullbackDegenerate):
            continue
        inside = [p for p in omega if H.contains(p.x, p.fiber)]
        if all(G.contains(p.x, p.fiber) for p in inside):
            return v, H, G, v + kl.k
    raise NuNotFound(f"no admissible nu within horizon {horizon}", horizon=horizon)


@dataclass(frozen=True)
class EnhancedNestReport:
    E_levels: tuple
    r: tuple
    m: tuple
    chi: int | None
    Np: int
    horizon: int
    notes: tuple = field(default=())

    def inequalities(self):
        """Per level j below chi - 1: (j, next m at least double, three times next r at least m)."""
        if self.chi is None:
            return []
        out = []
        for j in range(0, self.chi - 1):
            if j + 1 < len(self.m) and j + 1 < len(self.r):
                out.append((j, self.m[j + 1] >= 2 * self.m[j], 3 * self.r[j + 1] >= self.m[j]))
        return out

    def corollary(self):
        """Whether Np covers the sum of m over levels up to chi - 5; None when chi < 5."""
        if self.chi is None or self.chi < 5:
            return None
        return self.Np >= sum(self.m[: self.chi - 4])

    def to_dict(self):
        return {"E_levels": [iv.to_dict() for iv in self.E_levels], "r": list(self.r),
                "m": list(self.m), "chi": self.chi, "Np": self.Np, "horizon": self.horizon,
                "inequalities": [[j, a, b] for j, a, b in self.inequalities()],
                "corollary": self.corollary()}


def _maps_into(F, inner: FiberInterval, outer: FiberInterval, t: int, tol: float) -> bool:
    ends = [F.base.iterate(x, inner.fiber, t) for x in (inner.lo, inner.hi)]
    return all(outer.lo - tol <= y <= outer.hi + tol for y in ends) and all(
        min(abs(y - outer.lo), abs(y - outer.hi)) <= tol for y in ends)


def enhanced_nest(F: ExtendedMap, k_max: int, period: int, horizon: int | None = None,
                  omega_start: int | None = None) -> EnhancedNestReport:
    """Start at the base interval; each step pulls back through the admissible
    return and then takes 5N successors."""
    N = F.n_type
    Np = N * period
    hz = horizon or max(64, 10 * Np)
    om = omega_samples(F, omega_start or 4 * hz, 4 * hz)
    E = [F.I0]
    r, m, notes = [], [], []
    chi = None
    c0 = F.critical_points()[0]
    for k in range(k_max + 1):
        Ek = E[-1]
        e = first_entry(F, [Ek], c0, hz)
        if e is None:
            notes.append(f"no return to E_{k} within {hz}")
            break
        r.append(e.k)
        if e.k == Np:
            chi = k
            break
        if k == k_max:
            break
        _, _, Lk, tG = admissible_return(F, Ek, om, hz)
        nu2, M, _, _ = admissible_return(F, Lk, om, hz)
        stages = [(Lk, Ek, tG), (M, Lk, nu2)]
        for _ in range(5 * N):
            S, d = successor(F, M, hz, with_depth=True)
            stages.append((S, M, d))
            M = S
        depth = sum(t for _, _, t in stages)
        # composing all stages at once amplifies roundoff, so check each hop
        if not all(_maps_into(F, a, b, t, 1e-7 * b.length) for a, b, t in stages):
            notes.append(f"transfer time check failed at level {k}")
        m.append(depth)
        E.append(M)
    return EnhancedNestReport(tuple(E), tuple(r), tuple(m), chi, Np, hz, tuple(notes))
