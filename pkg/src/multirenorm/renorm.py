"""Restrictive intervals, the renormalization operator and towers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import combinatorics as comb
from .boxmap import FiberInterval
from .errors import NotRenormalizable, OrderAmbiguity, PrecisionExhausted, ValidationFailure
from .maps import EVAL_TOL, AffineMap, IterateSegment, MultimodalMap, validate
from .numeric import isolate_roots, to_real, unit_roundoff, uses_mp, workprec

ROOT_CELLS = 4096
DISJOINT_TOL = 1e-10
CRIT_MARGIN = 1e-10
CONTAIN_TOL = 1e-9
MIN_RADIUS = 1e-8
SCAN_WINDOWS = (1.0, 1e-2, 1e-4, 1e-6)
PRECISION_SLACK = 1e-6


@dataclass(frozen=True)
class PeriodicInterval:
    J: FiberInterval
    z0: float  # periodic endpoint of J (the other endpoint is -z0)
    k: int
    p: int
    n_type: int
    visit_times: tuple  # orbit times of the critical visits, increasing, first is 0
    orbit_intervals: tuple  # F^i(J), i = 0..k-1
    overlap_tol: float = 0.0  # absolute slack allowed where orbit intervals touch

    @property
    def visit_fibers(self):
        return tuple(m % self.n_type for m in self.visit_times)

    def to_dict(self):
        return {"J": {"lo": float(self.J.lo), "hi": float(self.J.hi)}, "k": self.k, "p": self.p,
                "visit_times": list(self.visit_times)}


@dataclass(frozen=True)
class RenormResult:
    source: MultimodalMap
    periodic: PeriodicInterval
    normalizers: tuple  # A_t, t in visit order
    renormalized: MultimodalMap
    combinatorics: comb.Combinatorics

    @property
    def p(self):
        return self.periodic.p

    def to_dict(self):
        return {
            "p": self.p,
            "J": {"lo": float(self.periodic.J.lo), "hi": float(self.periodic.J.hi)},
            "visit_times": list(self.periodic.visit_times),
            "normalizers": [a.to_dict() for a in self.normalizers],
            "combinatorics": self.combinatorics.canonical,
        }


def image_interval(factor, lo, hi):
    """Image of [lo, hi] under an even factor with its maximum at 0."""
    a, b = factor.value(lo), factor.value(hi)
    if lo < 0 < hi:
        return min(a, b), factor.critical_value
    return min(a, b), max(a, b)


def orbit_intervals(f: MultimodalMap, lo, hi, steps: int, start: int = 0):
    out = [(lo, hi, start)]
    N = f.n_type
    j = start
    for _ in range(steps):
        lo, hi = image_interval(f.factors[j], lo, hi)
        j = (j + 1) % N
        out.append((lo, hi, j))
    return out


def evaluation_noise(f: MultimodalMap) -> float:
    """Roundoff gauge: every factor fixes -1 exactly in exact arithmetic."""
    one = to_real(1, f.precision_bits)
    return 10 * max(float(abs(fac.value(-one) + 1)) for fac in f.factors)


def check_periodic(f: MultimodalMap, z0, p: int, samples: int = 65):
    """A PeriodicInterval bounded by the periodic point z0, or None."""
    N = f.n_type
    k = N * p
    if not k > N:
        return None
    r = abs(z0)
    if not MIN_RADIUS < r < 1:
        return None
    ivs = orbit_intervals(f, -r, r, k)
    scale = 2 * r
    noise = evaluation_noise(f) * k
    # F^k(J) inside J, endpoints and a sample of interior points
    lo_k, hi_k, _ = ivs[k]
    tol = CONTAIN_TOL * max(scale, 1e-300) + 1e-14 + noise
    if lo_k < -r - tol or hi_k > r + tol:
        return None
    if not uses_mp(f.precision_bits):
        xs = np.linspace(-float(r), float(r), samples)
        ys = f.iterate(xs, 0, k)
        if np.any(np.abs(ys) > float(r) + tol):
            return None
    # pairwise disjoint interiors on each fiber
    for j in range(N):
        sub = sorted((ivs[i] for i in range(j, k, N)), key=lambda t: t[0])
        for (a0, a1, _), (b0, b1, _) in zip(sub, sub[1:]):
            if a1 - b0 > DISJOINT_TOL * 2 + noise:
                return None
    # one critical visit per fiber
    visits = [0]
    crit_orbit = [f.iterate(0 * r, 0, i) for i in range(k)] if N > 1 else []
    for j in range(1, N):
        hits = []
        for i in range(j, k, N):
            lo, hi, _ = ivs[i]
            if lo < -CRIT_MARGIN and hi > CRIT_MARGIN:
                hits.append(i)
            elif abs(crit_orbit[i]) <= CRIT_MARGIN and min(abs(lo), abs(hi)) <= CRIT_MARGIN:
                # the endpoint is the critical orbit itself landing on a critical point, so
                # the closed image certainly contains it
                hits.append(i)
            elif abs(lo) <= CRIT_MARGIN or abs(hi) <= CRIT_MARGIN:
                return None  # boundary hit: ambiguous
        if len(hits) != 1:
            return None
        visits.append(hits[0])
    for i in range(N, k, N):
        lo, hi, _ = ivs[i]
        if lo < -CRIT_MARGIN and hi > CRIT_MARGIN:
            return None
    if any(not lo < hi for lo, hi, _ in ivs[:k]):
        return None
    J = FiberInterval(-r, r, 0)
    orbit = tuple(FiberInterval(lo, hi, j) for lo, hi, j in ivs[:k])
    return PeriodicInterval(J, z0, k, p, N, tuple(sorted(visits)), orbit,
                            DISJOINT_TOL * 2 + noise)


def periodic_candidates(f: MultimodalMap, p: int, cells: int = ROOT_CELLS):
    """Roots of f^p(x) = x in (-1, 1), largest modulus first.

    Small restrictive intervals sit next to the critical point, so the scan
    is repeated on windows shrinking toward 0."""
    bits = f.precision_bits
    N = f.n_type
    g_vec = lambda xs: f.iterate(xs, 0, N * p) - xs
    roots = []
    with workprec(bits):
        g = lambda x: f.iterate(x, 0, N * p) - x
        for s in SCAN_WINDOWS:
            for z in isolate_roots(g_vec, g, -s, s, cells, bits):
                if all(abs(z - w) > 1e-12 * max(abs(z), MIN_RADIUS) for w in roots):
                    roots.append(z)
    roots = [z for z in roots if MIN_RADIUS < abs(z) < 1 - 1e-12]
    return sorted(roots, key=lambda z: -abs(z))


def default_max_period(f: MultimodalMap) -> int:
    return max(2, 12 // f.n_type)


def find_periodic_interval(f: MultimodalMap, max_period: int | None = None,
                           period: int | None = None, cells: int = ROOT_CELLS,
                           min_period: int = 2):
    """Smallest-period restrictive interval, maximal for that period."""
    if max_period is None:
        max_period = default_max_period(f)
    periods = [period] if period is not None else range(min_period, max_period + 1)
    with workprec(f.precision_bits):
        for p in periods:
            for z in periodic_candidates(f, p, cells):
                P = check_periodic(f, z, p)
                if P is not None:
                    return P
    return None


def _normalizers(f: MultimodalMap, P: PeriodicInterval):
    return tuple(AffineMap.normalizer(f.iterate(P.z0, 0, m)) for m in P.visit_times)


def evaluate_fixed(g: MultimodalMap):
    one = to_real(1, g.precision_bits)
    return max((fac.value(-one) for fac in g.factors), key=lambda v: abs(v + 1))


def renormalize_at(f: MultimodalMap, P: PeriodicInterval) -> RenormResult:
    """The normalized first-return map to the cycle of P."""
    with workprec(f.precision_bits):
        A = _normalizers(f, P)
        N = f.n_type
        times = list(P.visit_times) + [P.k]
        facs = []
        for t in range(N):
            facs.append(IterateSegment(
                f, times[t] % N, times[t + 1] - times[t], A[t].inverse(), A[(t + 1) % N]))
        g = MultimodalMap(tuple(facs), f.precision_bits)
        # rescaling by 1/|J| twice amplifies the roundoff of the return map
        w = float(P.J.length)
        tol = (EVAL_TOL + 64 * float(unit_roundoff(f.precision_bits)) * P.k / w ** 2
               + evaluation_noise(f) * P.k / w)
        rep = validate(g, tol=tol)
    if not rep.ok:
        fails = dict(rep.failures())
        dev = abs(evaluate_fixed(g) + 1)
        dev = max([dev] + [-fac.critical_value for fac in g.factors])
        if set(fails) <= {"fixes -1", "range in [-1,1]", "critical value >= 0"} \
                and dev < PRECISION_SLACK:
            # the only defect is roundoff growth along the unstable direction
            raise PrecisionExhausted("boundary normalization lost to roundoff",
                                     deviation=float(dev))
        raise ValidationFailure(f"renormalized map fails validation: {rep.failures()}",
                                failures=rep.failures())
    try:
        M = comb.canonical_form(comb.extract(P))
    except OrderAmbiguity:
        raise
    return RenormResult(f, P, A, g, M)


def renormalize(f: MultimodalMap, max_period: int | None = None) -> RenormResult:
    if max_period is None:
        max_period = default_max_period(f)
    P = find_periodic_interval(f, max_period)
    if P is None:
        raise NotRenormalizable(f"no restrictive interval with period <= {max_period}",
                                max_period=max_period)
    return renormalize_at(f, P)


def renorm_tower(f: MultimodalMap, depth: int, max_period: int | None = None):
    """[R f, R^2 f, ...] as RenormResults, stopping at the first failure."""
    out = []
    g = f
    for _ in range(depth):
        try:
            res = renormalize(g, max_period)
        except (NotRenormalizable, PrecisionExhausted):
            break
        out.append(res)
        g = res.renormalized
    return out


def level_map(tower, d):
    """R^d f from a tower (d = 0 is the source)."""
    return tower[0].source if d == 0 else tower[d - 1].renormalized
