"""Realizing combinatorics words in the quadratic family, and universality
measurements built on top of the tuned parameters."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import combinatorics as comb
from .errors import (NotFoundInBox, OrbitEscape, ParameterOutOfRange, VerificationMismatch,
                     WordMismatch)
from .maps import MultimodalMap, build_quadratic_family, evaluate
from .numeric import DOUBLE_BITS, to_real, unit_roundoff, workprec
from .renorm import level_map, renorm_tower

PRECISION_FLOOR = 1e-12
SAMPLE_POINTS = 512


@dataclass(frozen=True)
class FamilySpec:
    n_type: int = 1
    box: tuple = ((-2.0, -1.0),)
    precision_bits: int = DOUBLE_BITS

    def __post_init__(self):
        if len(self.box) != self.n_type:
            raise ValueError("box must have one range per factor")
        for lo, hi in self.box:
            if not -2 <= lo < hi <= -1:
                raise ValueError(f"box side ({lo}, {hi}) is not a nonempty subset of [-2, -1]")

    @classmethod
    def unit(cls, n_type=1, precision_bits=DOUBLE_BITS):
        return cls(n_type, tuple((-2.0, -1.0) for _ in range(n_type)), precision_bits)

    def key(self):
        return {"n_type": self.n_type, "box": [list(map(float, r)) for r in self.box],
                "precision_bits": self.precision_bits}


@dataclass(frozen=True)
class TuneResult:
    b: tuple
    word: tuple
    residual: float
    method: str
    bracket_width: float = 0.0
    best_effort: bool = False
    iterations: int = 0

    def to_dict(self):
        return {"word": [w.canonical for w in self.word], "b": [float(x) for x in self.b],
                "residual": float(self.residual), "method": self.method,
                "bracket_width": float(self.bracket_width), "best_effort": self.best_effort}


@dataclass(frozen=True)
class ContractionFit:
    distances: tuple
    rate: float | None
    constant: float | None
    r_squared: float | None
    used: tuple = field(default=())
    exact_coincidence: bool = False
    metric: str = "sup over [-1,1], 512 points"

    @property
    def slope(self):
        return None if self.rate is None else float(np.log(self.rate))

    def to_dict(self):
        return {"distances": [float(d) for d in self.distances], "rate": self.rate,
                "constant": self.constant, "r_squared": self.r_squared,
                "used_levels": list(self.used), "exact_coincidence": self.exact_coincidence,
                "metric": self.metric}


# ---------------------------------------------------------------- kneading
_RANK = {"L": 0, "C": 1, "R": 2}


def kneading_compare(u: str, v: str) -> int:
    """Signed lexicographic comparison: the order flips after each R."""
    flips = 0
    for a, b in zip(u, v):
        if a != b:
            s = 1 if _RANK[a] > _RANK[b] else -1
            return -s if flips % 2 else s
        if a == "R":
            flips += 1
    return 0


def orbit_symbols(f: MultimodalMap, length: int) -> str:
    x = to_real(0, f.precision_bits)
    out = []
    for _ in range(length):
        x = f.iterate(x, 0, f.n_type)
        out.append("C" if x == 0 else ("L" if x < 0 else "R"))
    return "".join(out)


def realize_word(f: MultimodalMap, depth: int, max_period=None):
    tower = renorm_tower(f, depth, max_period)
    return tuple(r.combinatorics for r in tower)


def _verify(b, word, spec, method, residual, width, best_effort=False, iters=0):
    f = build_quadratic_family(list(b), spec.precision_bits)
    got = realize_word(f, len(word) + 1, max_period=max(w.m for w in word))
    if got[:len(word)] != tuple(word) or len(got) != len(word):
        raise VerificationMismatch(
            "tuned parameter realizes a different word",
            b=[float(x) for x in b], found=[g.canonical for g in got])
    return TuneResult(tuple(b), tuple(word), residual, method, width, best_effort, iters)


def bisect_superstable(word, spec: FamilySpec, verify: bool = True) -> TuneResult:
    """N = 1: bisection on the kneading order along the one-parameter family."""
    M = comb.product_word(list(word))
    target = M.itinerary()
    k = M.k
    bits = spec.precision_bits
    with workprec(bits):
        lo, hi = (to_real(x, bits) for x in spec.box[0])  # lo = -2 side
        f_of = lambda b: build_quadratic_family([b], bits)
        s_lo = kneading_compare(orbit_symbols(f_of(lo), k), target)
        s_hi = kneading_compare(orbit_symbols(f_of(hi), k), target)
        if not (s_lo > 0 > s_hi):
            raise NotFoundInBox("kneading target is not bracketed by the box",
                                box=list(map(float, spec.box[0])))
        tol = 4 * unit_roundoff(bits)
        it = 0
        while abs(hi - lo) > tol * 2 and it < 4 * bits:
            mid = (lo + hi) / 2
            if mid in (lo, hi):
                break
            s = kneading_compare(orbit_symbols(f_of(mid), k), target)
            if s > 0:
                lo = mid
            elif s < 0:
                hi = mid
            else:
                lo = hi = mid
            it += 1
        b = (lo + hi) / 2
        resid = abs(f_of(b).composite_power(to_real(0, bits), k))
        width = abs(hi - lo)
    if not verify:
        return TuneResult((b,), tuple(word), float(resid), "bisection", float(width), False, it)
    return _verify((b,), word, spec, "bisection", float(resid), float(width), False, it)


def _superstable_system(M: comb.Combinatorics, spec: FamilySpec):
    vis = M.visits() + [M.k]
    N = spec.n_type

    def F(b):
        try:
            f = build_quadratic_family(list(b), spec.precision_bits)
        except ParameterOutOfRange:
            return None
        out = []
        for t in range(N):
            x = f.iterate(0.0, vis[t] % N, vis[t + 1] - vis[t])
            out.append(x)
        return np.array(out, dtype=float)

    return F


def _early_visit(M: comb.Combinatorics, b, spec: FamilySpec, tol: float = 1e-6) -> bool:
    """True when a critical orbit reaches 0 before its scheduled visit."""
    vis = M.visits() + [M.k]
    N = spec.n_type
    f = build_quadratic_family(list(b), spec.precision_bits)
    for t in range(N):
        x = 0.0
        for s in range(1, vis[t + 1] - vis[t]):
            x = f.factor((vis[t] + s - 1) % N).value(x)
            if abs(x) < tol:
                return True
    return False


def newton_superstable(word, spec: FamilySpec, grid: int = 41, seeds: int = 12,
                       max_iter: int = 60) -> TuneResult:
    """N >= 2: damped Newton with a finite-difference Jacobian from grid seeds."""
    M = comb.product_word(list(word))
    F = _superstable_system(M, spec)
    axes = [np.linspace(lo, hi, grid) for lo, hi in spec.box]
    scored = []
    for pt in itertools.product(*axes):
        r = F(pt)
        if r is not None:
            scored.append((float(np.linalg.norm(r)), pt))
    scored.sort(key=lambda t: t[0])
    h = 1e-7
    last_err = None
    for _, seed in scored[:seeds]:
        b = np.array(seed, dtype=float)
        r = F(b)
        it = 0
        for it in range(max_iter):
            nr = np.linalg.norm(r)
            if nr < 1e-13:
                break
            Jm = np.empty((len(b), len(b)))
            for i in range(len(b)):
                e = np.zeros(len(b))
                e[i] = h if b[i] + h <= spec.box[i][1] else -h  # stay inside the box
                ri = F(b + e)
                if ri is None:
                    ri = r
                Jm[:, i] = (ri - r) / e[i]
            try:
                step = np.linalg.solve(Jm, -r)
            except np.linalg.LinAlgError:
                break
            t = 1.0
            while t > 1e-6:
                cand = np.clip(b + t * step, -2.0, -1.0)
                rc = F(cand)
                if rc is not None and np.linalg.norm(rc) < nr:
                    b, r = cand, rc
                    break
                t *= 0.5
            else:
                break
        if np.linalg.norm(r) < 1e-10 and not _early_visit(M, b, spec):
            try:
                return _verify(tuple(float(x) for x in b), word, spec, "newton",
                               float(np.linalg.norm(r)), 0.0, True, it)
            except VerificationMismatch as exc:
                last_err = exc
                continue
    if last_err is not None:
        raise last_err
    raise NotFoundInBox("Newton found no superstable parameter from grid seeds")


def superstable_parameter(spec: FamilySpec, word) -> TuneResult:
    word = list(word)
    if not word:
        raise ValueError("word must be nonempty")
    if any(w.n_type != spec.n_type for w in word):
        raise comb.NMismatch("word and family disagree on N")
    if spec.n_type == 1:
        return bisect_superstable(word, spec)
    return newton_superstable(word, spec)


def doubling_parameters(n_max: int, spec: FamilySpec | None = None, verify: bool = True):
    spec = spec or FamilySpec.unit(1)
    return [bisect_superstable([comb.M2] * n, spec, verify=verify).b[0]
            for n in range(1, n_max + 1)]


def feigenbaum_delta(spec: FamilySpec | None, n_max: int, verify: bool = True):
    """[(n, delta_n)] for n = 3..n_max."""
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    b = doubling_parameters(n_max, spec, verify=verify)
    out = []
    for n in range(3, n_max + 1):
        out.append((n, float((b[n - 2] - b[n - 3]) / (b[n - 1] - b[n - 2]))))
    return out, b


def accumulation_parameter(n_max: int = 12, spec: FamilySpec | None = None):
    """Aitken extrapolation of the superstable doubling parameters."""
    b = doubling_parameters(n_max, spec, verify=False)
    b0, b1, b2 = b[-3], b[-2], b[-1]
    denom = b2 - 2 * b1 + b0
    bF = b2 - (b2 - b1) ** 2 / denom
    return bF, abs(b2 - b1)


def feigenbaum_alpha(f: MultimodalMap, depth: int, max_period: int = 2, cells: int = 4096):
    """|J_{n-1}| / |J_n| for n = 1..depth, J_n pulled back to level-0 coordinates."""
    from .renorm import find_periodic_interval, renormalize_at
    from .errors import NotRenormalizable
    ratios = []
    g = f
    pull = None  # level-n coordinates -> level-0 coordinates
    prev = 2.0
    for _ in range(depth):
        P = find_periodic_interval(g, max_period, cells=cells)
        if P is None:
            raise NotRenormalizable("tower ended before the requested depth")
        res = renormalize_at(g, P)
        A0inv = res.normalizers[0].inverse()
        pull = A0inv if pull is None else pull.compose(A0inv)
        length = 2 * abs(pull.scale)
        ratios.append(float(prev / length))
        prev = length
        g = res.renormalized
    return ratios


def sup_distance(f: MultimodalMap, g: MultimodalMap, points: int = SAMPLE_POINTS) -> float:
    xs = np.linspace(-1.0, 1.0, points)
    return float(np.max(np.abs(f.iterate(xs, 0, f.n_type) - g.iterate(xs, 0, g.n_type))))


def contraction_rate(f: MultimodalMap, g: MultimodalMap, depth: int,
                     max_period: int | None = None) -> ContractionFit:
    tf = renorm_tower(f, depth, max_period)
    tg = renorm_tower(g, depth, max_period)
    if len(tf) < depth or len(tg) < depth:
        raise WordMismatch("maps are not renormalizable to the requested depth",
                           depths=(len(tf), len(tg)))
    if [r.combinatorics for r in tf] != [r.combinatorics for r in tg]:
        raise WordMismatch("extracted words differ")
    d = [sup_distance(level_map(tf, k), level_map(tg, k)) for k in range(depth + 1)]
    if all(x == 0 for x in d):
        return ContractionFit(tuple(d), None, None, None, (), True)
    used = [k for k, x in enumerate(d) if x > PRECISION_FLOOR]
    if len(used) < 2:
        return ContractionFit(tuple(d), None, None, None, tuple(used))
    ks = np.array(used, dtype=float)
    ys = np.log(np.array([d[k] for k in used]))
    slope, intercept = np.polyfit(ks, ys, 1)
    pred = slope * ks + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ContractionFit(tuple(d), float(np.exp(slope)), float(np.exp(intercept)), r2, tuple(used))
