"""Acceptance criteria 1-10.  Each test records a one line verdict that the
terminal summary prints, then asserts at the stated tolerance."""
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import ACCEPTANCE, SADDLE_NODE_B
from multirenorm import boxmap, cli, combinatorics as comb, complex_ext as cx, maps, nest
from multirenorm import renorm, tuner

DELTA = 4.6692  # classical constant
ALPHA = 2.5029


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def _quad_orbit(c, count):
    z = 0.0
    for _ in range(count):
        z = z * z + c
    return z


def oracle_doubling_centers(n_max):
    """Superstable 2^n centers of z^2 + c by brentq, bracketed geometrically."""
    cs = [0.0, -1.0]
    for n in range(2, n_max + 1):
        d = (cs[-1] - cs[-2]) / 4.67
        pred = cs[-1] + d
        cs.append(brentq(lambda c: _quad_orbit(c, 2 ** n), pred - 0.5 * abs(d),
                         pred + 0.5 * abs(d), xtol=1e-15))
    return cs[1:]


# ------------------------------------------------------------------ 1
def test_criterion_1_feigenbaum_delta():
    t0 = time.time()
    rows, bs = tuner.feigenbaum_delta(None, 8)
    elapsed = time.time() - t0
    d8 = dict(rows)[8]
    # independent route: brentq on z^2 + c, with c = -b(b + 1)
    cs = oracle_doubling_centers(8)
    gap = max(abs(-b * (b + 1) - c) for b, c in zip(bs, cs))
    rel = abs(d8 - DELTA) / DELTA
    ok = rel < 0.01 and elapsed < 60 and gap < 1e-12
    record(1, ok, f"delta_8={d8:.6f} rel={rel:.2e} oracle_gap={gap:.1e} t={elapsed:.1f}s")
    assert gap < 1e-12
    assert rel < 0.01
    assert elapsed < 60


# ------------------------------------------------------------------ 2
def test_criterion_2_feigenbaum_alpha(feigenbaum_map):
    t0 = time.time()
    ratios = tuner.feigenbaum_alpha(feigenbaum_map, 8)
    elapsed = time.time() - t0
    r8 = ratios[7]
    # independent route: critical-cycle distances at the oracle centers
    cs = oracle_doubling_centers(8)
    d = [abs(_quad_orbit(cs[n - 1], 2 ** (n - 1))) for n in range(1, 9)]
    oracle = d[6] / d[7]
    rel = abs(r8 - ALPHA) / ALPHA
    ok = rel < 0.02 and elapsed < 120 and abs(oracle - ALPHA) / ALPHA < 0.02
    record(2, ok, f"ratio_8={r8:.6f} rel={rel:.2e} cycle_oracle={oracle:.6f} t={elapsed:.1f}s")
    assert rel < 0.02
    assert abs(oracle - ALPHA) / ALPHA < 0.02
    assert elapsed < 120


# ------------------------------------------------------------------ 3
def test_criterion_3_real_bounds(feigenbaum_nest):
    n = feigenbaum_nest
    s = n.scaling_factors
    moments = n.non_central_moments()
    assert n.depth >= 8
    at_moments = [s[k - 1] for k in moments]
    deep = [abs(s[k] - s[k + 1]) for k in range(5, min(len(s), 9) - 1)]
    ok = bool(at_moments) and min(at_moments) > 1.05 and deep and max(deep) < 1e-3
    record(3, ok, f"min scaling at {len(at_moments)} non-central levels={min(at_moments):.4f} "
                  f"deep drift={max(deep):.1e}")
    assert min(at_moments) > 1.05
    assert max(deep) < 1e-3


# ------------------------------------------------------------------ 4
def _count_centers(n):
    """Real period-n centers of the quadratic family (Moebius sum over odd divisors)."""
    def mu(d):
        out, q = 1, 2
        while q * q <= d:
            if d % q == 0:
                d //= q
                if d % q == 0:
                    return 0
                out = -out
            q += 1
        return -out if d > 1 else out
    return sum(mu(d) * 2 ** (n // d) for d in range(1, n + 1, 2) if n % d == 0) // (2 * n)


def test_criterion_4_combinatorics_algebra():
    t0 = time.time()
    by = {}
    for N in (1, 2):
        for m in range(2, 13):
            allc = comb.enumerate_combinatorics(N, m)
            assert len(allc) == _count_centers(N * m), (N, m)
            by[N, m] = allc
    # factorization then product gives back the input, for every combinatorics
    roundtrip = 0
    for allc in by.values():
        for M in allc:
            for fz in comb.factorizations(M):
                assert comb.product_word(list(fz)) == M
                roundtrip += 1
    # product then factorization recovers the factors
    pairs = 0
    for N in (1, 2):
        for m1 in range(2, 7):
            for m2 in range(2, 12 // m1 + 1):
                for A in by[N, m1]:
                    for B in by[N, m2]:
                        P = comb.product(A, B)
                        want = tuple(comb.factorize(A)) + tuple(comb.factorize(B))
                        assert want in comb.factorizations(P)
                        pairs += 1
    # associativity for every triple with m1 m2 m3 <= 12
    triples = 0
    for N in (1, 2):
        for ms in [(2, 2, 2), (2, 2, 3), (2, 3, 2), (3, 2, 2)]:
            for A in by[N, ms[0]]:
                for B in by[N, ms[1]]:
                    for C in by[N, ms[2]]:
                        assert comb.product(comb.product(A, B), C) == \
                            comb.product(A, comb.product(B, C))
                        triples += 1
    # extraction at tuned parameters agrees with the product, level by level
    M3 = next(M for M in by[1, 3])
    spec = tuner.FamilySpec.unit(1)
    for word in ([comb.M2] * 2, [comb.M2] * 3, [comb.M2, M3]):
        res = tuner.superstable_parameter(spec, word)
        f = maps.build_quadratic_family(list(res.b))
        assert tuner.realize_word(f, len(word) + 1, max(w.m for w in word)) == tuple(word)
        P = renorm.find_periodic_interval(f, period=comb.product_word(word).m)
        assert comb.canonical_form(comb.extract(P)) == comb.product_word(word)
    elapsed = time.time() - t0
    record(4, elapsed < 300, f"{roundtrip} round trips, {pairs} products, {triples} triples, "
                             f"3 tuned towers, t={elapsed:.0f}s")
    assert elapsed < 300


# ------------------------------------------------------------------ 5
def test_criterion_5_external_maps():
    worst, windings = 0.0, set()
    for b in np.linspace(-2.0, -1.0, 10):
        P = cx.ComplexPolynomial.from_family([b])
        assert P.connected()
        s = cx.external_map_samples(P, 256)
        assert len(s.pairs) == 256
        worst = max(worst, s.max_deviation())
        windings.add(s.winding)
    ok = worst < 1e-6 and windings == {2}
    record(5, ok, f"max deviation={worst:.1e} windings={sorted(windings)}")
    assert worst < 1e-6
    assert windings == {2}


# ------------------------------------------------------------------ 6
def test_criterion_6_enhanced_nest(doubling_bs):
    checked, corollaries, chis = 0, 0, []
    for n in range(4, 9):
        f = maps.build_quadratic_family([doubling_bs[n - 1]])
        p = renorm.renormalize(f).p
        rep = nest.enhanced_nest(boxmap.extend(f), 6, p)
        assert not rep.notes
        chis.append(rep.chi)
        for j, a, b in rep.inequalities():
            assert a is True and b is True
            assert rep.m[j + 1] >= 2 * rep.m[j] and 3 * rep.r[j + 1] >= rep.m[j]
            checked += 1
        if rep.chi is not None and rep.chi >= 5:
            assert rep.corollary() is True
            assert rep.Np >= sum(rep.m[: rep.chi - 4])
            corollaries += 1
        else:
            assert rep.corollary() is None
    record(6, True, f"doubling depths 4..8: chi={chis}, {checked} inequalities, "
                    f"{corollaries} corollary checks (vacuous when chi < 2)")


# ------------------------------------------------------------------ 7
def test_criterion_7_yoccoz_profile():
    b = SADDLE_NODE_B + 5e-7
    assert abs(b - SADDLE_NODE_B) <= 1e-6
    F = boxmap.extend(maps.build_quadratic_family([b]))
    n = nest.principal_nest(F, 600)
    dec = nest.cascade_decomposition(F, n)
    longest = max(dec.cascades, key=lambda c: c.length)
    levels = n.levels[longest.start:longest.end + 1]
    L = len(levels)
    prof = nest.yoccoz_profile(levels, eta=20)
    vals = [v for _, _, v in prof.rows]
    lo, hi = min(vals), max(vals)
    ok = L >= 20 and prof.within_band and prof.total <= 1
    record(7, ok, f"L={L} kind={longest.kind} normalized in [{lo:.4f}, {hi:.4f}] "
                  f"sum={prof.total:.6f}")
    assert L >= 20
    assert prof.total <= 1
    assert prof.within_band, f"normalized values leave [1/20, 20]: min {lo}"


# ------------------------------------------------------------------ 8
def test_criterion_8_contraction(feigenbaum_map):
    g = renorm.renormalize(feigenbaum_map, 2).renormalized
    fit = tuner.contraction_rate(feigenbaum_map, g, 8, 2)
    assert len(fit.distances) == 9
    ok = fit.slope is not None and fit.slope < 0 and fit.r_squared > 0.9
    record(8, ok, f"rate={fit.rate:.4f} slope={fit.slope:.3f} R^2={fit.r_squared:.4f} "
                  f"levels used={len(fit.used)}")
    assert fit.slope < 0
    assert fit.r_squared > 0.9


# ------------------------------------------------------------------ 9
def test_criterion_9_modulus(feigenbaum_map):
    bounds = {}
    for level in range(3, 9):
        D = cx.tower_domains(feigenbaum_map, level, 2)
        bounds[level] = cx.modulus_lower_bound(D).value
    running = {k: min(bounds[j] for j in range(3, k + 1)) for k in bounds}
    last = [running[k] for k in (6, 7, 8)]
    poly = cx.modulus_lower_bound(cx.ComplexPolynomial.from_family([-1.5]))
    ok = (all(v > 0 for v in bounds.values()) and all(a <= b for a, b in zip(last, last[1:]))
          and poly.value == "unbounded")
    record(9, ok, "bounds " + " ".join(f"{k}:{v:.6f}" for k, v in bounds.items())
           + f" polynomial={poly.value}")
    assert all(v > 0 for v in bounds.values())
    assert all(a <= b for a, b in zip(last, last[1:]))
    assert poly.value == "unbounded"


# ------------------------------------------------------------------ 10
ACCEPTANCE_RUNS = [
    ("analyze", dict(b=(-1.618034,))),
    ("nest", dict(depth=12)),
    ("cascade", dict(b=(SADDLE_NODE_B + 5e-7,), depth=600)),
    ("tune", dict(word="M2^5")),
    ("delta", dict(n_max=8)),
    ("alpha", dict(depth=8)),
    ("tower", dict(depth=6)),
    ("contraction", dict(depth=8)),
    ("julia", dict(b=(-1.5,), raster=48)),
    ("external", dict(b=(-1.3,))),
    ("combinatorics", dict(n_type=2, m=5)),
]


def test_criterion_10_determinism(tmp_path, b_feigenbaum):
    differing = []
    for command, kw in ACCEPTANCE_RUNS:
        if command in ("nest", "tower"):
            kw = dict(kw, b=(b_feigenbaum,))
        blobs = []
        for run in ("a", "b"):
            out = tmp_path / run / command
            cfg = cli.RunConfig(out=str(out), **kw)
            assert cli.run(command, cfg) == 0, command
            blobs.append((out / f"{command}.json").read_bytes()
                         + b"".join(p.read_bytes() for p in sorted(out.glob("*.csv"))))
        if blobs[0] != blobs[1]:
            differing.append(command)
    record(10, not differing, f"{len(ACCEPTANCE_RUNS)} commands run twice, differing={differing}")
    assert not differing
