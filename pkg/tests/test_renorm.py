import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multirenorm import combinatorics as comb, renorm, tuner
from multirenorm.errors import NotRenormalizable
from multirenorm.maps import build_quadratic_family, evaluate, validate

B_STAR = (-1 - math.sqrt(5)) / 2


@pytest.fixture(scope="module")
def b2():
    return tuner.superstable_parameter(tuner.FamilySpec.unit(1), [comb.M2, comb.M2]).b[0]


def test_b_star_period_two_interval():
    f = build_quadratic_family([B_STAR])
    P = renorm.find_periodic_interval(f)
    assert P.p == 2 and P.visit_times == (0,)
    # boundary is the period-2 point: f^2(z) = z, and the critical orbit {0, 0.618}
    assert evaluate(f, evaluate(f, P.z0)) == pytest.approx(P.z0, abs=1e-12)
    assert P.J.contains(0.0)
    iv = P.orbit_intervals[1]  # the critical value is an endpoint of the closed image
    assert iv.lo <= (math.sqrt(5) - 1) / 2 <= iv.hi + 1e-15


def test_chebyshev_has_no_restrictive_interval():
    f = build_quadratic_family([-2.0])
    assert renorm.find_periodic_interval(f, max_period=16) is None
    with pytest.raises(NotRenormalizable):
        renorm.renormalize(f)
    assert renorm.renorm_tower(f, 5) == []


def test_two_factor_period_two():
    res = tuner.superstable_parameter(tuner.FamilySpec.unit(2), [comb.doubling(2)])
    P = renorm.find_periodic_interval(build_quadratic_family(list(res.b)))
    assert P.p == 2
    assert sorted(P.visit_fibers) == [0, 1]


def test_renormalization_of_period_four_has_period_two(b2):
    res = renorm.renormalize(build_quadratic_family([b2]))
    assert res.p == 2
    g = res.renormalized
    assert validate(g).ok
    assert evaluate(g, -1.0) == pytest.approx(-1.0, abs=1e-9)
    assert renorm.renormalize(g).p == 2


def test_tower_at_period_four_terminates_at_two(b2):
    tower = renorm.renorm_tower(build_quadratic_family([b2]), 6)
    assert len(tower) == 2
    assert [r.combinatorics for r in tower] == [comb.M2, comb.M2]


def test_tower_at_accumulation(feigenbaum_map):
    tower = renorm.renorm_tower(feigenbaum_map, 8)
    assert len(tower) == 8
    assert all(r.p == 2 and r.combinatorics == comb.M2 for r in tower)
    assert renorm.level_map(tower, 0) is feigenbaum_map


def test_renormalized_map_matches_direct_return_map(b_feigenbaum):
    f = build_quadratic_family([b_feigenbaum])
    res = renorm.renormalize(f)
    A = res.normalizers[0]
    g = res.renormalized
    # g = A o f^2 o A^{-1}, evaluated straight from the quadratic formula
    q = lambda x: b_feigenbaum * x * x - b_feigenbaum - 1
    for x in np.linspace(-1, 1, 11):
        y = A.inverse()(x)
        assert evaluate(g, x) == pytest.approx(A(q(q(y))), abs=1e-12)


def test_to_dict_fields():
    res = renorm.renormalize(build_quadratic_family([B_STAR]))
    d = res.to_dict()
    assert d["p"] == 2 and d["combinatorics"] == comb.M2.canonical


@settings(max_examples=12, deadline=None)
@given(st.floats(1e-7, 1e-4))
def test_renormalization_separates_nearby_parameters(eps):
    # distinct parameters near the accumulation point give distinct renormalizations
    bF = -1.784972835935464
    g1 = renorm.renormalize(build_quadratic_family([bF])).renormalized
    g2 = renorm.renormalize(build_quadratic_family([bF + eps])).renormalized
    xs = np.linspace(-1, 1, 257)
    assert np.max(np.abs(g1.iterate(xs, 0, 1) - g2.iterate(xs, 0, 1))) > 0


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.99, -1.0))
def test_periodic_interval_invariants(b):
    f = build_quadratic_family([b])
    P = renorm.find_periodic_interval(f)
    if P is None:
        return
    # the cycle is disjoint and returns into J
    ivs = sorted(P.orbit_intervals, key=lambda iv: iv.lo)
    for a, c in zip(ivs, ivs[1:]):
        assert a.hi <= c.lo + P.overlap_tol
    xs = np.linspace(float(P.J.lo), float(P.J.hi), 33)
    assert np.all(np.abs(f.iterate(xs, 0, P.k)) <= P.J.hi + 1e-8)
