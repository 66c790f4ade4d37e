import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multirenorm import combinatorics as comb, renorm, tuner
from multirenorm.errors import NMismatch, VerificationMismatch, WordMismatch
from multirenorm.maps import build_quadratic_family, critical_orbit

M2 = comb.M2
SPEC = tuner.FamilySpec.unit(1)


def conj(b):
    """Parameter of z^2 + c conjugate to b x^2 - b - 1."""
    return -b * (b + 1)


def test_m2_closed_form():
    res = tuner.superstable_parameter(SPEC, [M2])
    assert res.b[0] == pytest.approx((-1 - math.sqrt(5)) / 2, abs=1e-12)
    assert res.method == "bisection" and not res.best_effort


@pytest.mark.parametrize("n,c", [(2, -1.3107026413368328), (3, -1.3815474844320614)])
def test_doubling_parameters_match_quadratic_centers(n, c):
    # classical superstable centers of z^2 + c
    b = tuner.superstable_parameter(SPEC, [M2] * n).b[0]
    assert conj(b) == pytest.approx(c, abs=1e-12)


def test_doubling_parameters_decrease_toward_accumulation(doubling_bs, b_feigenbaum):
    assert all(a > b for a, b in zip(doubling_bs, doubling_bs[1:]))
    assert doubling_bs[-1] > b_feigenbaum
    assert b_feigenbaum == pytest.approx(-1.7849729, abs=1e-7)


def test_delta_three():
    rows, bs = tuner.feigenbaum_delta(None, 3)
    assert rows[0][0] == 3
    assert rows[0][1] == pytest.approx((bs[0] - bs[1]) / (bs[1] - bs[2]))
    assert rows[0][1] == pytest.approx(4.68, abs=0.01)
    with pytest.raises(ValueError):
        tuner.feigenbaum_delta(None, 2)


def test_tuned_orbit_is_superstable(doubling_bs):
    f = build_quadratic_family([doubling_bs[3]])
    assert abs(critical_orbit(f, 16)[16]) < 1e-9


def test_primitive_period_five():
    for M in comb.enumerate_combinatorics(1, 5):
        res = tuner.superstable_parameter(SPEC, [M])
        f = build_quadratic_family(list(res.b))
        # the last iterate is zero only up to roundoff
        assert tuner.orbit_symbols(f, 4) == M.itinerary()[:4]
        assert abs(critical_orbit(f, 5)[5]) < 1e-9


def test_two_factor_tuning_verifies():
    spec = tuner.FamilySpec.unit(2)
    word = [comb.doubling(2)]
    res = tuner.superstable_parameter(spec, word)
    f = build_quadratic_family(list(res.b))
    assert tuner.realize_word(f, 2) == tuple(word)
    assert res.best_effort


def test_word_and_family_must_agree_on_n():
    with pytest.raises(NMismatch):
        tuner.superstable_parameter(tuner.FamilySpec.unit(2), [M2])
    with pytest.raises(ValueError):
        tuner.superstable_parameter(SPEC, [])


def test_family_spec_box_checks():
    with pytest.raises(ValueError):
        tuner.FamilySpec(1, ((-2.5, -1.0),))
    with pytest.raises(ValueError):
        tuner.FamilySpec(2, ((-2.0, -1.0),))


def test_verification_rejects_wrong_word():
    b = tuner.superstable_parameter(SPEC, [M2, M2]).b
    with pytest.raises(VerificationMismatch):
        tuner._verify(b, [M2], SPEC, "bisection", 0.0, 0.0)


@given(st.text("LRC", min_size=1, max_size=8), st.text("LRC", min_size=1, max_size=8))
def test_kneading_compare_antisymmetric(u, v):
    assert tuner.kneading_compare(u, v) == -tuner.kneading_compare(v, u)


def test_kneading_order_flips_after_r():
    assert tuner.kneading_compare("L", "R") == -1
    assert tuner.kneading_compare("RL", "RR") == 1


def test_alpha_ratios(feigenbaum_map):
    ratios = tuner.feigenbaum_alpha(feigenbaum_map, 1)
    assert len(ratios) == 1 and ratios[0] > 1


def test_contraction_self_distance_is_exact(feigenbaum_map):
    fit = tuner.contraction_rate(feigenbaum_map, feigenbaum_map, 4, 2)
    assert fit.exact_coincidence and all(d == 0 for d in fit.distances)
    assert fit.rate is None


def test_contraction_between_maps_sharing_a_word(feigenbaum_map):
    # g is not quadratic, yet carries the same doubling word as f
    g = renorm.renormalize(renorm.renormalize(feigenbaum_map, 2).renormalized, 2).renormalized
    fit = tuner.contraction_rate(feigenbaum_map, g, 6, 2)
    assert fit.distances[6] < fit.distances[1]
    assert fit.rate < 1


def test_contraction_word_mismatch(feigenbaum_map):
    with pytest.raises(WordMismatch):
        tuner.contraction_rate(feigenbaum_map, build_quadratic_family([-1.618034]), 4, 2)


def test_sup_distance_symmetric():
    f, g = build_quadratic_family([-1.7]), build_quadratic_family([-1.8])
    assert tuner.sup_distance(f, g) == tuner.sup_distance(g, f) > 0
    xs = np.linspace(-1, 1, 512)
    assert tuner.sup_distance(f, g) == pytest.approx(np.max(np.abs(0.1 * xs ** 2 - 0.1)))
