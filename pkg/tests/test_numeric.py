import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multirenorm import numeric


def test_bisect_double_and_multiprecision():
    g = lambda x: x * x - 2
    assert numeric.bisect(g, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-15)
    with mpmath.workprec(200):
        r = numeric.bisect(g, 0, 2, bits=200)
        assert abs(r - mpmath.sqrt(2)) < mpmath.mpf(2) ** -190
    with pytest.raises(ValueError):
        numeric.bisect(g, 2, 3)


def test_bisect_endpoint_roots():
    assert numeric.bisect(lambda x: x, 0.0, 1.0) == 0.0
    assert numeric.bisect(lambda x: x - 1, 0.0, 1.0) == 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-0.95, 0.95), min_size=1, max_size=5, unique=True))
def test_isolate_roots_matches_numpy(rs):
    rs = sorted(rs)
    if min(np.diff(rs), default=1) < 1e-2:
        return
    coeffs = np.polynomial.polynomial.polyfromroots(rs)
    g = lambda x: np.polynomial.polynomial.polyval(x, coeffs)
    found = numeric.isolate_roots(g, g, -1, 1, cells=2048)
    assert len(found) == len(rs)
    assert np.allclose(found, rs, atol=1e-9)


def test_sign_brackets_with_exact_zero():
    xs = np.array([0.0, 1.0, 2.0, 3.0])
    assert numeric.sign_brackets(xs, [-1, 0, 1, -1]) == [(1.0, 1.0), (2.0, 3.0)]


def test_precision_helpers():
    assert not numeric.uses_mp(53) and numeric.uses_mp(54)
    assert numeric.unit_roundoff(53) == 2.0 ** -52
    assert isinstance(numeric.to_real(1, 100), mpmath.mpf)
    assert numeric.is_finite(np.array([1.0, 2.0])) and not numeric.is_finite(float("inf"))
