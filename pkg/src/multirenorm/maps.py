"""Multimodal maps of type N: factors, evaluation with jets, validation.

A map is an ordered tuple of even unimodal factors on [-1, 1], each fixing -1
and having a quadratic maximum at 0.  Factors are either explicit even
polynomials or lazy iterate segments over a coarser map; the latter are how
renormalization towers are stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import NonFiniteInput, OrbitEscape, ParameterOutOfRange
from .numeric import DOUBLE_BITS, bisect, is_finite, rsqrt, to_real, uses_mp, workprec

EVAL_TOL = 1e-9
ORBIT_CAP = 1 << 20


@dataclass(frozen=True)
class AffineMap:
    scale: float
    offset: float = 0.0

    def __post_init__(self):
        if self.scale == 0:
            raise ValueError("affine scale must be nonzero")

    def __call__(self, x):
        return self.scale * x + self.offset

    def inverse(self) -> "AffineMap":
        return AffineMap(1 / self.scale, -self.offset / self.scale)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self after inner."""
        return AffineMap(self.scale * inner.scale, self.scale * inner.offset + self.offset)

    @classmethod
    def normalizer(cls, z) -> "AffineMap":
        """The linear map sending 0 to 0 and z to -1."""
        return cls(-1 / z, 0 * z)

    def to_dict(self):
        return {"scale": float(self.scale), "offset": float(self.offset)}


def _compose_jet(outer, inner):
    """Chain rule for 2-jets: outer evaluated at inner's value."""
    g0, g1, g2 = outer
    _, h1, h2 = inner
    return g0, g1 * h1, g2 * h1 * h1 + g1 * h2


@dataclass(frozen=True)
class EvenPolynomial:
    """f(x) = sum_i coeffs[i] * x**(2*i)."""

    coeffs: tuple
    kind: str = field(default="even-polynomial", init=False)

    def value(self, x):
        u = x * x
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * u + c
        return acc

    def jet(self, x):
        # p(u), p'(u), p''(u) in u = x^2, then f' = 2x p', f'' = 2p' + 4x^2 p''
        u = x * x
        p = self.coeffs[-1] + 0 * u
        dp = 0 * u
        ddp = 0 * u
        for c in reversed(self.coeffs[:-1]):
            ddp = ddp * u + 2 * dp
            dp = dp * u + p
            p = p * u + c
        return p, 2 * x * dp, 2 * dp + 4 * u * ddp

    @property
    def critical_value(self):
        return self.coeffs[0]

    def inverse_right(self, y, bits=DOUBLE_BITS):
        """The x in [0, 1] with f(x) = y (f is decreasing there)."""
        if len(self.coeffs) == 2:
            c0, c2 = self.coeffs
            t = (y - c0) / c2
            if t < 0:
                t = 0 * t
            return rsqrt(t)
        return bisect(lambda t: self.value(t) - y, to_real(0, bits), to_real(1, bits), bits=bits)

    def to_dict(self, _bases=None):
        return {"kind": self.kind, "coeffs": [float(c) for c in self.coeffs]}

    def full_coefficients(self):
        out = np.zeros(2 * len(self.coeffs) - 1)
        out[::2] = [float(c) for c in self.coeffs]
        return out


@dataclass(frozen=True)
class IterateSegment:
    """outbound o F^count o inbound, F being the extended map of ``base``.

    Evaluation on real inputs uses |x|; the first base factor is even so this
    is exact, and it keeps evenness from depending on roundoff.
    """

    base: "MultimodalMap"
    start: int
    count: int
    inbound: AffineMap
    outbound: AffineMap
    kind: str = field(default="iterate-segment", init=False)

    def _through(self, y):
        n = self.base.n_type
        facs = self.base.factors
        for s in range(self.count):
            y = facs[(self.start + s) % n].value(y)
        return y

    def value(self, x):
        if not isinstance(x, (complex, np.complexfloating, mpmath.mpc)) and not (
            isinstance(x, np.ndarray) and np.iscomplexobj(x)
        ):
            x = abs(x)
        return self.outbound(self._through(self.inbound(x)))

    def jet(self, x):
        sgn = 1
        if x < 0:
            x, sgn = -x, -1
        n = self.base.n_type
        facs = self.base.factors
        a = self.inbound
        j = (a(x), a.scale + 0 * x, 0 * x)
        for s in range(self.count):
            j = _compose_jet(facs[(self.start + s) % n].jet(j[0]), j)
        b = self.outbound
        return b(j[0]), sgn * b.scale * j[1], b.scale * j[2]

    @property
    def critical_value(self):
        return self.value(0 * self.inbound.scale)

    def inverse_right(self, y, bits=DOUBLE_BITS):
        g = lambda t: self.value(t) - y
        return bisect(g, to_real(0, bits), to_real(1, bits), bits=bits)

    def to_dict(self, bases):
        key = id(self.base)
        if key not in bases:
            bases[key] = (len(bases), None)
            bases[key] = (bases[key][0], self.base.to_dict(_bases=bases, _nested=True))
        return {
            "kind": self.kind,
            "base": bases[key][0],
            "start": self.start,
            "count": self.count,
            "inbound": self.inbound.to_dict(),
            "outbound": self.outbound.to_dict(),
        }


@dataclass(frozen=True)
class MultimodalMap:
    factors: tuple
    precision_bits: int = DOUBLE_BITS

    @property
    def n_type(self) -> int:
        return len(self.factors)

    def factor(self, j):
        return self.factors[j % self.n_type]

    def __call__(self, x):
        return evaluate(self, x)

    def iterate(self, x, start: int, count: int):
        """F^count applied to (x, start); returns the x-coordinate."""
        n = self.n_type
        for s in range(count):
            x = self.factors[(start + s) % n].value(x)
        return x

    def composite_power(self, x, p: int):
        return self.iterate(x, 0, p * self.n_type)

    def is_polynomial(self) -> bool:
        return all(isinstance(f, EvenPolynomial) for f in self.factors)

    def tower_depth(self) -> int:
        f = self.factors[0]
        return 1 + f.base.tower_depth() if isinstance(f, IterateSegment) else 0

    def to_dict(self, _bases=None, _nested=False):
        top = _bases is None
        bases = {} if top else _bases
        doc = {
            "n_type": self.n_type,
            "factors": [f.to_dict(bases) for f in self.factors],
            "precision_bits": self.precision_bits,
        }
        if top and bases:
            doc["bases"] = [d for _, d in sorted(bases.values(), key=lambda t: t[0])]
        return doc


def map_from_dict(doc) -> MultimodalMap:
    bases_docs = doc.get("bases", [])
    built = {}

    def build(d):
        facs = []
        for fd in d["factors"]:
            if fd["kind"] == "even-polynomial":
                facs.append(EvenPolynomial(tuple(fd["coeffs"])))
            elif fd["kind"] == "iterate-segment":
                i = fd["base"]
                if i not in built:
                    built[i] = build(bases_docs[i])
                facs.append(IterateSegment(
                    built[i], fd["start"], fd["count"],
                    AffineMap(**fd["inbound"]), AffineMap(**fd["outbound"])))
            else:
                raise ValueError(f"unknown factor kind {fd['kind']!r}")
        return MultimodalMap(tuple(facs), d.get("precision_bits", DOUBLE_BITS))

    return build(doc)


def build_quadratic_family(b, precision_bits: int = DOUBLE_BITS) -> MultimodalMap:
    """Factors x -> b_j x^2 - b_j - 1."""
    b = list(np.atleast_1d(b)) if not isinstance(b, (list, tuple)) else list(b)
    if not b:
        raise ParameterOutOfRange("need at least one parameter")
    facs = []
    with workprec(precision_bits):
        for j, bj in enumerate(b):
            bj = to_real(bj, precision_bits)
            if not is_finite(bj):
                raise NonFiniteInput(f"b[{j}] is not finite")
            if -bj - 1 < 0:
                raise ParameterOutOfRange(
                    f"b[{j}]={float(bj)}: critical value -b-1 < 0", index=j, condition="f_j(0) >= 0")
            if bj < -2:
                raise ParameterOutOfRange(
                    f"b[{j}]={float(bj)}: critical value -b-1 > 1 leaves [-1,1]",
                    index=j, condition="f_j([-1,1]) in [-1,1]")
            facs.append(EvenPolynomial((-bj - 1, bj)))
    f = MultimodalMap(tuple(facs), precision_bits)
    rep = validate(f)
    if not rep.ok:
        raise ParameterOutOfRange(f"family member fails validation: {rep.failures()}")
    return f


def _prep(f: MultimodalMap, x):
    if not is_finite(x):
        raise NonFiniteInput("non-finite evaluation point")
    if uses_mp(f.precision_bits) and not isinstance(x, (mpmath.mpf, mpmath.mpc, np.ndarray)):
        x = mpmath.mpc(x) if isinstance(x, complex) else mpmath.mpf(x)
    return x


def evaluate(f: MultimodalMap, x, order: int = 0):
    """order-th derivative (order <= 2) of the composite at x."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    with workprec(f.precision_bits):
        x = _prep(f, x)
        if order == 0:
            return f.iterate(x, 0, f.n_type)
        j = (x, 1 + 0 * x, 0 * x)
        for fac in f.factors:
            j = _compose_jet(fac.jet(j[0]), j)
        return j[order]


def critical_orbit(f: MultimodalMap, length: int, cap: int = ORBIT_CAP, tol: float = EVAL_TOL):
    """[f^k(0) for k = 0..length]."""
    if length > cap:
        raise ValueError(f"orbit length {length} exceeds cap {cap}")
    with workprec(f.precision_bits):
        x = to_real(0, f.precision_bits)
        out = [x]
        for k in range(length):
            x = f.iterate(x, 0, f.n_type)
            if not abs(x) <= 1 + tol:
                raise OrbitEscape(f"iterate {k + 1} = {float(x)} left [-1,1]", step=k + 1)
            out.append(x)
    return out


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple  # (name, passed, witness)

    @property
    def ok(self) -> bool:
        return all(p for _, p, _ in self.checks)

    def failures(self):
        return [(n, w) for n, p, w in self.checks if not p]

    def get(self, name):
        for n, p, w in self.checks:
            if n == name:
                return p, w
        raise KeyError(name)


def validate(f: MultimodalMap, samples: int = 257, tol: float = EVAL_TOL) -> ValidationReport:
    checks = []
    with workprec(f.precision_bits):
        one = to_real(1, f.precision_bits)
        xs = [to_real(x, f.precision_bits) for x in np.linspace(-1, 1, samples)]
        fixes, even, crit, concave, rng = [], [], [], [], []
        for j, fac in enumerate(f.factors):
            v = fac.value(-one)
            if abs(v + 1) > tol:
                fixes.append((j, float(v)))
            worst = max(abs(fac.value(x) - fac.value(-x)) for x in xs)
            if isinstance(fac, IterateSegment):
                # evaluation is even by construction; compare the raw chain instead
                worst = max(abs(fac.outbound(fac._through(fac.inbound(x)))
                                - fac.outbound(fac._through(fac.inbound(-x)))) for x in xs)
            if worst > tol:
                even.append((j, float(worst)))
            c = fac.critical_value
            if c < -tol:
                crit.append((j, float(c)))
            d2 = fac.jet(0 * one)[2]
            if not d2 < 0:
                concave.append((j, float(d2)))
            vals = [fac.value(x) for x in xs] + [c]
            lo, hi = min(vals), max(vals)
            if lo < -1 - tol or hi > 1 + tol:
                rng.append((j, float(lo), float(hi)))
        checks.append(("fixes -1", not fixes, fixes[0][1] if fixes else None))
        checks.append(("even", not even, even[0] if even else None))
        checks.append(("critical value >= 0", not crit, crit[0] if crit else None))
        checks.append(("second derivative < 0", not concave, concave[0] if concave else None))
        checks.append(("range in [-1,1]", not rng, rng[0] if rng else None))
    return ValidationReport(tuple(checks))


def composite_polynomial(f: MultimodalMap) -> np.polynomial.Polynomial:
    """Coefficients of f_{N-1} o ... o f_0 for polynomial maps."""
    if not f.is_polynomial():
        raise TypeError("composite coefficients exist only for polynomial factors")
    P = np.polynomial.Polynomial
    acc = P([0.0, 1.0])
    for fac in f.factors:
        acc = P(fac.full_coefficients())(acc)
    return acc
