"""Coefficient fields: QQ and the rational-function field QQ(x1, ..., xn).

Rational functions are stored as a reduced pair of integer-coefficient
polynomials (``intpoly`` dicts) whose grevlex-leading denominator coefficient
is positive.  The public ``numerator`` / ``denominator`` views are rational
polynomials with a monic denominator.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as igcd
from typing import Sequence

from . import intpoly as zp
from .poly import (
    QQ,
    ParseError,
    Polynomial,
    PolyRing,
    RationalField,
    _Parser,
    _tokenize,
)

__all__ = [
    "QQ",
    "RationalField",
    "RationalFunction",
    "RationalFunctionField",
    "DenominatorVanishes",
    "poly_gcd",
    "TAU_DEN",
]

TAU_DEN = 1e-12


class DenominatorVanishes(ArithmeticError):
    """A denominator is numerically zero at the requested specialization."""


def _grevlex_key(m):
    return (sum(m), tuple(-e for e in reversed(m)))


def _grevlex_lead(a: dict):
    return max(a, key=_grevlex_key)


def _to_int(p: Polynomial) -> tuple[dict, int]:
    return zp.clear_denominators(p.terms)


def poly_gcd(a: Polynomial, b: Polynomial, method: str = "auto") -> Polynomial:
    """gcd of two polynomials over QQ, monic in grevlex (zero iff both are zero)."""
    if a.ring != b.ring:
        raise ValueError("gcd of polynomials from different rings")
    za, _ = _to_int(a)
    zb, _ = _to_int(b)
    g = zp.zgcd(za, zb, method)
    if not g:
        return a.ring.zero
    lc = g[_grevlex_lead(g)]
    return Polynomial(a.ring, {m: Fraction(c, lc) for m, c in g.items()})


class RationalFunction:
    """Element of QQ(params): reduced num/den with positive grevlex-leading den coefficient."""

    __slots__ = ("field", "num", "den", "_hash")

    def __init__(self, field: RationalFunctionField, num: dict, den: dict, _reduced=False):
        self.field = field
        if not _reduced:
            num, den = _canonical(num, den, field.nparams)
        self.num = num
        self.den = den
        self._hash = None

    # -- public views ----------------------------------------------------------

    @property
    def numerator(self) -> Polynomial:
        lc = self.den[_grevlex_lead(self.den)]
        return Polynomial(self.field.ring, {m: Fraction(c, lc) for m, c in self.num.items()})

    @property
    def denominator(self) -> Polynomial:
        lc = self.den[_grevlex_lead(self.den)]
        return Polynomial(self.field.ring, {m: Fraction(c, lc) for m, c in self.den.items()})

    def is_polynomial(self) -> bool:
        return zp.zis_const(self.den)

    def is_constant(self) -> bool:
        return zp.zis_const(self.num) and zp.zis_const(self.den)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        unit = self.field.ring.unit
        return Fraction(self.num.get(unit, 0), self.den[unit])

    def degree(self) -> int:
        return max(zp.zdegree(self.num), zp.zdegree(self.den))

    # -- arithmetic ------------------------------------------------------------

    def _lift(self, other) -> RationalFunction:
        if isinstance(other, RationalFunction):
            if other.field is not self.field and other.field != self.field:
                raise ValueError("rational functions over different parameter sets")
            return other
        return self.field.convert(other)

    def _foreign(self, other) -> bool:
        return isinstance(other, Polynomial) and other.ring != self.field.ring

    def __add__(self, other):
        if self._foreign(other):
            return NotImplemented
        return _add(self, self._lift(other), 1)

    __radd__ = __add__

    def __sub__(self, other):
        if self._foreign(other):
            return NotImplemented
        return _add(self, self._lift(other), -1)

    def __rsub__(self, other):
        if self._foreign(other):
            return NotImplemented
        return self._lift(other) - self

    def __neg__(self):
        return RationalFunction(self.field, zp.zneg(self.num), self.den, _reduced=True)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if self._foreign(other):
            return NotImplemented
        return _mul(self, self._lift(other))

    __rmul__ = __mul__

    def inverse(self) -> RationalFunction:
        if not self.num:
            raise ZeroDivisionError("inversion of the zero rational function")
        num, den = self.den, self.num
        if den[_grevlex_lead(den)] < 0:
            num, den = zp.zneg(num), zp.zneg(den)
        return RationalFunction(self.field, num, den, _reduced=True)

    def __truediv__(self, other):
        if self._foreign(other):
            return NotImplemented
        other = self._lift(other)
        return _mul(self, other.inverse())

    def __rtruediv__(self, other):
        return self._lift(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("integer exponent required")
        if n < 0:
            return self.inverse() ** (-n)
        nv = self.field.nparams
        return RationalFunction(
            self.field, zp.zpow(self.num, n, nv), zp.zpow(self.den, n, nv), _reduced=True
        ) if self.num or n == 0 else self.field.zero

    # -- comparison --------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, RationalFunction):
            try:
                other = self.field.convert(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self.num.items()), frozenset(self.den.items())))
        return self._hash

    def __bool__(self):
        return bool(self.num)

    # -- evaluation --------------------------------------------------------------

    def evaluate_exact(self, point: Sequence) -> Fraction:
        pt = [Fraction(v) for v in point]
        d = _eval_fraction(self.den, pt)
        if d == 0:
            raise DenominatorVanishes(f"denominator of {self} vanishes at {tuple(point)}")
        return _eval_fraction(self.num, pt) / d

    def specialize(self, point: Sequence[float], tau: float = TAU_DEN) -> float:
        """Value at a float parameter point, correctly rounded from exact evaluation.

        Raises DenominatorVanishes when |den(x)| < tau * (1 + max |den coeff|)
        for the monic-normalized denominator.
        """
        if len(point) != self.field.nparams:
            raise ValueError(f"expected {self.field.nparams} parameter values, got {len(point)}")
        q, ints = _common_dyadic(point)
        nval, dn = _eval_scaled(self.num, ints, q)
        dval, dd = _eval_scaled(self.den, ints, q)
        # den(x) = dval / q^dd; compare against tau * (1 + max coeff) of the monic denominator
        lc = abs(self.den[_grevlex_lead(self.den)])
        bound = Fraction(tau) * (lc + max(abs(c) for c in self.den.values()))
        if Fraction(abs(dval), q**dd) < bound:
            raise DenominatorVanishes(
                f"denominator {self.denominator} vanishes at {tuple(point)}"
            )
        if not nval:
            return 0.0
        return (nval * q**dd) / (dval * q**dn)

    def __str__(self):
        return self.field.format(self)

    def __repr__(self):
        return f"RationalFunction({self.field.format(self)!r})"

    def __reduce__(self):
        return (_rebuild_rf, (self.field, self.num, self.den))


def _rebuild_rf(field, num, den):
    return RationalFunction(field, num, den, _reduced=True)


def _common_dyadic(point) -> tuple[int, list[int]]:
    fr = [Fraction(v) for v in point]
    q = 1
    for f in fr:
        q = q * f.denominator // igcd(q, f.denominator)
    return q, [int(f * q) for f in fr]


def _eval_scaled(a: dict, ints: list[int], q: int) -> tuple[int, int]:
    """Return (value * q^D, D) for value = a(ints / q), D = total degree of a."""
    D = zp.zdegree(a)
    if D < 0:
        return 0, 0
    total = 0
    cache: dict = {}
    qpow = [q**k for k in range(D + 1)]
    for m, c in a.items():
        t = c * qpow[D - sum(m)]
        for i, e in enumerate(m):
            if e:
                p = cache.get((i, e))
                if p is None:
                    p = cache[(i, e)] = ints[i] ** e
                t *= p
        total += t
    return total, D


def _eval_fraction(a: dict, pt: list[Fraction]) -> Fraction:
    total = Fraction(0)
    for m, c in a.items():
        t = Fraction(c)
        for v, e in zip(pt, m):
            if e:
                t *= v**e
        total += t
    return total


def _canonical(num: dict, den: dict, nparams: int) -> tuple[dict, dict]:
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return {}, zp.zconst(1, nparams)
    if zp.zis_const(den):
        (d,) = den.values()
        g = igcd(zp.zcontent(num), d)
        if d < 0:
            g = -g
        if g != 1:
            num = {m: c // g for m, c in num.items()}
            den = {m: c // g for m, c in den.items()}
        return num, den
    g = zp.zgcd(num, den)
    if not zp.zis_const(g) or g.get((0,) * nparams, 1) != 1:
        num = zp.zdivexact(num, g)
        den = zp.zdivexact(den, g)
    # integer content shared by both
    c = igcd(zp.zcontent(num), zp.zcontent(den))
    if c != 1:
        num = {m: v // c for m, v in num.items()}
        den = {m: v // c for m, v in den.items()}
    if den[_grevlex_lead(den)] < 0:
        num, den = zp.zneg(num), zp.zneg(den)
    return num, den


def _is_one(a: dict, unit) -> bool:
    return len(a) == 1 and a.get(unit) == 1


def _add(a: RationalFunction, b: RationalFunction, sign: int) -> RationalFunction:
    field = a.field
    bn = b.num if sign == 1 else zp.zneg(b.num)
    if not a.num:
        return RationalFunction(field, bn, b.den, _reduced=True)
    if not b.num:
        return a
    unit = field.ring.unit
    if zp.zis_const(a.den) and zp.zis_const(b.den):
        da, db = a.den[unit], b.den[unit]
        g = igcd(da, db)
        num = zp.zadd(zp.zscale(a.num, db // g), zp.zscale(bn, da // g))
        den = {unit: da // g * db}
        return RationalFunction(field, num, den)
    if a.den == b.den:
        return RationalFunction(field, zp.zadd(a.num, bn), a.den)
    g = zp.zgcd(a.den, b.den)
    if _is_one(g, unit):
        num = zp.zadd(zp.zmul(a.num, b.den), zp.zmul(bn, a.den))
        den = zp.zmul(a.den, b.den)
        # gcd(num, den) = 1 when the dens are coprime and both inputs are reduced
        if not num:
            return field.zero
        c = igcd(zp.zcontent(num), zp.zcontent(den))
        if c != 1:
            num = {m: v // c for m, v in num.items()}
            den = {m: v // c for m, v in den.items()}
        if den[_grevlex_lead(den)] < 0:
            num, den = zp.zneg(num), zp.zneg(den)
        return RationalFunction(field, num, den, _reduced=True)
    ad = zp.zdivexact(a.den, g)
    bd = zp.zdivexact(b.den, g)
    num = zp.zadd(zp.zmul(a.num, bd), zp.zmul(bn, ad))
    den = zp.zmul(ad, b.den)
    return RationalFunction(field, num, den)


def _mul(a: RationalFunction, b: RationalFunction) -> RationalFunction:
    field = a.field
    if not a.num or not b.num:
        return field.zero
    unit = field.ring.unit
    if zp.zis_const(a.den) and zp.zis_const(b.den):
        num = zp.zmul(a.num, b.num)
        den = {unit: a.den[unit] * b.den[unit]}
        return RationalFunction(field, num, den)
    # cross-cancel: gcd(a.num, b.den) and gcd(b.num, a.den)
    an, ad, bn, bd = a.num, a.den, b.num, b.den
    if not zp.zis_const(bd):
        g = zp.zgcd(an, bd)
        if not zp.zis_const(g):
            an, bd = zp.zdivexact(an, g), zp.zdivexact(bd, g)
    if not zp.zis_const(ad):
        g = zp.zgcd(bn, ad)
        if not zp.zis_const(g):
            bn, ad = zp.zdivexact(bn, g), zp.zdivexact(ad, g)
    num = zp.zmul(an, bn)
    den = zp.zmul(ad, bd)
    c = igcd(zp.zcontent(num), zp.zcontent(den))
    if c != 1:
        num = {m: v // c for m, v in num.items()}
        den = {m: v // c for m, v in den.items()}
    if den[_grevlex_lead(den)] < 0:
        num, den = zp.zneg(num), zp.zneg(den)
    return RationalFunction(field, num, den, _reduced=True)


class RationalFunctionField:
    """QQ(params): fractions of polynomials in the named parameters."""

    def __init__(self, params: Sequence[str]):
        self.params = tuple(params)
        self.ring = PolyRing(self.params, QQ)
        self.nparams = len(self.params)
        unit = self.ring.unit
        self.zero = RationalFunction(self, {}, {unit: 1}, _reduced=True)
        self.one = RationalFunction(self, {unit: 1}, {unit: 1}, _reduced=True)
        self.name = f"QQ({', '.join(self.params)})"

    def __eq__(self, other):
        return isinstance(other, RationalFunctionField) and self.params == other.params

    def __hash__(self):
        return hash(("RF", self.params))

    def __repr__(self):
        return self.name

    def __reduce__(self):
        return (RationalFunctionField, (self.params,))

    def gen(self, name: str) -> RationalFunction:
        return self.from_polynomial(self.ring.gen(name))

    def from_fraction_dicts(self, num: dict, den: dict) -> RationalFunction:
        return RationalFunction(self, num, den)

    def from_polynomial(self, p: Polynomial, den: Polynomial | None = None) -> RationalFunction:
        if p.ring != self.ring:
            p = p.change_ring(self.ring)
        zn, dn = _to_int(p)
        if den is None:
            return RationalFunction(self, zn, zp.zconst(dn, self.nparams))
        if den.ring != self.ring:
            den = den.change_ring(self.ring)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        zd, dd = _to_int(den)
        # (zn/dn) / (zd/dd) = zn*dd / (zd*dn)
        return RationalFunction(self, zp.zscale(zn, dd), zp.zscale(zd, dn))

    def convert(self, c) -> RationalFunction:
        if isinstance(c, RationalFunction):
            if c.field != self:
                raise ValueError(f"rational function over {c.field!r}, expected {self!r}")
            return c
        if isinstance(c, Polynomial):
            return self.from_polynomial(c)
        if isinstance(c, bool):
            raise TypeError("bool is not a field element")
        if isinstance(c, int):
            return RationalFunction(self, zp.zconst(c, self.nparams), zp.zconst(1, self.nparams), _reduced=True)
        if isinstance(c, Fraction):
            return RationalFunction(
                self,
                zp.zconst(c.numerator, self.nparams),
                zp.zconst(c.denominator, self.nparams),
                _reduced=True,
            )
        if isinstance(c, float):
            raise TypeError("floating-point coefficients are not exact; use Fraction")
        raise TypeError(f"cannot convert {c!r} to {self.name}")

    def format(self, r: RationalFunction) -> str:
        num, den = r.numerator, r.denominator
        if den == 1:
            return str(num)
        return f"({num})/({den})"

    def parse(self, text: str) -> RationalFunction:
        return parse_rational_function(text, self)


def parse_rational_function(text: str, field: RationalFunctionField) -> RationalFunction:
    """Parse polynomial syntax where ``/`` may divide by any nonzero expression."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty rational-function string")
    return _RFParser(text, field).parse()


class _RFParser(_Parser):
    def __init__(self, text, field: RationalFunctionField):
        self.toks = _tokenize(text)
        self.i = 0
        self.text = text
        self.field = field
        self.ring = _RFAlgebra(field)

    def term(self):
        p = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q:
                    raise ParseError(f"division by zero in {self.text!r}")
                p = p / q
        return p


class _RFAlgebra:
    def __init__(self, field):
        self.field = field
        self.index = field.ring.index

    def const(self, v):
        return self.field.convert(v)

    def gen(self, name):
        return self.field.gen(name)
