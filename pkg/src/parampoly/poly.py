"""Sparse multivariate polynomials over a pluggable coefficient field.

A polynomial is a map from exponent tuples to nonzero coefficients.  The
coefficient field is any object exposing ``zero``, ``one`` and ``convert``;
its elements must support ``+ - * /``, unary minus, ``==`` and truthiness
(falsy iff zero).  ``fractions.Fraction`` qualifies directly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

Monomial = tuple  # tuple[int, ...], one exponent per ring variable


class PolynomialError(ValueError):
    pass


class RingMismatch(PolynomialError):
    pass


class ParseError(PolynomialError):
    pass


# ---------------------------------------------------------------------------
# monomials


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def mono_div(a: Monomial, b: Monomial) -> Monomial:
    """a / b, assuming b divides a."""
    return tuple(x - y for x, y in zip(a, b))


def mono_divides(b: Monomial, a: Monomial) -> bool:
    return all(y <= x for x, y in zip(a, b))


def mono_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def mono_gcd(a: Monomial, b: Monomial) -> Monomial:
    return tuple(min(x, y) for x, y in zip(a, b))


def mono_degree(a: Monomial) -> int:
    return sum(a)


def check_exponents(m: Monomial) -> Monomial:
    for e in m:
        if not isinstance(e, int) or e < 0:
            raise PolynomialError(f"invalid exponent vector {m!r}")
    return m


# ---------------------------------------------------------------------------
# monomial orders


ORDER_KINDS = ("grevlex", "lex", "grlex")


@dataclass(frozen=True)
class MonomialOrder:
    """Total, multiplicative well-order on monomials.

    ``permutation`` lists ring-variable indices from most to least
    significant; ``None`` keeps ring order.
    """

    kind: str = "grevlex"
    permutation: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ORDER_KINDS:
            raise ValueError(f"unknown monomial order {self.kind!r}")

    def key(self, m: Monomial):
        if self.permutation is not None:
            m = tuple(m[i] for i in self.permutation)
        if self.kind == "grevlex":
            return (sum(m), tuple(-e for e in reversed(m)))
        if self.kind == "grlex":
            return (sum(m), m)
        return m

    def keyfunc(self) -> Callable[[Monomial], object]:
        if self.permutation is None:
            if self.kind == "grevlex":
                return lambda m: (sum(m), tuple(-e for e in reversed(m)))
            if self.kind == "grlex":
                return lambda m: (sum(m), m)
            return lambda m: m
        return self.key

    def compare(self, a: Monomial, b: Monomial) -> int:
        ka, kb = self.key(a), self.key(b)
        return (ka > kb) - (ka < kb)

    def __str__(self):
        return self.kind


GREVLEX = MonomialOrder("grevlex")
LEX = MonomialOrder("lex")
GRLEX = MonomialOrder("grlex")


def order_from_name(name: str) -> MonomialOrder:
    return MonomialOrder(name)


# ---------------------------------------------------------------------------
# rational field


class RationalField:
    """The field QQ, with elements represented by ``Fraction``."""

    name = "QQ"
    zero = Fraction(0)
    one = Fraction(1)

    def convert(self, c) -> Fraction:
        if isinstance(c, Fraction):
            return c
        if isinstance(c, int):
            return Fraction(c)
        if isinstance(c, float):
            raise TypeError("floating-point coefficients are not exact; use Fraction")
        if hasattr(c, "numerator") and hasattr(c, "denominator"):
            return Fraction(c.numerator, c.denominator)
        raise TypeError(f"cannot convert {c!r} to QQ")

    def format(self, c: Fraction) -> str:
        return str(c)

    def parse(self, text: str) -> Fraction:
        return Fraction(text)

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash("QQ")

    def __repr__(self):
        return "QQ"


QQ = RationalField()


# ---------------------------------------------------------------------------
# rings and polynomials


class PolyRing:
    """Polynomial ring over ``field`` in the named variables (order fixed)."""

    def __init__(self, names: Sequence[str], field=QQ):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise PolynomialError(f"duplicate variable names in {names}")
        self.names = names
        self.field = field
        self.nvars = len(names)
        self.index = {n: i for i, n in enumerate(names)}
        self.unit = (0,) * self.nvars

    def __eq__(self, other):
        return (
            isinstance(other, PolyRing)
            and self.names == other.names
            and self.field == other.field
        )

    def __hash__(self):
        return hash((self.names, self.field))

    def __repr__(self):
        return f"PolyRing({', '.join(self.names)}; {self.field!r})"

    def __getstate__(self):
        return {"names": self.names, "field": self.field}

    def __setstate__(self, state):
        self.__init__(state["names"], state["field"])

    @property
    def zero(self) -> Polynomial:
        return Polynomial(self, {})

    @property
    def one(self) -> Polynomial:
        return self.const(1)

    def const(self, c) -> Polynomial:
        c = self.field.convert(c)
        return Polynomial(self, {self.unit: c} if c else {})

    def gen(self, name: str) -> Polynomial:
        i = self.index[name]
        m = tuple(1 if j == i else 0 for j in range(self.nvars))
        return Polynomial(self, {m: self.field.one})

    def gens(self) -> tuple[Polynomial, ...]:
        return tuple(self.gen(n) for n in self.names)

    def monomial(self, m: Monomial, c=1) -> Polynomial:
        c = self.field.convert(c)
        return Polynomial(self, {check_exponents(tuple(m)): c} if c else {})

    def from_dict(self, terms: Mapping[Monomial, object]) -> Polynomial:
        conv = self.field.convert
        out = {}
        for m, c in terms.items():
            c = conv(c)
            if c:
                out[check_exponents(tuple(m))] = c
        return Polynomial(self, out)

    def parse(self, text: str) -> Polynomial:
        return parse_polynomial(text, self)

    def __call__(self, value) -> Polynomial:
        if isinstance(value, Polynomial):
            if value.ring != self:
                raise RingMismatch(f"{value.ring!r} vs {self!r}")
            return value
        if isinstance(value, str):
            return self.parse(value)
        return self.const(value)


class Polynomial:
    """Immutable sparse polynomial; ``terms`` maps exponent tuples to coefficients."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: PolyRing, terms: dict):
        self.ring = ring
        self.terms = terms
        self._hash = None

    # -- construction helpers ------------------------------------------------

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.ring is not self.ring and other.ring != self.ring:
                raise RingMismatch(f"{self.ring!r} vs {other.ring!r}")
            return other
        return self.ring.const(other)

    def _new(self, terms: dict) -> Polynomial:
        return Polynomial(self.ring, terms)

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m)
            if s is None:
                terms[m] = c
            else:
                s = s + c
                if s:
                    terms[m] = s
                else:
                    del terms[m]
        return self._new(terms)

    __radd__ = __add__

    def __neg__(self):
        return self._new({m: -c for m, c in self.terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(self.ring.field.convert(other))
        other = self._coerce(other)
        if len(self.terms) < len(other.terms):
            a, b = self.terms, other.terms
        else:
            a, b = other.terms, self.terms
        terms: dict = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = tuple(x + y for x, y in zip(ma, mb))
                s = terms.get(m)
                terms[m] = ca * cb if s is None else s + ca * cb
        return self._new({m: c for m, c in terms.items() if c})

    __rmul__ = __mul__

    def scale(self, c) -> Polynomial:
        if not c:
            return self.ring.zero
        return self._new({m: v * c for m, v in self.terms.items()})

    def mul_term(self, mono: Monomial, c) -> Polynomial:
        if not c:
            return self.ring.zero
        return self._new(
            {tuple(x + y for x, y in zip(m, mono)): v * c for m, v in self.terms.items()}
        )

    def __truediv__(self, other):
        if isinstance(other, Polynomial):
            if other.is_constant() and not other.is_zero():
                other = other.terms[self.ring.unit]
            else:
                raise PolynomialError("division by a non-constant polynomial")
        try:
            c = self.ring.field.convert(other)
        except (TypeError, ValueError):
            return NotImplemented  # e.g. a rational function; let it handle the division
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        inv = self.ring.field.one / c
        return self.scale(inv)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise PolynomialError("exponent must be a non-negative integer")
        result = self.ring.one
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- comparison ------------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.ring == other.ring and self.terms == other.terms
        try:
            other = self.ring.const(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # -- inspection ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.ring.unit in self.terms)

    def constant_coeff(self):
        return self.terms.get(self.ring.unit, self.ring.field.zero)

    def coeff(self, m: Monomial):
        return self.terms.get(tuple(m), self.ring.field.zero)

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self.terms), default=-1)

    def degree(self, var: str | int) -> int:
        i = var if isinstance(var, int) else self.ring.index[var]
        return max((m[i] for m in self.terms), default=-1)

    def degree_in(self, indices: Iterable[int]) -> int:
        idx = tuple(indices)
        return max((sum(m[i] for i in idx) for m in self.terms), default=-1)

    def variables(self) -> tuple[str, ...]:
        used = set()
        for m in self.terms:
            used.update(i for i, e in enumerate(m) if e)
        return tuple(self.ring.names[i] for i in sorted(used))

    def sorted_terms(self, order: MonomialOrder = GREVLEX, reverse=True):
        key = order.keyfunc()
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=reverse)

    def leading_term(self, order: MonomialOrder = GREVLEX):
        """(monomial, coefficient) of the largest term under ``order``."""
        if not self.terms:
            raise PolynomialError("zero polynomial has no leading term")
        key = order.keyfunc()
        m = max(self.terms, key=key)
        return m, self.terms[m]

    def leading_monomial(self, order: MonomialOrder = GREVLEX) -> Monomial:
        return self.leading_term(order)[0]

    def leading_coefficient(self, order: MonomialOrder = GREVLEX):
        return self.leading_term(order)[1]

    def monic(self, order: MonomialOrder = GREVLEX) -> Polynomial:
        if not self.terms:
            return self
        lc = self.leading_coefficient(order)
        return self.scale(self.ring.field.one / lc)

    # -- calculus and evaluation ----------------------------------------------

    def diff(self, var: str | int) -> Polynomial:
        i = var if isinstance(var, int) else self.ring.index[var]
        terms = {}
        for m, c in self.terms.items():
            e = m[i]
            if e:
                terms[m[:i] + (e - 1,) + m[i + 1:]] = c * e
        return self._new(terms)

    def evaluate(self, values: Mapping[str, object] | Sequence):
        """Evaluate at a full point; ``values`` is a sequence or name->value map."""
        if isinstance(values, Mapping):
            values = [values[n] for n in self.ring.names]
        total = 0
        for m, c in self.terms.items():
            t = c
            for v, e in zip(values, m):
                if e:
                    t = t * v**e
            total = total + t
        return total

    def subs(self, values: Mapping[str, object]) -> Polynomial:
        """Substitute field constants for some variables (same ring, those exponents become 0)."""
        idx = {self.ring.index[k]: self.ring.field.convert(v) for k, v in values.items()}
        terms: dict = {}
        for m, c in self.terms.items():
            mm = list(m)
            for i, v in idx.items():
                if mm[i]:
                    c = c * v ** mm[i]
                    mm[i] = 0
            if not c:
                continue
            key = tuple(mm)
            s = terms.get(key)
            terms[key] = c if s is None else s + c
        return self._new({m: c for m, c in terms.items() if c})

    def compose(self, target: PolyRing, images: Mapping[str, Polynomial]) -> Polynomial:
        """Substitute polynomials of ``target`` for every variable of this ring."""
        gens = [target(images[n]) if n in images else target.gen(n) for n in self.ring.names]
        powers: list[dict[int, Polynomial]] = [{} for _ in gens]

        def power(i, e):
            cache = powers[i]
            if e not in cache:
                cache[e] = gens[i] ** e
            return cache[e]

        result = target.zero
        for m, c in self.sorted_terms():
            t = target.const(c)
            for i, e in enumerate(m):
                if e:
                    t = t * power(i, e)
            result = result + t
        return result

    def change_ring(self, target: PolyRing) -> Polynomial:
        """Re-embed into a ring whose variables are a superset (or equal set) of ours."""
        pos = [target.index[n] for n in self.ring.names]
        terms = {}
        conv = target.field.convert
        for m, c in self.terms.items():
            mm = [0] * target.nvars
            for i, e in zip(pos, m):
                mm[i] = e
            terms[tuple(mm)] = conv(c)
        return Polynomial(target, terms)

    # -- formatting --------------------------------------------------------------

    def __str__(self):
        return format_polynomial(self)

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)!r})"


# ---------------------------------------------------------------------------
# division


def reduce(p: Polynomial, basis: Sequence[Polynomial], order: MonomialOrder = GREVLEX):
    """Multivariate division of ``p`` by ``basis``.

    Returns ``(quotients, remainder)`` with ``p == sum(q*b) + remainder`` and no
    remainder term divisible by a leading monomial of the basis.  The leading
    term is always reduced first, trying basis elements in list order.
    """
    ring = p.ring
    if any(b.is_zero() for b in basis):
        raise PolynomialError("division by the zero polynomial")
    key = order.keyfunc()
    leads = [b.leading_term(order) for b in basis]
    quotients = [dict() for _ in basis]
    rest = dict(p.terms)
    remainder = {}
    one = ring.field.one
    while rest:
        m = max(rest, key=key)
        c = rest[m]
        for i, (lm, lc) in enumerate(leads):
            if mono_divides(lm, m):
                t = mono_div(m, lm)
                f = c * (one / lc) if lc != one else c
                q = quotients[i]
                q[t] = q.get(t, ring.field.zero) + f
                for bm, bc in basis[i].terms.items():
                    mm = mono_mul(bm, t)
                    v = rest.get(mm, ring.field.zero) - f * bc
                    if v:
                        rest[mm] = v
                    else:
                        rest.pop(mm, None)
                break
        else:
            remainder[m] = c
            del rest[m]
    qs = [Polynomial(ring, {m: c for m, c in q.items() if c}) for q in quotients]
    return qs, Polynomial(ring, remainder)


# ---------------------------------------------------------------------------
# text syntax


def _format_monomial(names, m) -> str:
    parts = []
    for n, e in zip(names, m):
        if e == 1:
            parts.append(n)
        elif e > 1:
            parts.append(f"{n}^{e}")
    return "*".join(parts)


def format_polynomial(p: Polynomial, order: MonomialOrder = GREVLEX) -> str:
    if not p.terms:
        return "0"
    field = p.ring.field
    exact_rational = isinstance(field, RationalField)
    pieces = []
    for m, c in p.sorted_terms(order):
        mono = _format_monomial(p.ring.names, m)
        if exact_rational:
            neg = c < 0
            a = -c if neg else c
            if mono:
                body = mono if a == 1 else f"{a}*{mono}"
            else:
                body = str(a)
        else:
            neg = False
            cs = field.format(c)
            if mono:
                body = mono if c == field.one else f"({cs})*{mono}"
            else:
                body = f"({cs})"
        if not pieces:
            pieces.append(("-" if neg else "") + body)
        else:
            pieces.append((" - " if neg else " + ") + body)
    return "".join(pieces)


_TOKEN = re.compile(
    r"\s*(?:(?P<dec>\d+\.\d*|\.\d+|\d+[eE][+-]?\d+)|(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt or mt.end() == pos:
            raise ParseError(f"unexpected character at {pos}: {text[pos:pos + 10]!r}")
        pos = mt.end()
        if mt.group("dec"):
            raise ParseError(
                f"decimal literal {mt.group('dec')!r} not allowed; write it as a rational like 1/10"
            )
        if mt.group("num"):
            out.append(("num", int(mt.group("num"))))
        elif mt.group("id"):
            out.append(("id", mt.group("id")))
        else:
            op = mt.group("op")
            if op == "**":
                raise ParseError("use '^' for powers")
            out.append(("op", op))
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, text: str, ring: PolyRing):
        self.toks = _tokenize(text)
        self.i = 0
        self.ring = ring
        self.text = text

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t != ("op", op):
            raise ParseError(f"expected {op!r} in {self.text!r}")

    def parse(self) -> Polynomial:
        p = self.expr()
        if self.peek()[0] != "end":
            raise ParseError(f"trailing input in {self.text!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant() or q.is_zero():
                    raise ParseError(f"division by a non-constant or zero in {self.text!r}")
                p = p / q.constant_coeff()
        return p

    def unary(self):
        t = self.peek()
        if t == ("op", "-"):
            self.take()
            return -self.unary()
        if t == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            t = self.take()
            if t[0] != "num":
                raise ParseError(f"exponent must be a non-negative integer literal in {self.text!r}")
            return base ** t[1]
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return self.ring.const(val)
        if kind == "id":
            if val not in self.ring.index:
                raise ParseError(f"unknown variable {val!r} (ring has {self.ring.names})")
            return self.ring.gen(val)
        if (kind, val) == ("op", "("):
            p = self.expr()
            self.expect(")")
            return p
        raise ParseError(f"unexpected token {val!r} in {self.text!r}")


def parse_polynomial(text: str, ring: PolyRing) -> Polynomial:
    """Parse the textual syntax: identifiers, integer literals, ``+ - * / ^`` and parentheses."""
    if not isinstance(text, str):
        raise ParseError(f"expected a string, got {type(text).__name__}")
    if not text.strip():
        raise ParseError("empty polynomial string")
    return _Parser(text, ring).parse()
