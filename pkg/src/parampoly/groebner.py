"""Buchberger's algorithm, normal forms and standard-monomial bases.

Coefficients are handled fraction-free: over QQ the working coefficients are
integers, over QQ(x) they are integer polynomials in the parameters.  Each
working polynomial is kept primitive (content divided out), and every
parameter polynomial the computation multiplies or divides by is recorded.
Those records are the validity certificates: if none of them vanishes at a
parameter value, every step specializes to a valid step over the reals and the
specialized result is a Groebner basis with the same leading monomials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd as igcd
from typing import Iterable, Sequence

from . import intpoly as zp
from .fields import RationalFunction, RationalFunctionField
from .poly import (
    GREVLEX,
    QQ,
    MonomialOrder,
    Polynomial,
    PolyRing,
    RationalField,
    mono_div,
    mono_divides,
    mono_lcm,
    mono_mul,
)

DEFAULT_BUDGET = 500_000


class GroebnerError(RuntimeError):
    pass


class NotZeroDimensional(GroebnerError):
    """Some unknown has no pure power among the leading monomials."""


class ResourceLimit(GroebnerError):
    """The configured reduction-step budget was exhausted."""


# ---------------------------------------------------------------------------
# coefficient domains for the fraction-free engine


class _IntegerDomain:
    """Working coefficients for QQ: Python ints."""

    parametric = False

    def __init__(self):
        self.one = 1

    def mul(self, a, b):
        return a * b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def is_unit(self, a):
        return a == 1 or a == -1

    def gcd(self, a, b):
        return igcd(a, b)

    def div(self, a, b):
        return a // b

    def content(self, coeffs: Iterable[int]) -> int:
        g = 0
        for c in coeffs:
            g = igcd(g, c)
            if g == 1:
                break
        return g

    def sign_normal(self, c) -> int:
        return -1 if c < 0 else 1

    def to_field(self, num, den):
        return Fraction(num, den)

    def from_field(self, coeffs: dict) -> tuple[dict, int]:
        return zp.clear_denominators(coeffs)


class _ParamDomain:
    """Working coefficients for QQ(x): integer polynomial dicts in the parameters."""

    parametric = True

    def __init__(self, field: RationalFunctionField):
        self.field = field
        self.n = field.nparams
        self.unit = (0,) * self.n
        self.one = {self.unit: 1}

    def mul(self, a, b):
        return zp.zmul(a, b)

    def sub(self, a, b):
        return zp.zsub(a, b)

    def neg(self, a):
        return zp.zneg(a)

    def is_unit(self, a):
        return len(a) == 1 and a.get(self.unit) in (1, -1)

    def gcd(self, a, b):
        return zp.zgcd(a, b)

    def div(self, a, b):
        return zp.zdivexact(a, b)

    def content(self, coeffs: Iterable[dict]) -> dict:
        cs = sorted(coeffs, key=len)
        g = cs[0]
        for c in cs[1:]:
            if self.is_unit(g):
                break
            g = zp.zgcd(g, c)
        return zp.znormalize_sign(g)

    def sign_normal(self, c) -> int:
        return -1 if c[max(c)] < 0 else 1

    def to_field(self, num, den):
        return RationalFunction(self.field, num, den)

    def from_field(self, coeffs: dict) -> tuple[dict, dict]:
        """Clear denominators: returns (dict mono -> int poly, common denominator poly)."""
        dens = []
        for c in coeffs.values():
            if not zp.zis_const(c.den) or c.den[self.unit] != 1:
                dens.append(c.den)
        if not dens:
            return {m: c.num for m, c in coeffs.items()}, self.one
        L = dens[0]
        for d in dens[1:]:
            if d == L:
                continue
            g = zp.zgcd(L, d)
            L = zp.zmul(L, zp.zdivexact(d, g))
        out = {}
        for m, c in coeffs.items():
            if c.den == L:
                out[m] = c.num
            else:
                out[m] = zp.zmul(c.num, zp.zdivexact(L, c.den))
        return out, L


def domain_for(field):
    if isinstance(field, RationalField):
        return _IntegerDomain()
    if isinstance(field, RationalFunctionField):
        return _ParamDomain(field)
    raise TypeError(f"unsupported coefficient field {field!r}")


# ---------------------------------------------------------------------------
# public types


@dataclass
class Ideal:
    """Ideal generated by polynomials whose ring variables are the unknowns."""

    generators: list
    ring: PolyRing

    def __post_init__(self):
        self.generators = [self.ring(g) for g in self.generators if not g.is_zero()]

    @property
    def unknowns(self) -> tuple[str, ...]:
        return self.ring.names

    @classmethod
    def from_polynomials(
        cls,
        polys: Sequence[Polynomial],
        unknowns: Sequence[str],
        parameters: Sequence[str] = (),
        field=None,
    ) -> Ideal:
        """Split polynomials over QQ[unknowns, parameters] into K[unknowns], K = QQ(parameters)."""
        params = tuple(parameters)
        if field is None:
            field = RationalFunctionField(params) if params else QQ
        ring = PolyRing(unknowns, field)
        gens = [split_parameters(p, ring) for p in polys]
        return cls(gens, ring)


def split_parameters(p: Polynomial, ring: PolyRing) -> Polynomial:
    """Move every non-unknown variable of ``p`` into the coefficient field of ``ring``."""
    field = ring.field
    src = p.ring.names
    upos = [src.index(n) for n in ring.names]
    if isinstance(field, RationalFunctionField):
        ppos = [src.index(n) for n in field.params]
    else:
        ppos = []
    used = set(upos) | set(ppos)
    for m in p.terms:
        for i, e in enumerate(m):
            if e and i not in used:
                raise ValueError(f"variable {src[i]!r} is neither an unknown nor a parameter")
    grouped: dict = {}
    for m, c in p.terms.items():
        um = tuple(m[i] for i in upos)
        pm = tuple(m[i] for i in ppos)
        grouped.setdefault(um, {})[pm] = c
    terms = {}
    for um, pterms in grouped.items():
        if isinstance(field, RationalFunctionField):
            coeff = field.from_polynomial(Polynomial(field.ring, pterms))
        else:
            (c,) = pterms.values()
            coeff = field.convert(c)
        if coeff:
            terms[um] = coeff
    return Polynomial(ring, terms)


@dataclass
class GroebnerBasis:
    elements: list
    order: MonomialOrder
    ring: PolyRing
    reduced: bool = True
    certificates: list = field(default_factory=list)  # parameter polynomials (intpoly dicts)
    _ff: list | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def leading_monomials(self) -> list[tuple]:
        return [g.leading_monomial(self.order) for g in self.elements]

    def fraction_free(self) -> list:
        if self._ff is None:
            dom = domain_for(self.ring.field)
            self._ff = [_primitive(dom, dom.from_field(g.terms)[0])[1] for g in self.elements]
        return self._ff


@dataclass
class StandardBasis:
    monomials: list
    ring: PolyRing

    @property
    def dimension(self) -> int:
        return len(self.monomials)

    def names(self) -> list[str]:
        return [format_monomial(self.ring.names, m) for m in self.monomials]


def format_monomial(names, m) -> str:
    parts = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e]
    return "*".join(parts) if parts else "1"


# ---------------------------------------------------------------------------
# fraction-free kernel


def _primitive(dom, f: dict):
    """Divide out the content; returns (content, primitive f with sign-normal lead).

    The sign is fixed on the largest monomial in plain tuple order, which is
    deterministic and independent of the monomial order in use.
    """
    if not f:
        return dom.one, f
    c = dom.content(f.values())
    lead = f[max(f)]
    if dom.sign_normal(lead) < 0:
        c = dom.neg(c)
    if dom.is_unit(c) and dom.sign_normal(c) > 0:
        return c, f
    return c, {m: dom.div(v, c) for m, v in f.items()}


class _Kernel:
    def __init__(self, ring: PolyRing, order: MonomialOrder, budget: int):
        self.ring = ring
        self.dom = domain_for(ring.field)
        self.order = order
        self.key = order.keyfunc()
        self.budget = budget
        self.steps = 0
        self.certs: dict = {}

    def note(self, c):
        """Record a parameter polynomial the computation relies on being nonzero."""
        if not self.dom.parametric or self.dom.is_unit(c):
            return
        if zp.zis_const(c):
            return
        c = zp.znormalize_sign(zp.zprimitive(c)[1])
        k = frozenset(c.items())
        if k not in self.certs:
            self.certs[k] = c

    def tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise ResourceLimit(f"Groebner step budget of {self.budget} exhausted")

    def lead(self, f: dict):
        m = max(f, key=self.key)
        return m, f[m]

    def reduce(self, f: dict, G: list, leads: list, full=True, track=False):
        """Fraction-free normal form of f modulo G.

        Returns (remainder, multiplier) with multiplier * f == remainder (mod G);
        ``multiplier`` is only accumulated when ``track`` is set.
        """
        dom = self.dom
        key = self.key
        f = dict(f)
        mult = dom.one
        bound = None  # only monomials strictly below this are still candidates
        while f:
            if bound is None:
                cands = f
            else:
                kb = key(bound)
                cands = [m for m in f if key(m) < kb]
                if not cands:
                    break
            m = max(cands, key=key)
            for (lm, lc), g in zip(leads, G):
                if mono_divides(lm, m):
                    break
            else:
                if not full:
                    break
                bound = m
                continue
            self.tick()
            c = f[m]
            t = mono_div(m, lm)
            h = dom.gcd(c, lc)
            a = lc if dom.is_unit(h) else dom.div(lc, h)
            b = c if dom.is_unit(h) else dom.div(c, h)
            if dom.sign_normal(a) < 0:
                a, b = dom.neg(a), dom.neg(b)
            if not dom.is_unit(a):
                self.note(a)
                f = {k: dom.mul(a, v) for k, v in f.items()}
                if track:
                    mult = dom.mul(mult, a)
            elif a != dom.one:
                f = {k: dom.neg(v) for k, v in f.items()}
                if track:
                    mult = dom.neg(mult)
            del f[m]
            for gm, gc in g.items():
                if gm == lm:
                    continue
                mm = mono_mul(gm, t)
                v = f.get(mm)
                prod = dom.mul(b, gc)
                v = dom.neg(prod) if v is None else dom.sub(v, prod)
                if v:
                    f[mm] = v
                else:
                    f.pop(mm, None)
        return f, mult

    def spoly(self, f: dict, lf, g: dict, lg) -> dict:
        dom = self.dom
        (mf, cf), (mg, cg) = lf, lg
        L = mono_lcm(mf, mg)
        tf, tg = mono_div(L, mf), mono_div(L, mg)
        h = dom.gcd(cf, cg)
        a = dom.div(cg, h)
        b = dom.div(cf, h)
        out: dict = {}
        for m, v in f.items():
            if m == mf:
                continue
            out[mono_mul(m, tf)] = dom.mul(a, v)
        for m, v in g.items():
            if m == mg:
                continue
            mm = mono_mul(m, tg)
            prod = dom.mul(b, v)
            w = out.get(mm)
            w = dom.neg(prod) if w is None else dom.sub(w, prod)
            if w:
                out[mm] = w
            else:
                out.pop(mm, None)
        return out

    def make_primitive(self, f: dict) -> dict:
        c, f = _primitive(self.dom, f)
        self.note(c)
        return f


def _is_constant_mono(m) -> bool:
    return not any(m)


def buchberger(
    ideal: Ideal | Sequence[Polynomial],
    order: MonomialOrder = GREVLEX,
    budget: int = DEFAULT_BUDGET,
) -> GroebnerBasis:
    """Reduced Groebner basis of ``ideal`` (the basis ``[1]`` for the unit ideal).

    Pair handling follows Gebauer-Moeller (product and chain criteria);
    pairs are processed by the normal strategy, smallest lcm first.
    """
    if not isinstance(ideal, Ideal):
        polys = list(ideal)
        if not polys:
            raise ValueError("cannot infer the ring of an empty generator list")
        ideal = Ideal(polys, polys[0].ring)
    ring = ideal.ring
    K = _Kernel(ring, order, budget)
    dom = K.dom
    key = K.key

    gens = []
    for g in ideal.generators:
        ff, _den = dom.from_field(g.terms)
        gens.append(K.make_primitive(ff))
    # canonical processing order: independent of the caller's generator order
    gens.sort(key=lambda f: (key(K.lead(f)[0]), _sort_token(f)))

    F: list = []  # every polynomial ever installed
    leads: list = []
    active: list = []  # indices of F forming the current basis
    pairs: list = []  # (lcm key, i, j, lcm)

    def unit_basis():
        return GroebnerBasis([ring.one], order, ring, True, [], [{ring.unit: dom.one}])

    def update(h: dict):
        """Gebauer-Moeller installation of h (product and chain criteria)."""
        nonlocal active, pairs
        lh = K.lead(h)
        mh = lh[0]
        K.note(lh[1])
        k = len(F)
        F.append(h)
        leads.append(lh)
        C = [(i, mono_lcm(leads[i][0], mh)) for i in active]
        D: list = []
        while C:
            i, L = C.pop(0)
            coprime = L == mono_mul(leads[i][0], mh)
            if coprime or not (
                any(mono_divides(L2, L) for _, L2 in C)
                or any(mono_divides(L2, L) for _, L2 in D)
            ):
                D.append((i, L))
        E = [
            (key(L), i, k, L)
            for i, L in D
            if L != mono_mul(leads[i][0], mh)
        ]
        kept = []
        for p in pairs:
            _, i, j, L = p
            if (
                mono_divides(mh, L)
                and mono_lcm(leads[i][0], mh) != L
                and mono_lcm(leads[j][0], mh) != L
            ):
                continue
            kept.append(p)
        pairs = kept + E
        active = [i for i in active if not mono_divides(mh, leads[i][0])] + [k]

    def current():
        return [F[i] for i in active], [leads[i] for i in active]

    def install(f: dict):
        """Reduce, make primitive and install; True when the ideal turned out to be (1)."""
        AG, AL = current()
        r, _ = K.reduce(f, AG, AL) if AG else (f, None)
        if not r:
            return False
        r = K.make_primitive(r)
        if _is_constant_mono(K.lead(r)[0]):
            return True
        update(r)
        return False

    for g in gens:
        if g and install(g):
            return unit_basis()

    while pairs:
        best = min(range(len(pairs)), key=lambda t: pairs[t][:3])
        _, i, j, L = pairs.pop(best)
        s = K.spoly(F[i], leads[i], F[j], leads[j])
        if s and install(s):
            return unit_basis()

    AG, AL = current()
    return _interreduce(K, AG, AL, ring, order)


def _sort_token(f: dict):
    return tuple(sorted(f))


def _interreduce(K: _Kernel, G: list, leads: list, ring: PolyRing, order) -> GroebnerBasis:
    key = K.key
    # minimal basis: drop elements whose lead is divisible by another lead
    items = sorted(zip(G, leads), key=lambda t: key(t[1][0]))
    minimal = []
    for g, l in items:
        if any(mono_divides(l2[0], l[0]) for _, l2 in minimal):
            continue
        minimal.append((g, l))
    reduced = []
    for idx, (g, l) in enumerate(minimal):
        others = [h for j, (h, _) in enumerate(minimal) if j != idx]
        olead = [l2 for j, (_, l2) in enumerate(minimal) if j != idx]
        # lead of g is irreducible by the others; reduce its tail
        r, _ = K.reduce(g, others, olead)
        r = K.make_primitive(r)
        reduced.append(r)
    dom = K.dom
    elements = []
    ff = []
    for r in reduced:
        lm, lc = K.lead(r)
        K.note(lc)
        terms = {m: dom.to_field(v, lc) for m, v in r.items()}
        elements.append(Polynomial(ring, terms))
        ff.append(r)
    order_idx = sorted(range(len(elements)), key=lambda i: key(elements[i].leading_monomial(order)))
    elements = [elements[i] for i in order_idx]
    ff = [ff[i] for i in order_idx]
    certs = sorted(K.certs.values(), key=_cert_sort_key)
    return GroebnerBasis(elements, order, ring, True, certs, ff)


def _cert_sort_key(c: dict):
    return (zp.zdegree(c), len(c), sorted(c.items()))


# ---------------------------------------------------------------------------
# queries on a basis


def is_trivial(gb: GroebnerBasis) -> bool:
    return len(gb.elements) == 1 and gb.elements[0].is_constant() and not gb.elements[0].is_zero()


def is_zero_dimensional(gb: GroebnerBasis) -> bool:
    if is_trivial(gb):
        return True
    return _pure_powers(gb) is not None


def _pure_powers(gb: GroebnerBasis):
    n = gb.ring.nvars
    bounds = [None] * n
    for m in gb.leading_monomials():
        nz = [i for i, e in enumerate(m) if e]
        if len(nz) == 1:
            i = nz[0]
            if bounds[i] is None or m[i] < bounds[i]:
                bounds[i] = m[i]
    if any(b is None for b in bounds):
        return None
    return bounds


def standard_monomials(gb: GroebnerBasis) -> StandardBasis:
    """Monomials divisible by no leading monomial, ascending in the basis order."""
    if is_trivial(gb):
        return StandardBasis([], gb.ring)
    bounds = _pure_powers(gb)
    if bounds is None:
        missing = [gb.ring.names[i] for i in range(gb.ring.nvars) if not _has_pure_power(gb, i)]
        raise NotZeroDimensional(f"no pure power among leading monomials for {missing}")
    lms = gb.leading_monomials()
    out = []
    for m in itertools.product(*(range(b) for b in bounds)):
        if not any(mono_divides(l, m) for l in lms):
            out.append(tuple(m))
    out.sort(key=gb.order.keyfunc())
    return StandardBasis(out, gb.ring)


def _has_pure_power(gb, i) -> bool:
    for m in gb.leading_monomials():
        if m[i] and sum(m) == m[i]:
            return True
    return False


def solution_count(gb: GroebnerBasis) -> int:
    """Number of solutions with multiplicity: the standard-monomial count."""
    return standard_monomials(gb).dimension


def normal_form(p: Polynomial, gb: GroebnerBasis) -> Polynomial:
    """Unique remainder of ``p`` modulo the basis."""
    num, den = normal_form_ff(p, gb)
    dom = domain_for(gb.ring.field)
    return Polynomial(gb.ring, {m: dom.to_field(v, den) for m, v in num.items()})


def normal_form_ff(p: Polynomial, gb: GroebnerBasis, kernel: _Kernel | None = None):
    """Fraction-free normal form: (remainder dict, scalar d) with NF(p) = remainder / d."""
    if p.ring != gb.ring:
        raise ValueError("polynomial and basis live in different rings")
    K = kernel or _Kernel(gb.ring, gb.order, DEFAULT_BUDGET)
    dom = K.dom
    ff, den = dom.from_field(p.terms)
    if not ff:
        return {}, dom.one
    G = gb.fraction_free()
    leads = [K.lead(g) for g in G]
    r, mult = K.reduce(ff, G, leads, full=True, track=True)
    return r, dom.mul(mult, den)


def s_polynomial(f: Polynomial, g: Polynomial, order: MonomialOrder = GREVLEX) -> Polynomial:
    """Field-level S-polynomial (used by certificate checks)."""
    mf, cf = f.leading_term(order)
    mg, cg = g.leading_term(order)
    L = mono_lcm(mf, mg)
    one = f.ring.field.one
    return f.mul_term(mono_div(L, mf), one / cf) - g.mul_term(mono_div(L, mg), one / cg)


def is_groebner(elements: Sequence[Polynomial], order: MonomialOrder = GREVLEX) -> bool:
    """Exact check: every pairwise S-polynomial reduces to zero."""
    from .poly import reduce as divide

    elems = [e for e in elements if not e.is_zero()]
    for i in range(len(elems)):
        for j in range(i + 1, len(elems)):
            s = s_polynomial(elems[i], elems[j], order)
            if s.is_zero():
                continue
            _, r = divide(s, elems, order)
            if not r.is_zero():
                return False
    return True


def is_reduced(gb: GroebnerBasis) -> bool:
    order = gb.order
    lms = gb.leading_monomials()
    for i, g in enumerate(gb.elements):
        if g.leading_coefficient(order) != gb.ring.field.one:
            return False
        for m in g.terms:
            for j, l in enumerate(lms):
                if j != i and mono_divides(l, m):
                    return False
    return True
