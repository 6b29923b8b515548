"""Shared fixtures and independent oracles (sympy for algebra, numpy for linear algebra)."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import HealthCheck, settings

from parampoly.compiler import compile_program
from parampoly.mpc import duffing, duffing_dynamics
from parampoly.poly import QQ, PolyRing

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def to_sympy(p, symbols=None):
    """Polynomial over QQ (or a RationalFunction coefficient field) -> sympy expression."""
    names = p.ring.names
    syms = symbols or sympy.symbols(names)
    expr = sympy.Integer(0)
    for m, c in p.terms.items():
        coef = coeff_to_sympy(c)
        term = coef
        for s, e in zip(syms, m):
            term *= s**e
        expr += term
    return sympy.expand(expr)


def coeff_to_sympy(c):
    if isinstance(c, Fraction):
        return sympy.Rational(c.numerator, c.denominator)
    if isinstance(c, int):
        return sympy.Integer(c)
    # RationalFunction
    return sympy.sympify(str(c).replace("^", "**"))


def random_poly(rng: random.Random, ring: PolyRing, nterms=4, maxdeg=3, coeff=5):
    terms = {}
    for _ in range(nterms):
        m = [0] * ring.nvars
        budget = rng.randint(0, maxdeg)
        for _ in range(budget):
            m[rng.randrange(ring.nvars)] += 1
        c = Fraction(rng.randint(-coeff, coeff), rng.randint(1, 3))
        if c:
            terms[tuple(m)] = terms.get(tuple(m), 0) + c
    return ring.from_dict({m: c for m, c in terms.items() if c})


@pytest.fixture(scope="session")
def duffing_expansion():
    return duffing()


@pytest.fixture(scope="session")
def duffing_compiled(duffing_expansion):
    return compile_program(duffing_expansion.program, control=duffing_dynamics().to_dict())


@pytest.fixture
def rng():
    return random.Random(12345)


@pytest.fixture
def R_uv():
    return PolyRing(("u", "v"), QQ)


# -- acceptance report ----------------------------------------------------------

ACCEPTANCE: dict = {}  # criterion -> list of (part, ok, detail)


@pytest.fixture
def acceptance():
    def record(criterion: str, part: str, ok: bool, detail: str = ""):
        ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c)):
        parts = ACCEPTANCE[crit]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAIL'}{' (' + d + ')' if d else ''}" for name, good, d in parts)
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} - {detail}")
