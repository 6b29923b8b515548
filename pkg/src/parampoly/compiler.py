"""Offline phase: active-set KKT sub-ideals, their Groebner bases and companion matrices."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from . import intpoly as zp
from .fields import RationalFunction, RationalFunctionField
from .groebner import (
    DEFAULT_BUDGET,
    GroebnerBasis,
    Ideal,
    NotZeroDimensional,
    ResourceLimit,
    StandardBasis,
    _Kernel,
    buchberger,
    is_trivial,
    normal_form_ff,
    split_parameters,
    standard_monomials,
)
from .poly import GREVLEX, QQ, MonomialOrder, Polynomial, PolyRing

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_MAX_CONSTRAINTS = 20


class CompileError(RuntimeError):
    def __init__(self, message, mask=None):
        super().__init__(message if mask is None else f"active set {mask}: {message}")
        self.mask = mask


@dataclass(frozen=True)
class VariableSpace:
    decision_names: tuple
    multiplier_names: tuple
    parameter_names: tuple

    def __post_init__(self):
        allnames = self.decision_names + self.multiplier_names + self.parameter_names
        if len(set(allnames)) != len(allnames):
            raise ValueError(f"variable names must be unique: {allnames}")

    @classmethod
    def for_program(cls, decision, parameters, q: int, prefix="mu"):
        decision, parameters = tuple(decision), tuple(parameters)
        taken = set(decision) | set(parameters)
        while any(f"{prefix}{i}" in taken for i in range(q)):
            prefix = "_" + prefix
        return cls(decision, tuple(f"{prefix}{i}" for i in range(q)), parameters)

    @property
    def base_names(self):
        return self.decision_names + self.parameter_names

    @property
    def full_names(self):
        return self.decision_names + self.multiplier_names + self.parameter_names


@dataclass
class ParametricProgram:
    """min_u J(u, x) subject to g_i(u, x) <= 0."""

    objective: Polynomial
    constraints: list
    space: VariableSpace

    def __post_init__(self):
        ring = self.base_ring
        self.objective = ring(self.objective)
        self.constraints = [ring(g) for g in self.constraints]

    @classmethod
    def from_strings(cls, decision, parameters, objective: str, constraints: Sequence[str]):
        space = VariableSpace.for_program(decision, parameters, len(constraints))
        ring = PolyRing(space.base_names, QQ)
        return cls(ring.parse(objective), [ring.parse(g) for g in constraints], space)

    @property
    def base_ring(self) -> PolyRing:
        return PolyRing(self.space.base_names, QQ)

    @property
    def full_ring(self) -> PolyRing:
        return PolyRing(self.space.full_names, QQ)

    @property
    def q(self) -> int:
        return len(self.constraints)

    @property
    def m(self) -> int:
        return len(self.space.decision_names)


@dataclass(frozen=True)
class ActiveSet:
    mask: int
    q: int

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.q) if self.mask >> i & 1)

    @property
    def p(self) -> int:
        return bin(self.mask).count("1")

    def bits(self) -> str:
        return "".join("1" if self.mask >> i & 1 else "0" for i in range(self.q))


class Classification(str, Enum):
    INFEASIBLE = "Infeasible"
    CLOSED_FORM = "ClosedForm"
    COMPANION = "Companion"
    UNRESOLVED = "Unresolved"


@dataclass
class CompanionMatrix:
    for_variable: str
    entries: list  # l x l nested lists of RationalFunction (or Fraction over QQ)

    @property
    def size(self) -> int:
        return len(self.entries)


@dataclass
class SubVarietyRecord:
    active_set: ActiveSet
    classification: Classification
    unknowns: tuple
    solution_count: int = 0
    closed_form: dict | None = None
    matrices: list | None = None
    standard_basis: StandardBasis | None = None
    validity_certificates: list = field(default_factory=list)  # RationalFunction values
    note: str = ""

    @property
    def mask(self) -> int:
        return self.active_set.mask

    def matrix(self, name: str) -> CompanionMatrix:
        for M in self.matrices or []:
            if M.for_variable == name:
                return M
        raise KeyError(name)


@dataclass
class CompiledProblem:
    program: ParametricProgram
    records: list
    order: MonomialOrder = GREVLEX
    enumerated: int = 0
    infeasible: int = 0
    format_version: int = FORMAT_VERSION
    compile_seconds: float = 0.0
    control: dict | None = None  # optional control-problem metadata for simulation

    @property
    def unresolved(self) -> list:
        return [r for r in self.records if r.classification is Classification.UNRESOLVED]

    def counts(self) -> dict:
        out = {c.value: 0 for c in Classification}
        out[Classification.INFEASIBLE.value] = self.infeasible
        for r in self.records:
            out[r.classification.value] += 1
        return out


# ---------------------------------------------------------------------------


def enumerate_active_sets(q: int, cap: int = DEFAULT_MAX_CONSTRAINTS) -> list[ActiveSet]:
    if q < 0:
        raise ValueError("negative constraint count")
    if q > cap:
        raise CompileError(f"{q} constraints exceed the enumeration cap of {cap} (2^{q} active sets)")
    return [ActiveSet(mask, q) for mask in range(1 << q)]


def kkt_generators(program: ParametricProgram, a: ActiveSet) -> tuple[list, tuple]:
    """Sub-ideal generators over QQ[u, mu, x] and the unknown names for active set ``a``.

    Stationarity rows come first (one per decision variable), then the
    active constraints themselves.  Inactive multipliers are identically zero.
    """
    space = program.space
    full = program.full_ring
    J = program.objective.change_ring(full)
    active = a.indices
    gs = [program.constraints[i].change_ring(full) for i in active]
    mus = [full.gen(space.multiplier_names[i]) for i in active]
    gens = []
    for u in space.decision_names:
        row = J.diff(u)
        for mu, g in zip(mus, gs):
            row = row + mu * g.diff(u)
        gens.append(row)
    gens.extend(gs)
    unknowns = space.decision_names + tuple(space.multiplier_names[i] for i in active)
    return gens, unknowns


def parameter_field(program: ParametricProgram):
    params = program.space.parameter_names
    return RationalFunctionField(params) if params else QQ


def kkt_subideal(program: ParametricProgram, a: ActiveSet) -> Ideal:
    gens, unknowns = kkt_generators(program, a)
    ring = PolyRing(unknowns, parameter_field(program))
    return Ideal([split_parameters(g, ring) for g in gens], ring)


def classify_and_build(
    ideal: Ideal,
    order: MonomialOrder = GREVLEX,
    budget: int = DEFAULT_BUDGET,
    active_set: ActiveSet | None = None,
) -> SubVarietyRecord:
    """Groebner basis, classification and (closed form | companion matrices) for one sub-ideal."""
    ring = ideal.ring
    field_ = ring.field
    a = active_set if active_set is not None else ActiveSet(0, 0)
    gb = buchberger(ideal, order, budget)
    if is_trivial(gb):
        return SubVarietyRecord(a, Classification.INFEASIBLE, ring.names)
    certs = [_cert_value(field_, c) for c in gb.certificates]
    if all(g.total_degree() <= 1 for g in gb.elements):
        sb = standard_monomials(gb)  # raises NotZeroDimensional for free unknowns
        values = _solve_linear(gb)
        rec = SubVarietyRecord(
            a,
            Classification.CLOSED_FORM,
            ring.names,
            solution_count=sb.dimension,
            closed_form=values,
            standard_basis=sb,
        )
        rec.validity_certificates = _merge_certs(certs, _denominators(field_, values.values()))
        return rec
    sb = standard_monomials(gb)
    matrices = companion_matrices(gb, sb, budget=budget)
    entries = [e for M in matrices for row in M.entries for e in row]
    rec = SubVarietyRecord(
        a,
        Classification.COMPANION,
        ring.names,
        solution_count=sb.dimension,
        matrices=matrices,
        standard_basis=sb,
    )
    rec.validity_certificates = _merge_certs(certs, _denominators(field_, entries))
    return rec


def _solve_linear(gb: GroebnerBasis) -> dict:
    """Read u_i = value off a reduced, linear, zero-dimensional basis."""
    ring = gb.ring
    values = {}
    unit = ring.unit
    for g in gb.elements:
        lm = g.leading_monomial(gb.order)
        (i,) = [k for k, e in enumerate(lm) if e]
        tail = [m for m in g.terms if m != lm and m != unit]
        if tail:
            raise NotZeroDimensional(f"linear basis element {g} is not of the form u - c")
        values[ring.names[i]] = -g.constant_coeff()
    return {n: values[n] for n in ring.names}


def companion_matrices(gb: GroebnerBasis, sb: StandardBasis, budget=DEFAULT_BUDGET) -> list:
    """Multiplication matrices M_v for every ring variable v.

    Row i holds the coordinates of NF(v * b_i) in the standard basis, so the
    vector of basis monomials evaluated at a root is a right eigenvector.
    """
    ring = gb.ring
    fld = ring.field
    basis = sb.monomials
    pos = {m: j for j, m in enumerate(basis)}
    l = len(basis)
    K = _Kernel(ring, gb.order, budget)
    cache: dict = {}

    def coords(mono):
        if mono in pos:
            row = [fld.zero] * l
            row[pos[mono]] = fld.one
            return row
        if mono not in cache:
            p = Polynomial(ring, {mono: fld.one})
            num, den = normal_form_ff(p, gb, K)
            row = [fld.zero] * l
            for m, v in num.items():
                if m not in pos:
                    raise NotZeroDimensional(f"normal form term {m} is not standard")
                row[pos[m]] = K.dom.to_field(v, den)
            cache[mono] = row
        return list(cache[mono])

    mats = []
    for k, name in enumerate(ring.names):
        e = tuple(1 if j == k else 0 for j in range(ring.nvars))
        rows = [coords(tuple(a + b for a, b in zip(bm, e))) for bm in basis]
        mats.append(CompanionMatrix(name, rows))
    return mats


def _cert_value(fld, c: dict):
    if isinstance(fld, RationalFunctionField):
        return RationalFunction(fld, c, zp.zconst(1, fld.nparams))
    return fld.convert(c)


def _denominators(fld, values) -> list:
    if not isinstance(fld, RationalFunctionField):
        return []
    out = []
    for v in values:
        if not v.is_polynomial():
            out.append(RationalFunction(fld, v.den, zp.zconst(1, fld.nparams)))
    return out


def _merge_certs(*groups) -> list:
    seen = {}
    for group in groups:
        for c in group:
            if isinstance(c, RationalFunction):
                if c.is_constant():
                    continue
                key = (frozenset(zp.zprimitive(c.num)[1].items()), frozenset(c.den.items()))
            else:
                continue
            if key not in seen:
                seen[key] = c
    return sorted(seen.values(), key=lambda c: (c.degree(), len(c.num), str(c)))


# ---------------------------------------------------------------------------


def _compile_one(args):
    program, mask, order, budget = args
    a = ActiveSet(mask, program.q)
    ideal = kkt_subideal(program, a)
    t0 = time.perf_counter()
    try:
        rec = classify_and_build(ideal, order, budget, a)
    except ResourceLimit as exc:
        log.warning("active set %s unresolved: %s", a.bits(), exc)
        rec = SubVarietyRecord(a, Classification.UNRESOLVED, ideal.unknowns, note=str(exc))
    except NotZeroDimensional as exc:
        raise CompileError(f"sub-ideal is not zero-dimensional ({exc})", a.bits()) from exc
    log.debug("mask %s -> %s in %.3fs", a.bits(), rec.classification.value, time.perf_counter() - t0)
    return rec


def compile_program(
    program: ParametricProgram,
    order: MonomialOrder = GREVLEX,
    jobs: int = 1,
    budget: int = DEFAULT_BUDGET,
    max_constraints: int = DEFAULT_MAX_CONSTRAINTS,
    control: dict | None = None,
) -> CompiledProblem:
    """Run the offline phase over all 2^q active sets."""
    t0 = time.perf_counter()
    sets = enumerate_active_sets(program.q, max_constraints)
    work = [(program, a.mask, order, budget) for a in sets]
    if jobs and jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_compile_one, work, chunksize=max(1, len(work) // (8 * jobs))))
    else:
        results = [_compile_one(w) for w in work]
    records = [r for r in results if r.classification is not Classification.INFEASIBLE]
    records.sort(key=lambda r: r.mask)
    out = CompiledProblem(
        program=program,
        records=records,
        order=order,
        enumerated=len(sets),
        infeasible=len(results) - len(records),
        control=control,
    )
    out.compile_seconds = time.perf_counter() - t0
    log.info(
        "compiled %d active sets: %s in %.1fs",
        len(sets),
        out.counts(),
        out.compile_seconds,
    )
    return out


compile = compile_program  # noqa: A001 - public name used by the CLI and docs
