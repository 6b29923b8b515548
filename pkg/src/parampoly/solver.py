"""Online phase: specialize compiled records at a parameter value and pick the global minimizer.

The flow per query is

* specialize every record (certificate check first, exact fallback if one vanishes),
* closed-form records give one candidate directly; companion records go
  through a random combination of their matrices, its eigenvectors, and a
  Rayleigh read of every unknown (multipliers first),
* candidates are filtered (imaginary part, KKT residual, multiplier sign,
  feasibility, duplicates) and the survivor with the smallest objective wins.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .compiler import (
    ActiveSet,
    Classification,
    CompiledProblem,
    CompileError,
    ParametricProgram,
    SubVarietyRecord,
    classify_and_build,
    kkt_generators,
)
from .fields import TAU_DEN, DenominatorVanishes, RationalFunction
from .groebner import GroebnerError, Ideal
from .linalg import EigenError, joint_eigenvectors, rayleigh_value
from .poly import QQ, Polynomial, PolyRing

log = logging.getLogger(__name__)

DEFAULT_SEED = 20240917
ENV_PREFIX = "PARAMPOLY_TOL_"
SNAP_TOL = 1e-12


class SolverError(RuntimeError):
    pass


class NoFeasibleCandidate(SolverError):
    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates or []


class SpecializationFailure(SolverError):
    pass


@dataclass(frozen=True)
class Tolerances:
    imag: float = 1e-7
    res: float = 1e-6
    mu: float = 1e-8
    feas: float = 1e-8
    dup: float = 1e-7
    den: float = TAU_DEN

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and v > 0 and np.isfinite(v)):
                raise ValueError(f"tolerance {f.name} must be a positive finite number, got {v!r}")

    def with_overrides(self, **kw) -> Tolerances:
        return replace(self, **{k: float(v) for k, v in kw.items() if v is not None})

    @classmethod
    def from_env(cls, env: Mapping[str, str] | None = None, base: Tolerances | None = None) -> Tolerances:
        """Read PARAMPOLY_TOL_IMAG, PARAMPOLY_TOL_FEAS, ... on top of ``base``."""
        env = os.environ if env is None else env
        base = base or cls()
        kw = {}
        for f in fields(cls):
            key = ENV_PREFIX + f.name.upper()
            if key in env:
                try:
                    kw[f.name] = float(env[key])
                except ValueError as exc:
                    raise ValueError(f"{key}={env[key]!r} is not a number") from exc
        return base.with_overrides(**kw)


class CandidateStatus(str, Enum):
    PENDING = "Pending"
    ACCEPTED = "Accepted"
    REJECTED_COMPLEX = "RejectedComplex"
    REJECTED_MULTIPLIER_SIGN = "RejectedMultiplierSign"
    REJECTED_INFEASIBLE = "RejectedInfeasible"
    REJECTED_RESIDUAL = "RejectedResidual"
    DUPLICATE = "Duplicate"


@dataclass
class CandidatePoint:
    """One KKT critical point.  ``raw`` keeps the complex values as read off the eigenvector."""

    source_mask: ActiveSet
    raw: dict  # unknown name -> complex
    u: tuple | None = None
    multipliers: dict = field(default_factory=dict)  # constraint index -> float
    objective: float | None = None
    status: CandidateStatus = CandidateStatus.PENDING
    residual: float = 0.0  # worst scaled KKT generator value
    eigen_residual: float = 0.0

    def reject(self, status: CandidateStatus):
        if self.status in (CandidateStatus.PENDING, CandidateStatus.ACCEPTED):
            self.status = status
            self.objective = None

    @property
    def alive(self) -> bool:
        return self.status in (CandidateStatus.PENDING, CandidateStatus.ACCEPTED)

    def to_json(self) -> dict:
        return {
            "mask": self.source_mask.bits(),
            "status": self.status.value,
            "u": list(self.u) if self.u is not None else None,
            "multipliers": {str(k): v for k, v in sorted(self.multipliers.items())},
            "objective": self.objective,
            "residual": self.residual,
            "eigen_residual": self.eigen_residual,
        }


@dataclass
class Solution:
    u_star: tuple
    j_star: float
    candidates: list
    timings: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    x: tuple = ()
    seed: int = DEFAULT_SEED

    @property
    def accepted(self) -> list:
        return [c for c in self.candidates if c.status is CandidateStatus.ACCEPTED]

    def to_json(self, timings: bool = True) -> dict:
        out = {
            "x": list(self.x),
            "seed": self.seed,
            "u_star": list(self.u_star),
            "j_star": self.j_star,
            "candidates": [c.to_json() for c in self.candidates],
            "warnings": list(self.warnings),
        }
        if timings:
            out["timings"] = dict(self.timings)
        return out


# ---------------------------------------------------------------------------
# fast numeric evaluation of fixed polynomials / rational functions


class _NumPoly:
    """Float evaluator for a list of polynomials over QQ sharing one variable order."""

    def __init__(self, polys: Sequence[Polynomial]):
        monos = sorted({m for p in polys for m in p.terms})
        self.nvars = polys[0].ring.nvars if polys else 0
        pos = {m: j for j, m in enumerate(monos)}
        self.exps = np.array(monos, dtype=float).reshape(len(monos), self.nvars)
        self.coef = np.zeros((len(polys), len(monos)))
        for i, p in enumerate(polys):
            for m, c in p.terms.items():
                self.coef[i, pos[m]] = float(c)
        self.abscoef = np.abs(self.coef)

    def _monos(self, point: np.ndarray) -> np.ndarray:
        if not len(self.exps):
            return np.zeros(0)
        return np.prod(np.power(point[None, :], self.exps), axis=1)

    def values(self, point) -> np.ndarray:
        return self.coef @ self._monos(np.asarray(point, dtype=float))

    def values_and_scale(self, point) -> tuple[np.ndarray, np.ndarray]:
        mv = self._monos(np.asarray(point, dtype=float))
        return self.coef @ mv, self.abscoef @ np.abs(mv)


class _NumRational:
    """Float evaluator for a flat list of parameter-field values (RationalFunction or Fraction)."""

    def __init__(self, values: Sequence, nparams: int):
        self.n = len(values)
        self.const = np.array([float(v) if not isinstance(v, RationalFunction) else 0.0 for v in values])
        rf = [(i, v) for i, v in enumerate(values) if isinstance(v, RationalFunction)]
        self.idx = np.array([i for i, _ in rf], dtype=int)
        monos = sorted({m for _, v in rf for d in (v.num, v.den) for m in d})
        pos = {m: j for j, m in enumerate(monos)}
        self.exps = np.array(monos, dtype=float).reshape(len(monos), nparams)
        self.cn = np.zeros((len(rf), len(monos)))
        self.cd = np.zeros((len(rf), len(monos)))
        for k, (_, v) in enumerate(rf):
            for m, c in v.num.items():
                self.cn[k, pos[m]] = float(c)
            for m, c in v.den.items():
                self.cd[k, pos[m]] = float(c)

    def values(self, x: np.ndarray) -> np.ndarray:
        out = self.const.copy()
        if len(self.idx):
            mv = np.prod(np.power(x[None, :], self.exps), axis=1)
            out[self.idx] = (self.cn @ mv) / (self.cd @ mv)
        return out


@dataclass
class NumericRecord:
    """A record specialized at one parameter value."""

    record: SubVarietyRecord
    closed_form: dict | None = None  # name -> float
    matrices: list | None = None  # numpy arrays, ordered like record.unknowns
    fallback: bool = False


class _RecordEval:
    def __init__(self, rec: SubVarietyRecord, nparams: int):
        self.rec = rec
        self.certs = list(rec.validity_certificates)
        if rec.classification is Classification.CLOSED_FORM:
            self.names = list(rec.closed_form)
            self.num = _NumRational([rec.closed_form[n] for n in self.names], nparams)
        elif rec.classification is Classification.COMPANION:
            self.l = rec.solution_count
            flat = [e for M in rec.matrices for row in M.entries for e in row]
            self.num = _NumRational(flat, nparams)
        else:
            self.num = None

    def certificates_ok(self, x: Sequence[float], tau: float) -> bool:
        for c in self.certs:
            num = c.num
            try:
                v = abs(c.evaluate_exact(x))
            except DenominatorVanishes:
                return False
            lc = max(abs(k) for k in num.values())
            if v <= Fraction(tau) * (1 + lc):
                return False
        return True

    def specialize(self, x: np.ndarray) -> NumericRecord:
        vals = self.num.values(x)
        if not np.all(np.isfinite(vals)):
            raise DenominatorVanishes(f"non-finite entry for active set {self.rec.active_set.bits()}")
        if self.rec.classification is Classification.CLOSED_FORM:
            return NumericRecord(self.rec, closed_form=dict(zip(self.names, vals)))
        k = len(self.rec.matrices)
        mats = [vals[i * self.l * self.l:(i + 1) * self.l * self.l].reshape(self.l, self.l) for i in range(k)]
        return NumericRecord(self.rec, matrices=mats)


def snap_rational(v: float, tol: float = SNAP_TOL) -> Fraction:
    """Simplest-looking rational within ``tol`` (relative above 1) of ``v`` via continued fractions."""
    target = Fraction(v)
    bound = tol * max(1.0, abs(v))
    limit = 1
    while True:
        f = target.limit_denominator(limit)
        if abs(f - target) <= bound or limit > 10**15:
            return f
        limit *= 10


def exact_record(program: ParametricProgram, mask: int, x: Sequence[float], budget=None) -> SubVarietyRecord:
    """Recompute one sub-ideal with the parameters substituted as exact rationals."""
    a = ActiveSet(mask, program.q)
    gens, unknowns = kkt_generators(program, a)
    target = PolyRing(unknowns, QQ)
    images = {n: target.zero for n in gens[0].ring.names if n not in unknowns}  # inactive multipliers
    images |= {n: target.const(snap_rational(float(v))) for n, v in zip(program.space.parameter_names, x)}
    images |= {n: target.gen(n) for n in unknowns}
    polys = [g.compose(target, images) for g in gens]
    kw = {} if budget is None else {"budget": budget}
    return classify_and_build(Ideal(polys, target), active_set=a, **kw)


def specialize_record(
    rec: SubVarietyRecord,
    x: Sequence[float],
    program: ParametricProgram | None = None,
    tau_den: float = TAU_DEN,
) -> NumericRecord:
    """Numeric matrices / closed-form values of ``rec`` at ``x``.

    When a validity certificate vanishes (or a denominator does) the record is
    rebuilt exactly at the snapped parameter value, which needs ``program``.
    """
    x = np.asarray(x, dtype=float)
    return _specialize(_RecordEval(rec, len(x)), x, program, tau_den)


def _specialize(ev: _RecordEval, x: np.ndarray, program, tau_den: float) -> NumericRecord:
    rec = ev.rec
    try:
        if ev.certificates_ok(list(x), tau_den):
            return ev.specialize(x)
        reason = "validity certificate vanishes"
    except DenominatorVanishes as exc:
        reason = str(exc)
    if program is None:
        raise SpecializationFailure(f"active set {rec.active_set.bits()}: {reason} and no program for fallback")
    log.info("active set %s: %s at x=%s, recomputing exactly", rec.active_set.bits(), reason, tuple(x))
    try:
        exact = exact_record(program, rec.mask, x)
    except (GroebnerError, CompileError) as exc:
        raise SpecializationFailure(f"active set {rec.active_set.bits()}: fallback failed ({exc})") from exc
    if exact.classification is Classification.INFEASIBLE:
        return NumericRecord(exact, fallback=True)
    out = _RecordEval(exact, 0).specialize(np.zeros(0))
    out.fallback = True
    return out


# ---------------------------------------------------------------------------
# program-side evaluation


class ProgramEvaluator:
    """Float evaluation of J, g and the per-active-set KKT generators."""

    def __init__(self, program: ParametricProgram, masks: Sequence[int] = ()):
        self.program = program
        self.m = program.m
        self.objective = _NumPoly([program.objective])
        self.constraints = _NumPoly(program.constraints) if program.constraints else None
        self._kkt: dict = {}
        for mask in masks:
            self.kkt(mask)

    def kkt(self, mask: int):
        if mask not in self._kkt:
            gens, unknowns = kkt_generators(self.program, ActiveSet(mask, self.program.q))
            self._kkt[mask] = (_NumPoly(gens), unknowns)
        return self._kkt[mask]

    def J(self, u, x) -> float:
        return float(self.objective.values(np.concatenate([u, x]))[0])

    def g(self, u, x) -> np.ndarray:
        if self.constraints is None:
            return np.zeros(0)
        return self.constraints.values(np.concatenate([u, x]))

    def kkt_residual(self, mask: int, u, mus: Mapping[int, float], x) -> float:
        """max_i |gen_i| / (1 + sum of |term_i|) over the sub-ideal generators."""
        ev, _ = self.kkt(mask)
        q = self.program.q
        mu = np.array([mus.get(i, 0.0) for i in range(q)])
        vals, scale = ev.values_and_scale(np.concatenate([u, mu, x]))
        if not len(vals):
            return 0.0
        return float(np.max(np.abs(vals) / (1.0 + scale)))


# ---------------------------------------------------------------------------
# candidate extraction


def _mu_index(program: ParametricProgram) -> dict:
    return {n: i for i, n in enumerate(program.space.multiplier_names)}


def _closed_form_candidates(nrec: NumericRecord, program, tol: Tolerances) -> list:
    rec = nrec.record
    mu_index = _mu_index(program)
    raw = {n: complex(v) for n, v in nrec.closed_form.items()}
    cand = CandidatePoint(rec.active_set, raw)
    cand.multipliers = {mu_index[n]: float(v.real) for n, v in raw.items() if n in mu_index}
    if any(v < -tol.mu for v in cand.multipliers.values()):
        cand.reject(CandidateStatus.REJECTED_MULTIPLIER_SIGN)
    else:
        cand.u = tuple(float(raw[n].real) for n in program.space.decision_names)
    return [cand]


def _companion_candidates(nrec: NumericRecord, program, tol: Tolerances, seed: int, warnings: list) -> list:
    rec = nrec.record
    names = rec.unknowns
    mats = nrec.matrices
    mu_index = _mu_index(program)
    mu_pos = [k for k, n in enumerate(names) if n in mu_index]
    u_pos = [k for k, n in enumerate(names) if n not in mu_index]
    try:
        pairs, Mr, used, clustered = joint_eigenvectors(mats, seed)
    except EigenError as exc:
        warnings.append(f"active set {rec.active_set.bits()}: eigen solver failed ({exc})")
        return []
    if clustered:
        # typically a genuine multiple root; duplicates merge in the filter
        log.debug("active set %s: clustered eigenvalues after retries", rec.active_set.bits())
    out = []
    for pair in pairs:
        v = pair.vector
        raw = {}
        eres = pair.residual / max(np.linalg.norm(Mr, "fro"), 1e-300)
        # multipliers first; u only for sign-surviving vectors
        for k in mu_pos:
            raw[names[k]], r = rayleigh_value(mats[k], v)
            eres = max(eres, r / max(np.linalg.norm(mats[k], "fro"), 1.0))
        cand = CandidatePoint(rec.active_set, raw)
        if any(abs(z.imag) > tol.imag * (1 + abs(z.real)) for z in raw.values()):
            cand.reject(CandidateStatus.REJECTED_COMPLEX)
        cand.multipliers = {mu_index[n]: z.real for n, z in raw.items()}
        if cand.alive and any(z.real < -tol.mu for z in raw.values()):
            cand.reject(CandidateStatus.REJECTED_MULTIPLIER_SIGN)
        if cand.alive:
            for k in u_pos:
                raw[names[k]], r = rayleigh_value(mats[k], v)
                eres = max(eres, r / max(np.linalg.norm(mats[k], "fro"), 1.0))
        cand.eigen_residual = float(eres)
        out.append(cand)
    return out


def filter_and_rank(
    candidates: list,
    program: ParametricProgram,
    x: Sequence[float],
    tolerances: Tolerances | None = None,
    evaluator: ProgramEvaluator | None = None,
) -> Solution:
    """Imaginary part, KKT residual, multiplier sign, feasibility, dedupe; then argmin of J."""
    tol = tolerances or Tolerances()
    ev = evaluator or ProgramEvaluator(program)
    x = np.asarray(x, dtype=float)
    mu_index = _mu_index(program)
    dnames = program.space.decision_names
    for c in candidates:
        if not c.alive:
            continue
        if any(abs(z.imag) > tol.imag * (1 + abs(z.real)) for z in c.raw.values()):
            c.reject(CandidateStatus.REJECTED_COMPLEX)
            continue
        c.u = tuple(float(c.raw[n].real) for n in dnames)
        c.multipliers = {mu_index[n]: float(z.real) for n, z in c.raw.items() if n in mu_index}
        c.residual = ev.kkt_residual(c.source_mask.mask, c.u, c.multipliers, x)
        if not c.residual <= tol.res:
            c.reject(CandidateStatus.REJECTED_RESIDUAL)
            continue
        if any(v < -tol.mu for v in c.multipliers.values()):
            c.reject(CandidateStatus.REJECTED_MULTIPLIER_SIGN)
            continue
        g = ev.g(np.array(c.u), x)
        if np.any(g > tol.feas):
            c.reject(CandidateStatus.REJECTED_INFEASIBLE)
            continue
        c.status = CandidateStatus.ACCEPTED
        c.objective = ev.J(np.array(c.u), x)
    alive = [c for c in candidates if c.status is CandidateStatus.ACCEPTED]
    # dedupe: the best-conditioned representative of each cluster survives
    alive.sort(key=lambda c: (c.residual, c.source_mask.mask, c.u))
    kept: list = []
    for c in alive:
        uc = np.array(c.u)
        scale = tol.dup * max(1.0, float(np.max(np.abs(uc))) if len(uc) else 1.0)
        if any(np.max(np.abs(uc - np.array(k.u)), initial=0.0) <= scale for k in kept):
            c.status = CandidateStatus.DUPLICATE
            c.objective = None
        else:
            kept.append(c)
    if not kept:
        raise NoFeasibleCandidate(f"no feasible KKT candidate at x={tuple(x.tolist())}", candidates)
    best = min(kept, key=lambda c: (c.objective, c.source_mask.mask, c.u))
    return Solution(tuple(best.u), float(best.objective), candidates, x=tuple(float(v) for v in x))


# ---------------------------------------------------------------------------


class OnlineSolver:
    """Precomputed evaluators for one compiled problem; ``solve`` is re-entrant."""

    def __init__(self, compiled: CompiledProblem, tolerances: Tolerances | None = None, seed: int = DEFAULT_SEED):
        self.compiled = compiled
        self.program = compiled.program
        self.tolerances = tolerances or Tolerances()
        self.seed = seed
        self.nparams = len(self.program.space.parameter_names)
        usable = [r for r in compiled.records if r.classification in (Classification.CLOSED_FORM, Classification.COMPANION)]
        self._records = [_RecordEval(r, self.nparams) for r in usable]
        self.evaluator = ProgramEvaluator(self.program, [r.mask for r in usable])
        self._unresolved = [r.active_set.bits() for r in compiled.unresolved]

    def record_seed(self, mask: int, seed: int) -> int:
        # room for the cluster retries between neighbouring masks
        return (seed * (1 << 22) + mask) * 8

    def solve(self, x: Sequence[float], seed: int | None = None, tolerances: Tolerances | None = None) -> Solution:
        tol = tolerances or self.tolerances
        seed = self.seed if seed is None else int(seed)
        x = np.asarray([float(v) for v in x], dtype=float)
        if x.shape != (self.nparams,):
            raise ValueError(f"expected {self.nparams} parameter values, got {len(x)}")
        if not np.all(np.isfinite(x)):
            raise ValueError("parameter values must be finite")
        warnings = [f"active set {b} unresolved at compile time; result may be incomplete" for b in self._unresolved]
        timings = {"specialize": 0.0, "eigen": 0.0, "filter": 0.0}
        candidates: list = []
        for ev in self._records:
            t0 = time.perf_counter()
            nrec = _specialize(ev, x, self.program, tol.den)
            t1 = time.perf_counter()
            timings["specialize"] += t1 - t0
            if nrec.fallback:
                warnings.append(f"active set {ev.rec.active_set.bits()}: specialization fallback used")
            cls = nrec.record.classification
            if cls is Classification.CLOSED_FORM:
                candidates.extend(_closed_form_candidates(nrec, self.program, tol))
            elif cls is Classification.COMPANION:
                s = self.record_seed(ev.rec.mask, seed)
                candidates.extend(_companion_candidates(nrec, self.program, tol, s, warnings))
            timings["eigen"] += time.perf_counter() - t1
        t2 = time.perf_counter()
        try:
            sol = filter_and_rank(candidates, self.program, x, tol, self.evaluator)
        except NoFeasibleCandidate as exc:
            exc.warnings = warnings
            raise
        timings["filter"] = time.perf_counter() - t2
        timings["total"] = sum(timings.values())
        sol.timings = timings
        sol.warnings = warnings
        sol.seed = seed
        return sol


def solve(
    compiled: CompiledProblem,
    x: Sequence[float],
    seed: int = DEFAULT_SEED,
    tolerances: Tolerances | None = None,
) -> Solution:
    return OnlineSolver(compiled, tolerances, seed).solve(x)
