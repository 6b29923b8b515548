"""JSON artifact for compiled problems.

Layout (all keys sorted, so equal inputs give byte-identical files)::

    {"format": "parampoly-artifact", "format_version": 1,
     "problem": {...}, "problem_hash": "<sha256>", "order": {...},
     "enumerated": 1024, "infeasible": 937, "counts": {...},
     "control": {...} | null,
     "records": [{"mask": 0, "bits": "0000000000", "classification": "Companion",
                  "unknowns": [...], "solution_count": 5,
                  "standard_basis": {"names": [...], "exponents": [[...], ...]},
                  "closed_form": {"u0": "(num)/(den)", ...} | null,
                  "matrices": {"u0": [["(num)/(den)", ...], ...], ...} | null,
                  "certificates": ["...", ...], "note": ""}, ...]}

Field elements are written in the polynomial text syntax: a polynomial when
the denominator is 1, ``(num)/(den)`` otherwise.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .compiler import (
    FORMAT_VERSION,
    ActiveSet,
    Classification,
    CompanionMatrix,
    CompiledProblem,
    ParametricProgram,
    SubVarietyRecord,
    parameter_field,
)
from .groebner import StandardBasis
from .poly import MonomialOrder, ParseError, PolyRing

FORMAT_NAME = "parampoly-artifact"


class ArtifactError(ValueError):
    pass


def program_to_dict(program: ParametricProgram) -> dict:
    return {
        "decision_vars": list(program.space.decision_names),
        "parameters": list(program.space.parameter_names),
        "objective": str(program.objective),
        "constraints": [str(g) for g in program.constraints],
    }


def program_from_dict(d: dict) -> ParametricProgram:
    try:
        return ParametricProgram.from_strings(
            d["decision_vars"], d.get("parameters", []), d["objective"], d.get("constraints", [])
        )
    except KeyError as exc:
        raise ArtifactError(f"problem description lacks {exc}") from exc


def problem_hash(program: ParametricProgram) -> str:
    blob = json.dumps(program_to_dict(program), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _fmt(fld, v) -> str:
    return fld.format(v) if hasattr(fld, "format") else str(v)


def _record_to_dict(rec: SubVarietyRecord, fld) -> dict:
    out = {
        "mask": rec.mask,
        "bits": rec.active_set.bits(),
        "classification": rec.classification.value,
        "unknowns": list(rec.unknowns),
        "solution_count": rec.solution_count,
        "standard_basis": None,
        "closed_form": None,
        "matrices": None,
        "certificates": [_fmt(fld, c) for c in rec.validity_certificates],
        "note": rec.note,
    }
    if rec.standard_basis is not None:
        out["standard_basis"] = {
            "names": rec.standard_basis.names(),
            "exponents": [list(m) for m in rec.standard_basis.monomials],
        }
    if rec.closed_form is not None:
        out["closed_form"] = {n: _fmt(fld, v) for n, v in rec.closed_form.items()}
    if rec.matrices is not None:
        out["matrices"] = {M.for_variable: [[_fmt(fld, e) for e in row] for row in M.entries] for M in rec.matrices}
    return out


def to_dict(cp: CompiledProblem) -> dict:
    fld = parameter_field(cp.program)
    return {
        "format": FORMAT_NAME,
        "format_version": cp.format_version,
        "problem": program_to_dict(cp.program),
        "problem_hash": problem_hash(cp.program),
        "order": {"kind": cp.order.kind, "permutation": list(cp.order.permutation) if cp.order.permutation else None},
        "enumerated": cp.enumerated,
        "infeasible": cp.infeasible,
        "counts": cp.counts(),
        "control": cp.control,
        "records": [_record_to_dict(r, fld) for r in cp.records],
    }


def dumps(cp: CompiledProblem) -> str:
    return json.dumps(to_dict(cp), sort_keys=True, indent=1) + "\n"


def save(cp: CompiledProblem, path) -> None:
    Path(path).write_text(dumps(cp), encoding="utf-8")


def _parse(fld, text: str):
    if not isinstance(text, str):
        raise ArtifactError(f"expected a field element string, got {text!r}")
    try:
        return fld.parse(text)
    except (ParseError, ValueError, ZeroDivisionError) as exc:
        raise ArtifactError(f"bad field element {text!r}: {exc}") from exc


def _record_from_dict(d: dict, program: ParametricProgram, fld) -> SubVarietyRecord:
    a = ActiveSet(int(d["mask"]), program.q)
    if d.get("bits") not in (None, a.bits()):
        raise ArtifactError(f"record mask {d['mask']} disagrees with bits {d['bits']!r}")
    cls = Classification(d["classification"])
    unknowns = tuple(d["unknowns"])
    rec = SubVarietyRecord(a, cls, unknowns, solution_count=int(d.get("solution_count", 0)), note=d.get("note", ""))
    ring = PolyRing(unknowns, fld)
    sb = d.get("standard_basis")
    if sb is not None:
        monos = [tuple(int(e) for e in m) for m in sb["exponents"]]
        if any(len(m) != len(unknowns) for m in monos):
            raise ArtifactError("standard basis exponent length mismatch")
        rec.standard_basis = StandardBasis(monos, ring)
    if d.get("closed_form") is not None:
        rec.closed_form = {n: _parse(fld, d["closed_form"][n]) for n in unknowns}
    if d.get("matrices") is not None:
        mats = []
        for n in unknowns:
            grid = d["matrices"][n]
            if len(grid) != rec.solution_count or any(len(row) != rec.solution_count for row in grid):
                raise ArtifactError(f"matrix for {n} in mask {a.bits()} is not {rec.solution_count}x{rec.solution_count}")
            mats.append(CompanionMatrix(n, [[_parse(fld, e) for e in row] for row in grid]))
        rec.matrices = mats
    rec.validity_certificates = [_parse(fld, c) for c in d.get("certificates", [])]
    if cls is Classification.CLOSED_FORM and rec.closed_form is None:
        raise ArtifactError(f"closed-form record {a.bits()} has no solution map")
    if cls is Classification.COMPANION and rec.matrices is None:
        raise ArtifactError(f"companion record {a.bits()} has no matrices")
    return rec


def from_dict(d: dict) -> CompiledProblem:
    if not isinstance(d, dict) or d.get("format") != FORMAT_NAME:
        raise ArtifactError("not a parampoly artifact")
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise ArtifactError(f"unsupported artifact version {version!r} (expected {FORMAT_VERSION})")
    try:
        program = program_from_dict(d["problem"])
        if d["problem_hash"] != problem_hash(program):
            raise ArtifactError("problem hash does not match the embedded problem")
        fld = parameter_field(program)
        o = d.get("order") or {"kind": "grevlex"}
        perm = o.get("permutation")
        order = MonomialOrder(o["kind"], tuple(perm) if perm else None)
        records = [_record_from_dict(r, program, fld) for r in d["records"]]
        return CompiledProblem(
            program=program,
            records=records,
            order=order,
            enumerated=int(d["enumerated"]),
            infeasible=int(d["infeasible"]),
            format_version=version,
            control=d.get("control"),
        )
    except ArtifactError:
        raise
    except (KeyError, TypeError, ValueError, ParseError) as exc:
        raise ArtifactError(f"malformed artifact: {exc!r}") from exc


def loads(text: str) -> CompiledProblem:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"artifact is not valid JSON: {exc}") from exc
    return from_dict(d)


def load(path) -> CompiledProblem:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ArtifactError(f"artifact is not UTF-8 text: {exc}") from exc
    return loads(text)


def load_problem(path) -> tuple[ParametricProgram, dict | None, str | None]:
    """Problem file -> (program, control metadata, order kind).

    Plain programs use the keys ``decision_vars``, ``parameters``,
    ``objective``, ``constraints`` and optionally ``order``; a control problem
    is ``{"control": {...}}`` and is expanded over its horizon.
    """
    from .mpc import ControlProblem, horizon_expansion

    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"problem file is not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ArtifactError("problem file must hold a JSON object")
    order = d.get("order")
    try:
        if "control" in d:
            cp = ControlProblem.from_dict(d["control"])
            return horizon_expansion(cp).program, cp.to_dict(), order
        return program_from_dict(d), None, order
    except (KeyError, TypeError, ValueError, ParseError) as exc:
        if isinstance(exc, ArtifactError):
            raise
        raise ArtifactError(f"malformed problem file: {exc!r}") from exc


__all__ = [
    "ArtifactError",
    "dumps",
    "from_dict",
    "load",
    "load_problem",
    "loads",
    "problem_hash",
    "program_from_dict",
    "program_to_dict",
    "save",
    "to_dict",
]
