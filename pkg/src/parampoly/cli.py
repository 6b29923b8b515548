"""Command line: ``parampoly compile | solve | simulate | inspect | preset``.

Exit status 0 on success, 1 on usage or input errors (bad flags, unreadable
or corrupted files, hash mismatch), 2 when the computation itself fails.
Tolerances can be overridden through PARAMPOLY_TOL_<NAME> environment
variables (IMAG, RES, MU, FEAS, DUP, DEN); explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import artifact as art
from .compiler import DEFAULT_MAX_CONSTRAINTS, CompileError, compile_program
from .groebner import DEFAULT_BUDGET, GroebnerError
from .linalg import EigenError
from .mpc import ControlProblem, duffing_dynamics, simulate
from .poly import MonomialOrder, ParseError
from .solver import DEFAULT_SEED, OnlineSolver, SolverError, Tolerances

log = logging.getLogger("parampoly")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


@dataclass
class RunConfig:
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = DEFAULT_SEED
    jobs: int = 1
    budget: int = DEFAULT_BUDGET
    json: bool = False

    @classmethod
    def from_args(cls, args) -> RunConfig:
        overrides = {k: getattr(args, f"tol_{k}", None) for k in ("imag", "res", "mu", "feas", "dup", "den")}
        try:
            tol = Tolerances.from_env().with_overrides(**overrides)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return cls(
            tolerances=tol,
            seed=getattr(args, "seed", DEFAULT_SEED),
            jobs=getattr(args, "jobs", 1),
            budget=getattr(args, "budget", DEFAULT_BUDGET),
            json=getattr(args, "json", False),
        )


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _tolerance_flags(p):
    for name in ("imag", "res", "mu", "feas", "dup", "den"):
        p.add_argument(f"--tol-{name}", type=float, default=None, metavar="TAU")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="parampoly", description="Parametric polynomial optimization via Groebner bases and eigenvalues.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    c = sub.add_parser("compile", help="offline phase: problem file -> artifact")
    c.add_argument("problem")
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--order", default=None, choices=["grevlex", "grlex", "lex"], help="overrides the problem file (default grevlex)")
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--budget", type=int, default=DEFAULT_BUDGET, metavar="STEPS")
    c.add_argument("--max-constraints", type=int, default=DEFAULT_MAX_CONSTRAINTS)

    s = sub.add_parser("solve", help="online phase at one parameter value")
    s.add_argument("artifact")
    s.add_argument("--x", required=True, type=_floats, help='parameter values, e.g. "2.5,1"')
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--problem", help="problem file whose hash must match the artifact")
    s.add_argument("--json", action="store_true")
    _tolerance_flags(s)

    m = sub.add_parser("simulate", help="closed-loop receding-horizon simulation")
    m.add_argument("artifact")
    m.add_argument("--x0", required=True, type=_floats)
    m.add_argument("--steps", type=int, default=200)
    m.add_argument("--csv", help="trajectory output (default: stdout)")
    m.add_argument("--free-response", action="store_true", help="apply u = 0 instead of solving")
    m.add_argument("--seed", type=int, default=DEFAULT_SEED)
    m.add_argument("--problem")
    _tolerance_flags(m)

    i = sub.add_parser("inspect", help="summarize an artifact")
    i.add_argument("artifact")
    i.add_argument("--json", action="store_true")

    r = sub.add_parser("preset", help="write a built-in problem file")
    r.add_argument("name", choices=["duffing"])
    r.add_argument("-o", "--output", required=True)
    return p


# ---------------------------------------------------------------------------


def _load_artifact(path, problem=None):
    cp = art.load(path)
    if problem is not None:
        program, _, _ = art.load_problem(problem)
        if art.problem_hash(program) != art.problem_hash(cp.program):
            raise art.ArtifactError(f"artifact {path} was not compiled from {problem} (problem hash mismatch)")
    return cp


def cmd_compile(args, cfg: RunConfig, out) -> int:
    program, control, order = art.load_problem(args.problem)
    try:
        order = MonomialOrder(args.order or order or "grevlex")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cp = compile_program(
        program,
        order=order,
        jobs=cfg.jobs,
        budget=cfg.budget,
        max_constraints=args.max_constraints,
        control=control,
    )
    art.save(cp, args.output)
    counts = cp.counts()
    print(
        f"compiled {cp.enumerated} active sets in {cp.compile_seconds:.1f}s: "
        + ", ".join(f"{k} {v}" for k, v in counts.items())
        + f" -> {args.output}",
        file=out,
    )
    for bits in (r.active_set.bits() for r in cp.unresolved):
        print(f"warning: active set {bits} unresolved (resource cap)", file=out)
    return 0


def cmd_solve(args, cfg: RunConfig, out) -> int:
    cp = _load_artifact(args.artifact, args.problem)
    solver = OnlineSolver(cp, cfg.tolerances, cfg.seed)
    try:
        sol = solver.solve(args.x)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if cfg.json:
        json.dump(sol.to_json(), out, indent=1, sort_keys=True)
        out.write("\n")
    else:
        names = cp.program.space.decision_names
        print("u* = " + ", ".join(f"{n}={v:.12g}" for n, v in zip(names, sol.u_star)), file=out)
        print(f"J* = {sol.j_star:.12g}", file=out)
        print(f"candidates: {len(sol.candidates)}, accepted: {len(sol.accepted)}, "
              f"time {1000 * sol.timings['total']:.1f} ms", file=out)
        for w in sol.warnings:
            print(f"warning: {w}", file=out)
    return 0


def cmd_simulate(args, cfg: RunConfig, out) -> int:
    cp = _load_artifact(args.artifact, args.problem)
    if not cp.control:
        raise UsageError("artifact was not compiled from a control problem")
    control = ControlProblem.from_dict(cp.control)
    if len(args.x0) != len(control.states):
        raise UsageError(f"--x0 needs {len(control.states)} values")
    traj = simulate(cp, args.x0, args.steps, seed=cfg.seed, free_response=args.free_response,
                    tolerances=cfg.tolerances, control=control)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            traj.to_csv(fh)
    else:
        out.write(traj.to_csv())
    report = sys.stderr if not args.csv else out
    for step, idx, value in traj.violations:
        print(f"violation: step {step} constraint {control.stage_constraints[idx]} <= 0 exceeded by {value:.6g}",
              file=report)
    if traj.error:
        print(f"error: {traj.error}", file=sys.stderr)
        return 2
    return 0


def inspect_report(cp) -> dict:
    rows = []
    for r in cp.records:
        rows.append({
            "mask": r.active_set.bits(),
            "classification": r.classification.value,
            "solutions": r.solution_count,
            "matrix_dim": r.solution_count if r.matrices else 0,
            "matrices": len(r.matrices or []),
            "certificates": len(r.validity_certificates),
        })
    return {
        "problem_hash": art.problem_hash(cp.program),
        "enumerated": cp.enumerated,
        "counts": cp.counts(),
        "records": rows,
    }


def cmd_inspect(args, cfg: RunConfig, out) -> int:
    cp = _load_artifact(args.artifact)
    rep = inspect_report(cp)
    if cfg.json:
        json.dump(rep, out, indent=1, sort_keys=True)
        out.write("\n")
        return 0
    print(f"problem hash {rep['problem_hash'][:16]}, {rep['enumerated']} active sets enumerated", file=out)
    print(f"{'mask':<{max(4, cp.program.q)}}  {'class':<11} {'sols':>4} {'dim':>4} {'certs':>5}", file=out)
    for row in rep["records"]:
        print(f"{row['mask']:<{max(4, cp.program.q)}}  {row['classification']:<11} {row['solutions']:>4} "
              f"{row['matrix_dim']:>4} {row['certificates']:>5}", file=out)
    print("counts: " + ", ".join(f"{k} {v}" for k, v in rep["counts"].items()), file=out)
    return 0


def cmd_preset(args, cfg: RunConfig, out) -> int:
    cp = duffing_dynamics()
    Path(args.output).write_text(json.dumps({"control": cp.to_dict()}, indent=1, sort_keys=True) + "\n")
    print(f"wrote {args.name} problem to {args.output}", file=out)
    return 0


COMMANDS = {
    "compile": cmd_compile,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "inspect": cmd_inspect,
    "preset": cmd_preset,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
            format="%(levelname)s %(name)s: %(message)s",
        )
        cfg = RunConfig.from_args(args)
        return COMMANDS[args.command](args, cfg, out)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (art.ArtifactError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CompileError, GroebnerError, SolverError, EigenError, ArithmeticError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
