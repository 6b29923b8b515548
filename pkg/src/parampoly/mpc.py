"""Polynomial optimal control: horizon expansion, the Duffing preset, closed-loop simulation.

Cost convention: stage i pairs the input u(i) with the state it produces,

    J = sum_{i=0}^{N-1} L(x(i+1), u(i)) + L_N(x(N)),

so with L = x'Qx + u'Ru the state penalties run over i = 1..N and the input
penalties over i = 0..N-1.  Stage constraints h(x, u) <= 0 are imposed on the
same pairs.  Decision variables are named ``<input><i>``; the parameters are
the initial state components.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .compiler import CompiledProblem, ParametricProgram, VariableSpace
from .poly import QQ, Polynomial, PolyRing
from .solver import DEFAULT_SEED, NoFeasibleCandidate, OnlineSolver, Tolerances, _NumPoly

log = logging.getLogger(__name__)


@dataclass
class ControlProblem:
    states: tuple
    inputs: tuple
    dynamics: list  # one Polynomial per state over QQ[states, inputs]
    stage_cost: Polynomial
    terminal_cost: Polynomial | None = None  # over the states only
    stage_constraints: list = field(default_factory=list)
    horizon: int = 1

    def __post_init__(self):
        self.states = tuple(self.states)
        self.inputs = tuple(self.inputs)
        if len(self.dynamics) != len(self.states):
            raise ValueError(f"{len(self.dynamics)} update equations for {len(self.states)} states")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be at least 1")
        self.horizon = int(self.horizon)
        R = self.ring
        self.dynamics = [R(f) for f in self.dynamics]
        self.stage_cost = R(self.stage_cost)
        self.terminal_cost = R.zero if self.terminal_cost is None else R(self.terminal_cost)
        if self.terminal_cost.degree_in(range(len(self.states), R.nvars)) > 0:
            raise ValueError("terminal cost may depend on the states only")
        self.stage_constraints = [R(h) for h in self.stage_constraints]

    @property
    def ring(self) -> PolyRing:
        return PolyRing(self.states + self.inputs, QQ)

    def decision_names(self) -> tuple:
        return tuple(f"{name}{i}" for i in range(self.horizon) for name in self.inputs)

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "inputs": list(self.inputs),
            "dynamics": [str(f) for f in self.dynamics],
            "stage_cost": str(self.stage_cost),
            "terminal_cost": str(self.terminal_cost),
            "stage_constraints": [str(h) for h in self.stage_constraints],
            "horizon": self.horizon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ControlProblem:
        R = PolyRing(tuple(d["states"]) + tuple(d["inputs"]), QQ)
        return cls(
            states=d["states"],
            inputs=d["inputs"],
            dynamics=[R.parse(s) for s in d["dynamics"]],
            stage_cost=R.parse(d["stage_cost"]),
            terminal_cost=R.parse(d.get("terminal_cost", "0")),
            stage_constraints=[R.parse(s) for s in d.get("stage_constraints", [])],
            horizon=d["horizon"],
        )

    # -- numeric helpers for simulation --------------------------------------

    def step(self, x: Sequence[float], u: Sequence[float]) -> np.ndarray:
        return _NumPoly(self.dynamics).values(np.concatenate([x, u]))


@dataclass
class Expansion:
    program: ParametricProgram
    dropped: list  # (step, stage constraint index, expanded polynomial)


def horizon_expansion(cp: ControlProblem) -> Expansion:
    """Substitute the dynamics forward; returns the program and the dropped parameter-only constraints."""
    dec = cp.decision_names()
    params = cp.states
    T = PolyRing(dec + params, QQ)
    x = [T.gen(s) for s in params]
    J = T.zero
    cons = []
    dropped = []
    ndec = len(dec)
    for i in range(cp.horizon):
        u = [T.gen(f"{name}{i}") for name in cp.inputs]
        images = dict(zip(cp.states, x)) | dict(zip(cp.inputs, u))
        x = [f.compose(T, images) for f in cp.dynamics]
        images = dict(zip(cp.states, x)) | dict(zip(cp.inputs, u))
        J = J + cp.stage_cost.compose(T, images)
        for k, h in enumerate(cp.stage_constraints):
            g = h.compose(T, images)
            if g.degree_in(range(ndec)) == 0:
                dropped.append((i + 1, k, g))
                log.info("step %d constraint %d involves no decision variable; dropped: %s", i + 1, k, g)
            else:
                cons.append(g)
    images = dict(zip(cp.states, x)) | {name: T.zero for name in cp.inputs}
    J = J + cp.terminal_cost.compose(T, images)
    space = VariableSpace.for_program(dec, params, len(cons))
    return Expansion(ParametricProgram(J, cons, space), dropped)


def expand_horizon(cp: ControlProblem) -> ParametricProgram:
    return horizon_expansion(cp).program


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DuffingPreset:
    zeta: Fraction = Fraction(3, 10)
    h: Fraction = Fraction(1, 20)
    horizon: int = 3
    q: tuple = (1, 1)  # diagonal of Q
    r: Fraction = Fraction(1, 10)
    bound: int = 5


def duffing_dynamics(preset: DuffingPreset | None = None) -> ControlProblem:
    """Forward-difference Duffing oscillator with box state constraints |x_i| <= bound."""
    p = preset or DuffingPreset()
    R = PolyRing(("x1", "x2", "u"), QQ)
    x1, x2, u = R.gens()
    h, z = p.h, p.zeta
    f = [x1 + h * x2, -h * x1 + (1 - 2 * z * h) * x2 + h * u - h * x1**3]
    L = p.q[0] * x1**2 + p.q[1] * x2**2 + p.r * u**2
    cons = []
    for s in (x1, x2):
        cons += [s - p.bound, -s - p.bound]
    return ControlProblem(("x1", "x2"), ("u",), f, L, R.zero, cons, p.horizon)


def duffing(preset: DuffingPreset | None = None) -> Expansion:
    return horizon_expansion(duffing_dynamics(preset))


# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    states: tuple
    inputs: tuple
    xs: list  # x(0..steps)
    us: list  # u(0..steps-1)
    j_star: list
    solve_ms: list
    violations: list = field(default_factory=list)  # (step, stage constraint index, value)
    error: str | None = None

    @property
    def steps(self) -> int:
        return len(self.us)

    def columns(self) -> list:
        return ["step", *self.states, *self.inputs, "j_star", "solve_ms"]

    def rows(self) -> list:
        out = []
        for k, x in enumerate(self.xs):
            if k < len(self.us):
                tail = [*map(repr, self.us[k]), repr(self.j_star[k]), f"{self.solve_ms[k]:.3f}"]
            else:
                tail = [""] * (len(self.inputs) + 2)
            out.append([str(k), *map(repr, map(float, x)), *tail])
        return out

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        w.writerows(self.rows())
        return buf.getvalue() if fh is None else ""

    def max_norm(self) -> np.ndarray:
        return np.array([np.max(np.abs(x)) for x in self.xs])


def simulate(
    artifact: CompiledProblem,
    x0: Sequence[float],
    steps: int,
    seed: int = DEFAULT_SEED,
    free_response: bool = False,
    tolerances: Tolerances | None = None,
    violation_tol: float = 1e-6,
    control: ControlProblem | None = None,
) -> Trajectory:
    """Receding-horizon closed loop: solve, apply the first input, propagate the model."""
    if control is None:
        if not artifact.control:
            raise ValueError("artifact carries no control-problem metadata")
        control = ControlProblem.from_dict(artifact.control)
    dyn = _NumPoly(control.dynamics)
    cons = _NumPoly(control.stage_constraints) if control.stage_constraints else None
    solver = None if free_response else OnlineSolver(artifact, tolerances, seed)
    ni = len(control.inputs)
    x = np.asarray(x0, dtype=float)
    if x.shape != (len(control.states),):
        raise ValueError(f"x0 needs {len(control.states)} components")
    traj = Trajectory(control.states, control.inputs, [x.copy()], [], [], [])
    for k in range(steps):
        if free_response:
            u = np.zeros(ni)
            jstar, ms = math.nan, 0.0
        else:
            t0 = time.perf_counter()
            try:
                sol = solver.solve(x)
            except NoFeasibleCandidate as exc:
                traj.error = f"step {k}: {exc}"
                log.error("simulation aborted at step %d: %s", k, exc)
                break
            ms = 1000.0 * (time.perf_counter() - t0)
            u = np.asarray(sol.u_star[:ni])
            jstar = sol.j_star
        x = dyn.values(np.concatenate([x, u]))
        traj.us.append(tuple(float(v) for v in u))
        traj.j_star.append(float(jstar))
        traj.solve_ms.append(ms)
        traj.xs.append(x.copy())
        if cons is not None:
            vals = cons.values(np.concatenate([x, u]))
            for i, v in enumerate(vals):
                if v > violation_tol:
                    traj.violations.append((k + 1, i, float(v)))
        if not np.all(np.isfinite(x)):
            traj.error = f"step {k + 1}: state diverged"
            break
    return traj
