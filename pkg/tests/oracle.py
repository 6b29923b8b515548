"""Brute-force reference for small programs: dense grid over the box, then local polish.

Independent of the package's numeric code: polynomials are turned into sympy
expressions and lambdified; the polish uses scipy's SLSQP.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy
from scipy.optimize import minimize

from parampoly.compiler import ParametricProgram, VariableSpace
from parampoly.poly import QQ, PolyRing

from conftest import to_sympy

BOX = 2  # every random program contains u_i^2 - BOX^2 <= 0


@dataclass
class OracleResult:
    j_star: float
    u_star: np.ndarray
    grid_best: float


def _rand_coef(rng: random.Random, lo=-3, hi=3) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice([1, 1, 2, 4]))


def _rand_poly(rng, ring, nvars_dec, maxdeg, nterms, param_prob=0.4):
    terms = {}
    for _ in range(nterms):
        m = [0] * ring.nvars
        d = rng.randint(0, maxdeg)
        for _ in range(d):
            m[rng.randrange(nvars_dec)] += 1
        if sum(m) < maxdeg and rng.random() < param_prob:
            m[nvars_dec] += 1  # one parameter factor
        c = _rand_coef(rng)
        if c:
            terms[tuple(m)] = terms.get(tuple(m), 0) + c
    return ring.from_dict({k: v for k, v in terms.items() if v})


def random_program(rng: random.Random) -> ParametricProgram:
    """m in {1, 2}, one parameter x, degree <= 4, box |u_i| <= 2 plus optionally one more constraint."""
    m = rng.choice([1, 2])
    dec = ("u", "v")[:m]
    q_box = m
    extra = rng.random() < 0.6 and q_box < 3
    q = q_box + int(extra)
    space = VariableSpace.for_program(dec, ("x",), q)
    R = PolyRing(space.base_names, QQ)
    gens = [R.gen(n) for n in dec]
    x = R.gen("x")
    obj = _rand_poly(rng, R, m, 4 if m == 1 else 3, rng.randint(3, 6))
    # a quartic leading part keeps the picture interesting but bounded on the box anyway
    if m == 1 and rng.random() < 0.7:
        obj = obj + gens[0] ** 4 * Fraction(rng.randint(1, 4), 4)
    cons = [g**2 - BOX**2 for g in gens]
    if extra:
        c = _rand_poly(rng, R, m, 2, rng.randint(2, 3), 0.3)
        if c.degree_in(range(m)) == 0:
            c = c + gens[0]
        cons.append(c)
    return ParametricProgram(obj, cons, space)


class Oracle:
    def __init__(self, program: ParametricProgram):
        self.program = program
        names = program.space.base_names
        syms = sympy.symbols(names)
        self.m = program.m
        dsyms = syms[: self.m]
        xs = [sympy.Symbol(n) for n in program.space.parameter_names]
        J = to_sympy(program.objective, syms)
        G = [to_sympy(g, syms) for g in program.constraints]
        self.J = sympy.lambdify([*dsyms, *xs], J, "numpy")
        self.G = [sympy.lambdify([*dsyms, *xs], g, "numpy") for g in G]
        self.dJ = sympy.lambdify([*dsyms, *xs], [sympy.diff(J, s) for s in dsyms], "numpy")
        self.dG = [sympy.lambdify([*dsyms, *xs], [sympy.diff(g, s) for s in dsyms], "numpy") for g in G]

    def _grid_starts(self, x, step, k):
        axis = np.arange(-BOX, BOX + step / 2, step)
        if self.m == 1:
            U = axis
            J = np.broadcast_to(self.J(U, *x), U.shape).astype(float)
            feas = np.ones(U.shape, bool)
            for g in self.G:
                feas &= np.broadcast_to(g(U, *x), U.shape) <= 0
            J = np.where(feas, J, np.inf)
            order = np.argsort(J)[: 50 * k]
            return [np.array([U[i]]) for i in order if np.isfinite(J[i])], (float(J.min()) if feas.any() else np.inf)
        # m == 2: row blocks keep memory bounded
        gbest = np.inf
        cand = []
        for start in range(0, len(axis), 500):
            Ub = axis[start:start + 500][:, None]
            V = axis[None, :]
            U2, V2 = np.broadcast_arrays(Ub, V)
            J = np.broadcast_to(self.J(U2, V2, *x), U2.shape).astype(float)
            feas = np.ones(U2.shape, bool)
            for g in self.G:
                feas &= np.broadcast_to(g(U2, V2, *x), U2.shape) <= 0
            J = np.where(feas, J, np.inf)
            flat = J.ravel()
            idx = np.argpartition(flat, min(50 * k, flat.size - 1))[: 50 * k]
            rows, cols = np.unravel_index(idx, J.shape)
            for i, r, c in zip(idx, rows, cols):
                if np.isfinite(flat[i]):
                    cand.append((flat[i], axis[start + r], axis[c]))
            gbest = min(gbest, float(flat.min()))
        cand.sort()
        return [np.array([a, b]) for _, a, b in cand], gbest

    def solve(self, x, step=1e-3, starts=8) -> OracleResult:
        x = [float(v) for v in x]
        pts, gbest = self._grid_starts(x, step, starts)
        # spread the polish starts: skip grid points next to an already chosen start
        chosen = []
        for p in pts:
            if all(np.max(np.abs(p - c)) > 0.05 for c in chosen):
                chosen.append(p)
            if len(chosen) == starts:
                break
        best_j, best_u = gbest, (chosen[0] if chosen else None)
        cons = [
            {"type": "ineq", "fun": (lambda u, g=g: -float(g(*u, *x))), "jac": (lambda u, dg=dg: -np.array(dg(*u, *x), float))}
            for g, dg in zip(self.G, self.dG)
        ]
        for p in chosen:
            r = minimize(
                lambda u: float(self.J(*u, *x)),
                p,
                jac=lambda u: np.array(self.dJ(*u, *x), float),
                constraints=cons,
                method="SLSQP",
                options={"ftol": 1e-15, "maxiter": 500},
            )
            u = r.x
            if all(float(g(*u, *x)) <= 1e-9 for g in self.G):
                j = float(self.J(*u, *x))
                if j < best_j:
                    best_j, best_u = j, u
        return OracleResult(best_j, best_u, gbest)


def agree(a: float, b: float, tol: float = 1e-6) -> bool:
    return abs(a - b) <= max(tol, tol * max(abs(a), abs(b)))


def sample_case(rng: random.Random, budget: int = 20000):
    """Draw (program, compiled, x, oracle result), resampling degenerate or infeasible draws.

    Draws whose KKT sub-ideals are not zero-dimensional (constraint
    qualification fails along a curve) or whose feasible set is empty at x
    are outside the method's assumptions and are skipped.
    """
    from parampoly.compiler import CompileError, compile_program

    skipped = 0
    while True:
        p = random_program(rng)
        x = [round(rng.uniform(-1, 1), 3)]
        o = Oracle(p).solve(x)
        if not np.isfinite(o.j_star):
            skipped += 1
            continue
        try:
            cp = compile_program(p, budget=budget)
        except CompileError:
            skipped += 1
            continue
        return p, cp, x, o, skipped
