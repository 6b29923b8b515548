"""Parametric polynomial optimization with Groebner bases and companion-matrix eigenvalues.

Offline, every active set of the KKT system is compiled into either a closed
form solution map or a family of multiplication matrices whose entries are
rational functions of the parameters.  Online, the matrices are specialized
at a parameter value and all critical points are read off shared
eigenvectors; the feasible one with the smallest cost wins.
"""

from .compiler import (
    Classification,
    CompiledProblem,
    CompileError,
    ParametricProgram,
    compile_program,
)
from .fields import DenominatorVanishes, RationalFunction, RationalFunctionField, poly_gcd
from .groebner import GroebnerBasis, Ideal, buchberger
from .mpc import ControlProblem, duffing, duffing_dynamics, expand_horizon, simulate
from .poly import GREVLEX, LEX, QQ, MonomialOrder, Polynomial, PolyRing
from .solver import NoFeasibleCandidate, OnlineSolver, Solution, Tolerances, solve

__version__ = "0.1.0"

__all__ = [
    "Classification",
    "CompileError",
    "CompiledProblem",
    "ControlProblem",
    "DenominatorVanishes",
    "GREVLEX",
    "GroebnerBasis",
    "Ideal",
    "LEX",
    "MonomialOrder",
    "NoFeasibleCandidate",
    "OnlineSolver",
    "ParametricProgram",
    "PolyRing",
    "Polynomial",
    "QQ",
    "RationalFunction",
    "RationalFunctionField",
    "Solution",
    "Tolerances",
    "buchberger",
    "compile_program",
    "duffing",
    "duffing_dynamics",
    "expand_horizon",
    "poly_gcd",
    "simulate",
    "solve",
]
