import random
from fractions import Fraction

import numpy as np
import pytest

from parampoly.compiler import compile_program
from parampoly.mpc import ControlProblem, DuffingPreset, duffing_dynamics, horizon_expansion, simulate
from parampoly.poly import QQ, PolyRing
from parampoly.solver import solve


def integrator(N, bound=None):
    R = PolyRing(("x", "u"), QQ)
    x, u = R.gens()
    cons = [x - bound, -x - bound] if bound is not None else []
    return ControlProblem(("x",), ("u",), [x + u], x**2 + u**2, None, cons, N)


def test_integrator_single_step():
    e = horizon_expansion(integrator(1))
    p = e.program
    assert p.space.decision_names == ("u0",) and p.space.parameter_names == ("x",)
    T = p.objective.ring
    u0, x = T.gen("u0"), T.gen("x")
    assert p.objective == (x + u0) ** 2 + u0**2
    assert p.q == 0 and not e.dropped


def test_integrator_two_steps_with_bounds():
    e = horizon_expansion(integrator(2, 1))
    T = e.program.objective.ring
    u0, u1, x = (T.gen(n) for n in ("u0", "u1", "x"))
    assert e.program.constraints == [x + u0 - 1, -x - u0 - 1, x + u0 + u1 - 1, -x - u0 - u1 - 1]
    assert not e.dropped


def test_terminal_cost_state_only():
    R = PolyRing(("x", "u"), QQ)
    x, u = R.gens()
    with pytest.raises(ValueError):
        ControlProblem(("x",), ("u",), [x + u], u**2, x * u, [], 1)
    with pytest.raises(ValueError):
        ControlProblem(("x",), ("u",), [x + u], u**2, None, [], 0)
    with pytest.raises(ValueError):
        ControlProblem(("x",), ("u",), [x + u, x], u**2, None, [], 1)
    e = horizon_expansion(ControlProblem(("x",), ("u",), [x + u], u**2, 5 * x**2, [], 1))
    T = e.program.objective.ring
    assert e.program.objective == T.gen("u0") ** 2 + 5 * (T.gen("x") + T.gen("u0")) ** 2


def test_control_problem_round_trip():
    cp = duffing_dynamics()
    again = ControlProblem.from_dict(cp.to_dict())
    assert again.to_dict() == cp.to_dict()


def test_duffing_dynamics_examples():
    cp = duffing_dynamics()
    assert np.array_equal(cp.step([0.0, 0.0], [0.0]), [0.0, 0.0])
    assert np.allclose(cp.step([1.0, 0.0], [0.0]), [1.0, -0.1], atol=1e-15)
    x1, x2, u = 0.7, -1.2, 0.4
    h, z = 0.05, 0.3
    assert np.allclose(cp.step([x1, x2], [u]), [x1 + h * x2, -h * x1 + (1 - 2 * z * h) * x2 + h * u - h * x1**3])


def test_duffing_expansion_shape(duffing_expansion):
    p = duffing_expansion.program
    assert p.space.decision_names == ("u0", "u1", "u2")
    assert p.space.parameter_names == ("x1", "x2")
    assert p.q == 10
    # the two bounds on x1 one step ahead involve no input
    assert [(step, k) for step, k, _ in duffing_expansion.dropped] == [(1, 0), (1, 1)]


def _rollout(x, us, p=DuffingPreset()):
    h, z = float(p.h), float(p.zeta)
    J = 0.0
    cons = []
    for u in us:
        x1, x2 = x
        x = (x1 + h * x2, -h * x1 + (1 - 2 * z * h) * x2 + h * u - h * x1**3)
        J += x[0] ** 2 + x[1] ** 2 + float(p.r) * u**2
        cons.append([x[0] - 5, -x[0] - 5, x[1] - 5, -x[1] - 5])
    return J, cons


def test_duffing_expansion_matches_rollout(duffing_expansion):
    p = duffing_expansion.program
    rng = random.Random(4)
    for _ in range(25):
        us = [rng.uniform(-3, 3) for _ in range(3)]
        x = [rng.uniform(-3, 3), rng.uniform(-3, 3)]
        point = {"u0": us[0], "u1": us[1], "u2": us[2], "x1": x[0], "x2": x[1]}
        J, cons = _rollout(x, us)
        assert float(p.objective.evaluate(point)) == pytest.approx(J, rel=1e-10, abs=1e-10)
        retained = [c for step in cons for c in step][2:]
        got = [float(g.evaluate(point)) for g in p.constraints]
        assert np.allclose(got, retained, rtol=1e-10, atol=1e-10)


@pytest.mark.slow
def test_duffing_origin_is_optimal(duffing_compiled):
    sol = solve(duffing_compiled, [0.0, 0.0])
    assert np.allclose(sol.u_star, 0, atol=1e-9) and sol.j_star == pytest.approx(0, abs=1e-12)


@pytest.mark.slow
def test_duffing_short_closed_loop(duffing_compiled):
    traj = simulate(duffing_compiled, [2.5, 1.0], 30)
    assert traj.error is None and not traj.violations
    assert traj.max_norm()[-1] < 1.0 and traj.j_star[-1] < traj.j_star[0]
    assert all(np.isfinite(traj.j_star))
    rows = traj.to_csv().splitlines()
    assert rows[0] == "step,x1,x2,u,j_star,solve_ms"
    assert len(rows) == 1 + 31 and rows[-1].endswith(",,,")


def test_free_response_violates_lower_bound(duffing_compiled):
    traj = simulate(duffing_compiled, [2.5, 1.0], 60, free_response=True)
    assert traj.violations
    step, idx, value = traj.violations[0]
    # constraint 3 is -x2 - 5 <= 0
    assert idx == 3 and traj.xs[step][1] < -5 and value > 0
    assert all(u == (0.0,) for u in traj.us)
