import random

import numpy as np
import pytest

from parampoly.compiler import ActiveSet, ParametricProgram, compile_program
from parampoly.solver import (
    CandidatePoint,
    CandidateStatus,
    NoFeasibleCandidate,
    OnlineSolver,
    SpecializationFailure,
    Tolerances,
    filter_and_rank,
    snap_rational,
    solve,
    specialize_record,
)

from oracle import Oracle, agree, sample_case


def program(obj, cons=(), dec=("u",), par=("x",)):
    return ParametricProgram.from_strings(dec, par, obj, list(cons))


def statuses(sol):
    out = {}
    for c in sol.candidates:
        out[c.status] = out.get(c.status, 0) + 1
    return out


# -- solve examples ---------------------------------------------------------------


@pytest.mark.parametrize("x", [-3.0, 0.0, 7.5])
def test_active_lower_bound(x):
    sol = solve(compile_program(program("u^2", ["1 - u"])), [x])
    assert sol.u_star == pytest.approx((1.0,)) and sol.j_star == pytest.approx(1.0)
    by_mask = {c.source_mask.mask: c for c in sol.candidates}
    assert by_mask[0].status is CandidateStatus.REJECTED_INFEASIBLE
    assert by_mask[1].multipliers[0] == pytest.approx(2.0)


def test_tracking_unconstrained():
    sol = solve(compile_program(program("(u - x)^2")), [3.0])
    assert sol.u_star == pytest.approx((3.0,)) and sol.j_star == pytest.approx(0.0, abs=1e-12)


def test_quartic_companion():
    sol = solve(compile_program(program("u^4/4 - x*u")), [8.0])
    assert sol.u_star[0] == pytest.approx(2.0, abs=1e-10)
    assert sol.j_star == pytest.approx(-12.0, abs=1e-10)
    assert statuses(sol) == {CandidateStatus.ACCEPTED: 1, CandidateStatus.REJECTED_COMPLEX: 2}


def test_double_root_merges():
    # stationarity 3(u - 1)^2 has a double root
    sol = solve(compile_program(program("(u - 1)^3", ["u^2 - 4"])), [0.0])
    interior = [c for c in sol.candidates if c.source_mask.mask == 0]
    st = sorted(c.status.value for c in interior)
    assert st == ["Accepted", "Duplicate"]
    assert sol.u_star == pytest.approx((-2.0,)) and sol.j_star == pytest.approx(-27.0)


def test_no_feasible_candidate():
    cp = compile_program(program("u^2", ["1 - u", "u + 1"]))
    with pytest.raises(NoFeasibleCandidate) as err:
        solve(cp, [0.0])
    assert err.value.candidates


def test_wrong_parameter_count():
    cp = compile_program(program("(u - x)^2"))
    with pytest.raises(ValueError):
        solve(cp, [1.0, 2.0])
    with pytest.raises(ValueError):
        solve(cp, [float("nan")])


# -- specialization ---------------------------------------------------------------


def test_specialize_companion_matrix():
    cp = compile_program(program("u^3/3 - x*u"))
    nrec = specialize_record(cp.records[0], [4.0])
    assert np.array_equal(nrec.matrices[0], np.array([[0.0, 1.0], [4.0, 0.0]]))
    assert not nrec.fallback


def test_specialize_closed_form_rational():
    # stationarity 2xu - 4 gives u = 2/x
    p = program("x*u^2 - 4*u")
    cp = compile_program(p)
    rec = cp.records[0]
    assert str(rec.closed_form["u"]) == "(2)/(x)"
    assert specialize_record(rec, [4.0]).closed_form["u"] == 0.5
    assert rec.validity_certificates
    # x = 0 makes the certificate vanish; the exact recompute finds no solution
    nrec = specialize_record(rec, [0.0], program=p)
    assert nrec.fallback and nrec.closed_form is None


def test_certificate_forces_fallback():
    p = program("(u - x)^2")
    rec = compile_program(p).records[0]
    K = rec.closed_form["u"].field
    rec.validity_certificates = [K.gen("x") - K.one]
    assert specialize_record(rec, [2.0], program=p).fallback is False
    nrec = specialize_record(rec, [1.0], program=p)
    assert nrec.fallback and nrec.closed_form["u"] == pytest.approx(1.0)
    with pytest.raises(SpecializationFailure):
        specialize_record(rec, [1.0])


def test_solver_reports_fallback_warning():
    p = program("x*u^2 - 4*u", ["u^2 - 9"])
    sol = solve(compile_program(p), [0.0])
    assert any("fallback" in w for w in sol.warnings)
    assert sol.j_star == pytest.approx(-12.0)


def test_snap_rational():
    assert snap_rational(0.1) == pytest.approx(0.1, abs=1e-12)
    assert snap_rational(0.1).denominator == 10
    assert snap_rational(2.5).denominator == 2
    assert float(snap_rational(np.pi)) == pytest.approx(np.pi, abs=1e-11)


# -- filter ---------------------------------------------------------------------


def test_filter_examples():
    p = program("u^2", ["1 - u"])
    a0, a1 = ActiveSet(0, 1), ActiveSet(1, 1)
    cands = [CandidatePoint(a0, {"u": 0j}), CandidatePoint(a1, {"u": 1 + 0j, "mu0": 2 + 0j})]
    sol = filter_and_rank(cands, p, [0.0])
    assert [c.status for c in cands] == [CandidateStatus.REJECTED_INFEASIBLE, CandidateStatus.ACCEPTED]
    assert sol.u_star == (1.0,)

    neg = CandidatePoint(a1, {"u": 1 + 0j, "mu0": -0.5 + 0j})
    with pytest.raises(NoFeasibleCandidate):
        filter_and_rank([neg], program("(u - 1)^2 + (u - 1)/2", ["u - 1"]), [0.0])
    assert neg.status is CandidateStatus.REJECTED_MULTIPLIER_SIGN


def test_filter_complex_and_residual():
    p = program("u^4/4 - x*u")
    a = ActiveSet(0, 0)
    cands = [CandidatePoint(a, {"u": 2 + 1e-3j}), CandidatePoint(a, {"u": 2.1 + 0j}), CandidatePoint(a, {"u": 2 + 1e-12j})]
    sol = filter_and_rank(cands, p, [8.0])
    assert [c.status for c in cands] == [
        CandidateStatus.REJECTED_COMPLEX,
        CandidateStatus.REJECTED_RESIDUAL,
        CandidateStatus.ACCEPTED,
    ]
    assert sol.u_star == (2.0,)


def test_rejection_is_monotone():
    c = CandidatePoint(ActiveSet(0, 0), {"u": 1j})
    c.reject(CandidateStatus.REJECTED_COMPLEX)
    c.reject(CandidateStatus.REJECTED_INFEASIBLE)
    assert c.status is CandidateStatus.REJECTED_COMPLEX and not c.alive


def test_tie_break_prefers_smaller_mask():
    # u = +-1 both give J = 0; mask 0 finds both, ordering picks lexicographically smaller u
    sol = solve(compile_program(program("(u^2 - 1)^2")), [0.0])
    assert sol.u_star == pytest.approx((-1.0,))


# -- tolerances -----------------------------------------------------------------


def test_tolerance_overrides():
    t = Tolerances.from_env({"PARAMPOLY_TOL_FEAS": "1e-4", "OTHER": "x"})
    assert t.feas == 1e-4 and t.imag == 1e-7
    assert t.with_overrides(feas=None, mu=1e-3).mu == 1e-3
    with pytest.raises(ValueError):
        Tolerances.from_env({"PARAMPOLY_TOL_RES": "abc"})
    with pytest.raises(ValueError):
        Tolerances(imag=-1.0)


def test_loose_feasibility_admits_boundary_violation():
    cp = compile_program(program("(u - 2)^2", ["u - 1 - x"]))
    sol = solve(cp, [1e-6])
    assert sol.u_star[0] == pytest.approx(1 + 1e-6)


# -- determinism, soundness, oracle -----------------------------------------------


def test_determinism():
    cp = compile_program(program("u^4/4 + v^4/4 - x*u*v + u", ["u^2 + v^2 - 4"], dec=("u", "v")))
    a = OnlineSolver(cp, seed=5).solve([1.3]).to_json(timings=False)
    b = OnlineSolver(cp, seed=5).solve([1.3]).to_json(timings=False)
    assert a == b
    c = OnlineSolver(cp).solve([1.3], seed=6)
    assert c.u_star == pytest.approx(a["u_star"], abs=1e-9)


def _kkt_gap(o: Oracle, cand, x):
    grad = np.array(o.dJ(*cand.u, *x), float)
    for i, mu in cand.multipliers.items():
        grad = grad + mu * np.array(o.dG[i](*cand.u, *x), float)
    return float(np.max(np.abs(grad)))


@pytest.mark.parametrize("seed", range(6))
def test_soundness_and_oracle_agreement(seed):
    rng = random.Random(1000 + seed)
    for _ in range(4):
        p, cp, x, ref, _ = sample_case(rng)
        o = Oracle(p)
        sol = solve(cp, x)
        tol = Tolerances()
        for c in sol.accepted:
            assert all(float(g(*c.u, *x)) <= tol.feas for g in o.G)
            assert all(v >= -tol.mu for v in c.multipliers.values())
            assert c.residual <= tol.res
            assert _kkt_gap(o, c, x) < 1e-6 * (1 + max(abs(v) for v in c.multipliers.values()) if c.multipliers else 1)
        assert agree(sol.j_star, ref.j_star), (p.objective, p.constraints, x)
        # interior optimum is produced by the all-inactive record
        if all(float(g(*ref.u_star, *x)) < -1e-4 for g in o.G):
            best = [c for c in sol.accepted if agree(c.objective, ref.j_star)]
            assert any(c.source_mask.mask == 0 for c in best)
