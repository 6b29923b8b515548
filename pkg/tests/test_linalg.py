import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parampoly.linalg import (
    EigenError,
    as_dense,
    balance,
    eigen_decompose,
    eigenvalues,
    hessenberg,
    hessenberg_qr_eigenvalues,
    joint_eigenvectors,
    lu_factor,
    lu_solve,
    random_combination,
    rayleigh_value,
    solve,
)


def sorted_c(vals):
    return sorted(np.round(np.asarray(vals, dtype=complex), 10), key=lambda z: (z.real, z.imag))


def test_eigen_examples():
    assert sorted_c(eigenvalues([[0, 4], [1, 0]])) == [-2, 2]
    assert np.allclose(eigenvalues(np.eye(3)), 1)
    assert sorted_c(eigenvalues([[0, -1], [1, 0]])) == [-1j, 1j]


def test_eigen_decompose_pairs_are_unit_and_sorted():
    pairs = eigen_decompose([[0, 4], [1, 0]])
    assert [p.value for p in pairs] == pytest.approx([-2, 2])
    for p in pairs:
        assert np.linalg.norm(p.vector) == pytest.approx(1)
        assert p.residual < 1e-12


def test_rayleigh_examples():
    M = [[0, 4], [1, 0]]
    lam, res = rayleigh_value(M, np.array([2, 1]) / np.sqrt(5))
    assert lam == pytest.approx(2) and res < 1e-14
    lam, _ = rayleigh_value(M, np.array([-2, 1]) / np.sqrt(5))
    assert lam == pytest.approx(-2)
    lam, res = rayleigh_value(3.5 * np.eye(4), np.arange(1, 5))
    assert lam == pytest.approx(3.5) and res < 1e-14
    with pytest.raises(ValueError):
        rayleigh_value(M, [0, 0])


def test_random_combination_examples():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    out, c = random_combination([A], 5)
    assert np.allclose(out, c[0] * A) and -1 <= c[0] <= 1
    out, c = random_combination([np.eye(3), np.eye(3)], 9)
    assert np.allclose(out, (c[0] + c[1]) * np.eye(3))
    a, _ = random_combination([A, A.T], 42)
    b, _ = random_combination([A, A.T], 42)
    assert a.tobytes() == b.tobytes()
    with pytest.raises(ValueError):
        random_combination([], 1)
    with pytest.raises(ValueError):
        random_combination([np.eye(2), np.eye(3)], 1)


def test_rejects_non_finite_and_oversize():
    with pytest.raises(ValueError):
        as_dense([[np.nan, 0], [0, 1]])
    with pytest.raises(ValueError):
        eigen_decompose([[np.inf]])
    with pytest.raises(ValueError):
        eigen_decompose(np.eye(5), max_dim=4)
    with pytest.raises(ValueError):
        eigen_decompose(np.ones((2, 3)))


def test_iteration_budget_reports_partial():
    H = hessenberg(np.random.default_rng(0).standard_normal((12, 12)).astype(complex))
    with pytest.raises(EigenError) as err:
        hessenberg_qr_eigenvalues(H, max_sweeps=0)
    assert isinstance(err.value.partial, list)


def test_hessenberg_is_similar():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    H = hessenberg(A)
    assert np.allclose(np.tril(H, -2), 0)
    assert np.trace(H) == pytest.approx(np.trace(A))
    assert np.linalg.norm(H, "fro") == pytest.approx(np.linalg.norm(A, "fro"))


def test_balance_is_diagonal_similarity():
    A = np.array([[1, 1e6, 0], [1e-6, 2, 1e6], [0, 1e-6, 3]], dtype=complex)
    B, d = balance(A)
    assert np.allclose(B, np.diag(1 / d) @ A @ np.diag(d))
    assert np.all(np.log2(d) == np.round(np.log2(d)))
    # triangular input must terminate
    balance(np.triu(np.ones((6, 6), dtype=complex)))


def test_lu_solve_matches_numpy():
    rng = np.random.default_rng(7)
    for n in (1, 3, 8):
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b = rng.standard_normal(n)
        assert np.allclose(solve(A, b), np.linalg.solve(A, b))
        f = lu_factor(A)
        assert np.allclose(A @ lu_solve(f, b), b)


@settings(max_examples=80)
@given(n=st.integers(1, 12), seed=st.integers(0, 2**31), cplx=st.booleans())
def test_against_numpy_oracle(n, seed, cplx):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if cplx else 0)
    ours = eigen_decompose(A, seed=seed)
    ref = np.linalg.eigvals(A)
    scale = np.linalg.norm(A, "fro")
    # each numpy eigenvalue is matched by one of ours
    for z in ref:
        assert min(abs(p.value - z) for p in ours) <= 1e-8 * max(1, scale)
    # trace check
    assert abs(sum(p.value for p in ours) - np.trace(A)) <= 1e-8 * max(1, abs(np.trace(A)), scale)
    # eigen residuals on well-conditioned matrices
    for p in ours:
        assert p.residual <= 1e-8 * scale
        assert np.linalg.norm(p.vector) == pytest.approx(1)


def test_determinism():
    A = np.random.default_rng(11).standard_normal((9, 9))
    a = eigen_decompose(A, seed=4)
    b = eigen_decompose(A, seed=4)
    assert all(p.value == q.value and p.vector.tobytes() == q.vector.tobytes() for p, q in zip(a, b))


def test_joint_eigenvectors_of_commuting_family():
    # matrices sharing eigenvectors V with distinct joint eigenvalues
    rng = np.random.default_rng(2)
    V = rng.standard_normal((4, 4))
    Vi = np.linalg.inv(V)
    D = [np.diag(rng.standard_normal(4)) for _ in range(3)]
    mats = [V @ d @ Vi for d in D]
    pairs, Mr, used, clustered = joint_eigenvectors(mats, seed=8)
    assert not clustered and len(pairs) == 4
    found = []
    for p in pairs:
        vals = []
        for M in mats:
            lam, res = rayleigh_value(M, p.vector)
            assert res <= 1e-6 * np.linalg.norm(M, "fro")
            vals.append(lam.real)
        found.append(vals)
    ref = sorted(map(list, zip(*[np.diag(d) for d in D])))
    assert np.allclose(sorted(found), ref, atol=1e-9)


def test_clustered_combination_is_redrawn_then_flagged():
    # identical eigenvalues in every combination cannot be separated
    pairs, Mr, used, clustered = joint_eigenvectors([np.eye(3), 2 * np.eye(3)], seed=1)
    assert clustered and used == 1 + 3
    assert all(p.residual < 1e-12 for p in pairs)
