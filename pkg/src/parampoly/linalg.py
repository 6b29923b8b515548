"""Small dense eigenproblems: Hessenberg reduction, shifted QR, inverse iteration.

Everything works on complex128 numpy arrays.  Sizes here are tiny (companion
matrices rarely exceed a few dozen rows), so the routines favour clarity and
determinism over blocking or vectorized tricks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

EPS = np.finfo(float).eps
DEFAULT_MAX_DIM = 200
CLUSTER_TOL = 1e-8
CLUSTER_RETRIES = 3


class EigenError(ArithmeticError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial or []


@dataclass
class EigenPair:
    value: complex
    vector: np.ndarray  # unit 2-norm
    residual: float  # ||M v - value v||_2


def as_dense(M, max_dim: int | None = None) -> np.ndarray:
    """Validate and convert to a complex128 array (rejects NaN/inf)."""
    A = np.array(M, dtype=complex)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if max_dim is not None and max(A.shape) > max_dim:
        raise ValueError(f"matrix dimension {A.shape} exceeds cap {max_dim}")
    return A


# ---------------------------------------------------------------------------
# reductions


def balance(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal similarity D^-1 A D with power-of-two scalings (row/column norm equalization)."""
    A = A.copy()
    n = A.shape[0]
    d = np.ones(n)
    radix = 2.0
    # bounded scalings: triangular blocks would otherwise drive factors to overflow
    lo_cap, hi_cap = 2.0 ** -40, 2.0 ** 40
    for _ in range(100):
        converged = True
        for i in range(n):
            c = np.sum(np.abs(A[:, i])) - abs(A[i, i])
            r = np.sum(np.abs(A[i, :])) - abs(A[i, i])
            if c == 0.0 or r == 0.0:
                continue
            s = c + r
            f = 1.0
            while c < r / radix and d[i] * f < hi_cap:
                f *= radix
                c *= radix * radix
            while c > r * radix and d[i] * f > lo_cap:
                f /= radix
                c /= radix * radix
            if (c + r) / f < 0.95 * s:
                converged = False
                d[i] *= f
                A[i, :] /= f
                A[:, i] *= f
        if converged:
            break
    return A, d


def hessenberg(A: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form by Householder similarity transforms."""
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        # H <- P H P with P = I - 2 v v^H acting on rows/cols k+1..
        H[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _givens(x: complex, y: complex) -> tuple[float, complex]:
    """(c, s) with [[c, s], [-conj(s), c]] @ [x, y] = [r, 0], c real."""
    ax = abs(x)
    if y == 0:
        return 1.0, 0j
    if ax == 0.0:
        return 0.0, 1.0 + 0j
    norm = np.hypot(ax, abs(y))
    c = ax / norm
    s = (x / ax) * np.conj(y) / norm
    return c, s


def _wilkinson(a, b, c, d) -> complex:
    """Eigenvalue of [[a, b], [c, d]] closest to d."""
    half = (a - d) / 2.0
    disc = np.sqrt(half * half + b * c)
    m1 = d + half + disc
    m2 = d + half - disc
    return m1 if abs(m1 - d) <= abs(m2 - d) else m2


def hessenberg_qr_eigenvalues(H: np.ndarray, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by implicit single-shift complex QR.

    Each sweep chases the bulge from one Givens rotation down the active
    window; converged subdiagonals deflate from the bottom.
    """
    H = np.array(H, dtype=complex)
    n = H.shape[0]
    eig = np.zeros(n, dtype=complex)
    if n == 0:
        return eig
    hi = n - 1
    iters = 0
    total = 0
    budget = max_sweeps * n
    while hi >= 0:
        if hi == 0:
            eig[0] = H[0, 0]
            break
        # find the active window [lo, hi]
        lo = hi
        while lo > 0:
            s = abs(H[lo - 1, lo - 1]) + abs(H[lo, lo])
            if s == 0.0:
                s = np.abs(H).max()
            if abs(H[lo, lo - 1]) <= EPS * s:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            iters = 0
            continue
        total += 1
        iters += 1
        if total > budget:
            raise EigenError(
                "QR iteration did not converge",
                partial=list(eig[hi + 1:]),
            )
        if iters % 11 == 0:
            # exceptional shift breaks rare stagnation cycles
            shift = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            shift = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        x = H[lo, lo] - shift
        y = H[lo + 1, lo]
        for k in range(lo, hi):
            c, s = _givens(x, y)
            # rows k, k+1 over the window columns
            j0 = max(lo, k - 1)
            r1 = H[k, j0:hi + 1].copy()
            r2 = H[k + 1, j0:hi + 1].copy()
            H[k, j0:hi + 1] = c * r1 + s * r2
            H[k + 1, j0:hi + 1] = -np.conj(s) * r1 + c * r2
            # columns k, k+1 over the window rows
            i1 = min(k + 2, hi)
            c1 = H[lo:i1 + 1, k].copy()
            c2 = H[lo:i1 + 1, k + 1].copy()
            H[lo:i1 + 1, k] = c * c1 + np.conj(s) * c2
            H[lo:i1 + 1, k + 1] = -s * c1 + c * c2
            if k > lo:
                H[k + 1, k - 1] = 0.0
            if k < hi - 1:
                x = H[k + 1, k]
                y = H[k + 2, k]
    return eig


# ---------------------------------------------------------------------------
# linear solves


def lu_factor(A: np.ndarray, pivot_floor: float = 0.0):
    """LU with partial pivoting; zero pivots are replaced by ``pivot_floor``."""
    LU = np.array(A, dtype=complex)
    n = LU.shape[0]
    piv = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(LU[k:, k])))
        if p != k:
            LU[[k, p], :] = LU[[p, k], :]
            piv[[k, p]] = piv[[p, k]]
        if abs(LU[k, k]) <= pivot_floor:
            LU[k, k] = pivot_floor if pivot_floor > 0 else EPS
        if k + 1 < n:
            LU[k + 1:, k] /= LU[k, k]
            LU[k + 1:, k + 1:] -= np.outer(LU[k + 1:, k], LU[k, k + 1:])
    return LU, piv


def lu_solve(factors, b: np.ndarray) -> np.ndarray:
    LU, piv = factors
    n = LU.shape[0]
    x = np.array(b, dtype=complex)[piv]
    for i in range(1, n):
        x[i] -= LU[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - LU[i, i + 1:] @ x[i + 1:]) / LU[i, i]
    return x


def solve(A, b) -> np.ndarray:
    return lu_solve(lu_factor(as_dense(A)), np.asarray(b, dtype=complex))


# ---------------------------------------------------------------------------
# eigen decomposition


def eigenvalues(M, max_dim: int = DEFAULT_MAX_DIM, use_balance: bool = True) -> np.ndarray:
    A = as_dense(M, max_dim)
    if A.shape[0] != A.shape[1]:
        raise ValueError("eigenvalues of a non-square matrix")
    if use_balance and A.shape[0] > 1:
        A, _ = balance(A)
    return hessenberg_qr_eigenvalues(hessenberg(A))


def inverse_iteration(A: np.ndarray, lam: complex, seed: int, steps: int = 3) -> np.ndarray:
    n = A.shape[0]
    scale = max(np.linalg.norm(A, "fro"), 1.0)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    shifted = A - (lam + EPS * scale) * np.eye(n)
    factors = lu_factor(shifted, pivot_floor=EPS * scale)
    for _ in range(steps):
        w = lu_solve(factors, v)
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            break
        v = w / nw
    # fix the phase so the largest component is real positive (determinism)
    j = int(np.argmax(np.abs(v)))
    v = v * (abs(v[j]) / v[j])
    return v / np.linalg.norm(v)


def eigen_decompose(M, max_dim: int = DEFAULT_MAX_DIM, seed: int = 0) -> list[EigenPair]:
    """All eigenvalues (Hessenberg + shifted QR) and inverse-iteration eigenvectors."""
    A = as_dense(M, max_dim)
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise ValueError("eigen_decompose needs a square matrix")
    vals = eigenvalues(A, max_dim)
    order = sorted(range(n), key=lambda i: (vals[i].real, vals[i].imag))
    pairs = []
    for rank, i in enumerate(order):
        lam = vals[i]
        v = inverse_iteration(A, lam, seed * 7919 + rank)
        res = float(np.linalg.norm(A @ v - lam * v))
        pairs.append(EigenPair(complex(lam), v, res))
    return pairs


def rayleigh_value(M, v) -> tuple[complex, float]:
    """(v^H M v) / (v^H v) and the residual ||M v - value v||_2."""
    A = as_dense(M)
    v = np.asarray(v, dtype=complex)
    vv = np.vdot(v, v)
    if vv == 0:
        raise ValueError("zero vector")
    Av = A @ v
    lam = np.vdot(v, Av) / vv
    return complex(lam), float(np.linalg.norm(Av - lam * v))


def random_combination(matrices: Sequence, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """sum_i c_i M_i with c_i ~ U[-1, 1] from a seeded generator; returns (matrix, c)."""
    if not len(matrices):
        raise ValueError("random_combination of an empty list")
    mats = [as_dense(M) for M in matrices]
    shape = mats[0].shape
    if any(M.shape != shape for M in mats):
        raise ValueError("matrices must share one shape")
    c = np.random.default_rng(seed).uniform(-1.0, 1.0, size=len(mats))
    out = np.zeros(shape, dtype=complex)
    for ci, M in zip(c, mats):
        out += ci * M
    return out, c


def min_eigen_gap(values: np.ndarray) -> float:
    vals = np.asarray(values)
    if len(vals) < 2:
        return np.inf
    d = np.abs(vals[:, None] - vals[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def joint_eigenvectors(matrices: Sequence, seed: int, max_dim: int = DEFAULT_MAX_DIM):
    """Eigenpairs of a random combination of a commuting family.

    Redraws the combination (advancing the seed) up to CLUSTER_RETRIES times
    while two eigenvalues sit closer than CLUSTER_TOL * ||M_rand||_F.
    Returns (pairs, combination matrix, seed actually used, clustered flag).
    """
    used = seed
    for attempt in range(CLUSTER_RETRIES + 1):
        used = seed + attempt
        Mr, _ = random_combination(matrices, used)
        vals = eigenvalues(Mr, max_dim)
        gap = min_eigen_gap(vals)
        clustered = gap < CLUSTER_TOL * max(np.linalg.norm(Mr, "fro"), EPS)
        if not clustered:
            break
    pairs = eigen_decompose(Mr, max_dim, seed=used)
    return pairs, Mr, used, clustered
