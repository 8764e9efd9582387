"""Dense linear-algebra kernels for rank-r minimum-norm least squares.

Everything here works on complex double-precision arrays.  Real problems are
embedded with zero imaginary parts so that there is a single code path.

The central problem is computing ``pinv(A_r) @ b`` where ``A_r`` is the best
rank-r approximation of ``A`` (its truncated SVD).  Four routes are provided:

* :func:`rankr_pinv_apply_svd` -- the SVD-based reference route, always valid;
* :func:`minnorm_solve_full_row` -- QR route for full-row-rank wide matrices;
* :func:`rankr_solve_wide` / :func:`rankr_solve_tall` -- QR + iterative
  kernel-vector extraction for wide (r < m < n) and tall (r <= n <= m) shapes;
* :func:`lemma_mns_solve` -- the stacked-system identity, given an explicit
  orthonormal basis of the trailing right singular subspace.

The non-SVD routes require a trustworthy gap between sigma_r and sigma_{r+1};
they warn below ``min_gap`` (default 10) and refuse below a factor of 2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    AmbiguousRankError,
    IllConditionedTriangularError,
    InnerIterationFailureError,
    InvalidBasisError,
    InvalidInputError,
    InvalidRankError,
    RankDeficientProjectionError,
)

MIN_GAP_WARN = 10.0
MIN_GAP_HARD = 2.0

_DIAG_RTOL = 1e-12  # triangular solve breakdown threshold, relative to max |diag|


def as_matrix(a) -> np.ndarray:
    """Validate and convert to a finite complex128 2-d array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-d array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix has non-finite entries")
    return arr


def as_vector(b) -> np.ndarray:
    """Validate and convert to a finite complex128 1-d array."""
    arr = np.asarray(b, dtype=np.complex128)
    if arr.ndim != 1:
        raise InvalidInputError(f"expected a 1-d array, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("vector has non-finite entries")
    return arr


@dataclass(frozen=True)
class GapReport:
    """Singular values straddling a rank decision and their ratio."""

    sigma_r: float
    sigma_r_plus_1: float
    gap_ratio: float


@dataclass(frozen=True)
class TruncatedSVD:
    """Leading-r singular triplets of a matrix.

    ``U`` is m-by-r, ``V`` is n-by-r, ``sigma`` holds the r leading singular
    values in nonincreasing order.  ``U @ diag(sigma) @ V.conj().T``
    reconstructs the rank-r projection of the original matrix.
    """

    sigma: np.ndarray
    U: np.ndarray
    V: np.ndarray

    @property
    def r(self) -> int:
        return len(self.sigma)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.sigma) @ self.V.conj().T


def full_svd(A) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full (thin) SVD of A, returned as (U, sigma, V) with V's columns the
    right singular vectors."""
    A = as_matrix(A)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    return U, s, Vh.conj().T


def _gap_report(s: np.ndarray, r: int, min_dim: int) -> GapReport:
    sigma_r = float(s[r - 1]) if r >= 1 else 0.0
    sigma_r1 = float(s[r]) if r < min_dim else 0.0
    if r == 0:
        ratio = 0.0
    elif sigma_r1 == 0.0:
        ratio = np.inf
    else:
        ratio = sigma_r / sigma_r1
    return GapReport(sigma_r, sigma_r1, ratio)


def truncated_svd(A, r: int) -> tuple[TruncatedSVD, GapReport]:
    """Leading r singular triplets of A together with the gap report at r."""
    A = as_matrix(A)
    min_dim = min(A.shape)
    if not 1 <= r <= min_dim:
        raise InvalidRankError(f"rank {r} not in [1, {min_dim}]")
    U, s, V = full_svd(A)
    return TruncatedSVD(s[:r].copy(), U[:, :r].copy(), V[:, :r].copy()), _gap_report(
        s, r, min_dim
    )


def numerical_rank(A, theta: float) -> tuple[int, GapReport]:
    """Number of singular values exceeding the absolute tolerance theta."""
    A = as_matrix(A)
    if theta < 0:
        raise InvalidInputError("theta must be nonnegative")
    s = np.linalg.svd(A, compute_uv=False)
    r = int(np.sum(s > theta))
    return r, _gap_report(s, r, min(A.shape))


def nullspace_basis(A, d: int) -> np.ndarray:
    """n-by-d matrix of the trailing d right singular vectors of A."""
    A = as_matrix(A)
    n = A.shape[1]
    if not 0 <= d <= n:
        raise InvalidInputError(f"cannot extract {d} nullspace vectors from {n} columns")
    if d == 0:
        return np.zeros((n, 0), dtype=np.complex128)
    _, _, Vh = np.linalg.svd(A, full_matrices=True)
    return Vh.conj().T[:, n - d :]


def rankr_pinv_apply_svd(A, r: int, b) -> np.ndarray:
    """Minimum-norm least-squares solution of A_r z = b via the SVD.

    This is the reference route: z = sum_{j<=r} (u_j^H b / sigma_j) v_j.
    """
    A = as_matrix(A)
    b = as_vector(b)
    if b.shape[0] != A.shape[0]:
        raise InvalidInputError(f"b has dim {b.shape[0]}, expected {A.shape[0]}")
    tsvd, _ = truncated_svd(A, r)
    if tsvd.sigma[-1] == 0.0:
        raise RankDeficientProjectionError(f"sigma_{r} = 0, cannot apply rank-{r} pseudoinverse")
    y = (tsvd.U.conj().T @ b) / tsvd.sigma
    return tsvd.V @ y


def _check_triangular_diag(T: np.ndarray) -> None:
    diag = np.abs(np.diag(T))
    if diag.size and diag.min() <= _DIAG_RTOL * max(diag.max(), 1e-300):
        raise IllConditionedTriangularError(
            f"triangular factor has a negligible diagonal entry ({diag.min():.3e})"
        )


def minnorm_solve_full_row(A, b) -> np.ndarray:
    """Minimum-norm solution of A z = b for a full-row-rank wide A (r = m < n).

    Uses the thin QR of A^H: with A^H = Q R, solve R^H y = b and set z = Q y.
    """
    A = as_matrix(A)
    b = as_vector(b)
    m, n = A.shape
    if m >= n:
        raise InvalidInputError(f"expected a wide matrix, got shape {A.shape}")
    if b.shape[0] != m:
        raise InvalidInputError(f"b has dim {b.shape[0]}, expected {m}")
    Q, R = np.linalg.qr(A.conj().T)
    _check_triangular_diag(R)
    y = scipy.linalg.solve_triangular(R.conj().T, b, lower=True)
    return Q @ y


def _lstsq(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return np.linalg.lstsq(M, rhs, rcond=None)[0]


def kernel_refine(
    G,
    y0,
    tau: float,
    inner_tol: float = 1e-12,
    max_inner: int = 30,
) -> np.ndarray:
    """Refine a unit vector toward the smallest singular direction of G.

    Gauss-Newton on the stacked system (tau (y^H y - 1), G y) = 0, which pins
    the iterate to the unit sphere while driving G y to zero.  Succeeds when
    ||G y|| <= inner_tol * tau and the last correction is below inner_tol.
    """
    G = as_matrix(G)
    y = as_vector(y0)
    if y.shape[0] != G.shape[1]:
        raise InvalidInputError("y0 dimension does not match G")
    if tau <= 0:
        raise InvalidInputError("tau must be positive")
    nrm = np.linalg.norm(y)
    if nrm == 0:
        raise InvalidInputError("y0 must be nonzero")
    y = y / nrm
    for _ in range(max_inner):
        stacked = np.vstack([2.0 * tau * y.conj()[None, :], G])
        rhs = np.concatenate([[tau * (np.vdot(y, y) - 1.0)], G @ y])
        delta = _lstsq(stacked, rhs)
        y = y - delta
        if (
            np.linalg.norm(G @ y) <= inner_tol * tau
            and np.linalg.norm(delta) <= inner_tol * max(1.0, np.linalg.norm(y))
        ):
            return y / np.linalg.norm(y)
    raise InnerIterationFailureError(
        f"kernel refinement did not converge in {max_inner} iterations"
    )


def _givens(a: complex, b: complex):
    r = np.hypot(abs(a), abs(b))
    if r == 0.0:
        return np.eye(2, dtype=np.complex128)
    return np.array([[np.conj(a), np.conj(b)], [-b, a]], dtype=np.complex128) / r


def _prepend_row(T: np.ndarray, c: np.ndarray, row: np.ndarray, rhs_entry: complex):
    """Absorb a new top row into an upper-triangular factor via Givens rotations.

    (T, c) represent a triangular system T y = c.  Returns the updated pair for
    the stacked system [row; T_old] y = [rhs_entry; c_old] after re-triangularization;
    the rotated-out residual component is dropped.
    """
    k = T.shape[1]
    M = np.vstack([row[None, :], T])
    v = np.concatenate([[rhs_entry], c])
    for j in range(k):
        G = _givens(M[j, j], M[j + 1, j])
        M[j : j + 2, j:] = G @ M[j : j + 2, j:]
        v[j : j + 2] = G @ v[j : j + 2]
        M[j + 1, j] = 0.0
    return M[:k], v[:k]


def _check_gap(A: np.ndarray, r: int, context: str) -> None:
    s = np.linalg.svd(A, compute_uv=False)
    if s[r - 1] == 0.0:
        raise RankDeficientProjectionError(f"sigma_{r} = 0 in {context}")
    if r >= min(A.shape):
        return
    if s[r] == 0.0:
        return
    ratio = s[r - 1] / s[r]
    if ratio < MIN_GAP_HARD:
        raise AmbiguousRankError(
            f"{context}: gap sigma_{r}/sigma_{r + 1} = {ratio:.2f} is below {MIN_GAP_HARD}"
        )
    if ratio < MIN_GAP_WARN:
        warnings.warn(
            f"{context}: gap sigma_{r}/sigma_{r + 1} = {ratio:.2f} is below {MIN_GAP_WARN}; "
            "the computed kernel directions may be inaccurate",
            stacklevel=3,
        )


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    y = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return y / np.linalg.norm(y)


def _kernel_chain(T, c, count, tau, rng, retries=3):
    """Pull ``count`` kernel directions out of a triangular factor.

    Each found direction is absorbed back into the factor as a 2*tau row,
    lifting it out of the nullspace so the next smallest direction surfaces.
    Returns the final (T, c) pair and the directions as columns.
    """
    dim = T.shape[1]
    U = np.zeros((dim, count), dtype=np.complex128)
    for k in range(count):
        last_err = None
        for _ in range(retries):
            try:
                u = kernel_refine(T, _random_unit(rng, dim), tau)
                break
            except InnerIterationFailureError as err:
                last_err = err
        else:
            raise last_err
        U[:, k] = u
        T, c = _prepend_row(T, c, 2.0 * tau * u.conj(), 0.0)
    return T, c, U


def _solve_upper(T: np.ndarray, c: np.ndarray) -> np.ndarray:
    _check_triangular_diag(T)
    return scipy.linalg.solve_triangular(T, c, lower=False)


def rankr_solve_wide(A, r: int, b, seed: int = 0) -> np.ndarray:
    """pinv(A_r) @ b for r < m < n via thin QR of A^H plus kernel extraction.

    The m - r near-kernel directions of R0^H are found iteratively, absorbed
    into the triangular factor, and the resulting least-squares solution is
    projected off them and mapped back through Q0.
    """
    A = as_matrix(A)
    b = as_vector(b)
    m, n = A.shape
    if not r < m < n:
        raise InvalidRankError(f"rankr_solve_wide needs r < m < n, got r={r}, shape={A.shape}")
    if b.shape[0] != m:
        raise InvalidInputError(f"b has dim {b.shape[0]}, expected {m}")
    _check_gap(A, r, "rankr_solve_wide")
    rng = np.random.default_rng(seed)
    tau = float(np.linalg.norm(A, np.inf))

    Q0, R0 = np.linalg.qr(A.conj().T)
    # R0^H is lower triangular; reverse rows and columns to reuse the
    # upper-triangular chain machinery, and flip back at the end.
    T = R0.conj().T[::-1, ::-1]
    c = b[::-1].copy()
    T, c, U_hat = _kernel_chain(T, c, m - r, tau, rng)
    y = _solve_upper(T, c)[::-1]
    U = U_hat[::-1, :]
    return Q0 @ (y - U @ (U.conj().T @ y))


def rankr_solve_tall(A, r: int, b, seed: int = 0) -> np.ndarray:
    """pinv(A_r) @ b for r <= n <= m via thin QR of A plus kernel extraction."""
    A = as_matrix(A)
    b = as_vector(b)
    m, n = A.shape
    if not r <= n <= m:
        raise InvalidRankError(f"rankr_solve_tall needs r <= n <= m, got r={r}, shape={A.shape}")
    if b.shape[0] != m:
        raise InvalidInputError(f"b has dim {b.shape[0]}, expected {m}")
    _check_gap(A, r, "rankr_solve_tall")
    rng = np.random.default_rng(seed)
    tau = float(np.linalg.norm(A, np.inf))

    Q0, R0 = np.linalg.qr(A)
    T = R0.copy()
    c = Q0.conj().T @ b
    T, c, U = _kernel_chain(T, c, n - r, tau, rng)
    y = _solve_upper(T, c)
    return y - U @ (U.conj().T @ y)


def lemma_mns_solve(A, N, mu: float, b) -> np.ndarray:
    """pinv(A_r) @ b through the stacked-system identity.

    N must hold an orthonormal basis of span{v_{r+1}, ..., v_n}; then
    (I - N N^H) pinv([mu N^H; A]) [0; b] equals pinv(A_r) b for any mu > 0.
    """
    A = as_matrix(A)
    N = as_matrix(N)
    b = as_vector(b)
    if mu <= 0:
        raise InvalidInputError("mu must be positive")
    n = A.shape[1]
    if N.shape[0] != n:
        raise InvalidBasisError(f"N has {N.shape[0]} rows, expected {n}")
    d = N.shape[1]
    if d and np.linalg.norm(N.conj().T @ N - np.eye(d)) > 1e-10:
        raise InvalidBasisError("columns of N are not orthonormal within 1e-10")
    stacked = np.vstack([mu * N.conj().T, A])
    rhs = np.concatenate([np.zeros(d, dtype=np.complex128), b])
    y = _lstsq(stacked, rhs)
    return y - N @ (N.conj().T @ y)
