"""Dense linear-algebra kernels shared by the solvers.

Everything here is a thin contract over LAPACK (via scipy): dense LU solves
with many right-hand sides, truncated SVD and dense eigendecomposition.
Real inputs stay in real arithmetic; complex inputs are promoted as needed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import EmptySpectrum, NoConvergence, NonFiniteEntries, SingularMatrix

PIVOT_FLOOR = 1e-300
NEAR_SINGULAR_RATIO = 1e-13
DEFAULT_EIG_CAP = 5000


def as_dense(a, name="matrix") -> np.ndarray:
    """Return ``a`` as a 2-D float or complex array, rejecting NaN/Inf."""
    arr = np.asarray(a)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.complexfloating):
        arr = arr.astype(float, copy=False)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEntries(f"{name} has non-finite entries")
    return arr


class SolveInfo(NamedTuple):
    min_pivot: float
    max_pivot: float

    @property
    def pivot_ratio(self) -> float:
        return self.min_pivot / self.max_pivot if self.max_pivot > 0 else 0.0

    @property
    def near_singular(self) -> bool:
        return self.pivot_ratio < NEAR_SINGULAR_RATIO


def solve_multi(A, B, return_info=False):
    """Solve ``A X = B`` for all columns of ``B`` with a single LU factorization.

    Raises SingularMatrix when the smallest pivot falls below 1e-300 * ||A||.
    With ``return_info`` the pivot magnitudes are returned as a cheap
    condition indicator.
    """
    A = as_dense(A, "A")
    Bm = np.asarray(B)
    vector_rhs = Bm.ndim == 1
    Bm = as_dense(Bm, "B")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"A must be square, got {A.shape}")
    if Bm.shape[0] != n:
        raise ValueError(f"B has {Bm.shape[0]} rows, expected {n}")

    scale = np.abs(A).max() if A.size else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    info = SolveInfo(float(pivots.min()), float(pivots.max()))
    if scale == 0.0 or info.min_pivot <= PIVOT_FLOOR * scale:
        raise SingularMatrix(f"pivot {info.min_pivot:.3e} below threshold for ||A|| = {scale:.3e}")
    if np.iscomplexobj(Bm) and not np.iscomplexobj(lu):
        X = sla.lu_solve((lu, piv), Bm.real, check_finite=False) + 1j * sla.lu_solve(
            (lu, piv), Bm.imag, check_finite=False)
    else:
        X = sla.lu_solve((lu, piv), Bm.astype(lu.dtype, copy=False) if np.iscomplexobj(lu) else Bm,
                         check_finite=False)
    if vector_rhs:
        X = X[:, 0]
    return (X, info) if return_info else X


@dataclass(frozen=True)
class SvdResult:
    """Leading part of an SVD ``A ~ U diag(s) Vh``.

    ``sigma`` keeps the complete list of singular values so that callers can
    inspect the decay beyond the truncation point.
    """

    U: np.ndarray
    s: np.ndarray
    Vh: np.ndarray
    sigma: np.ndarray
    rel_tol: float

    @property
    def rank(self) -> int:
        return self.s.size

    @property
    def scaled_sigma(self) -> np.ndarray:
        return self.sigma / self.sigma[0]

    def truncate(self, k: int) -> "SvdResult":
        return SvdResult(self.U[:, :k], self.s[:k], self.Vh[:k], self.sigma, self.rel_tol)


def full_svd(A) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A = as_dense(A, "A")
    try:
        return sla.svd(A, full_matrices=False, check_finite=False)
    except np.linalg.LinAlgError:
        try:
            return sla.svd(A, full_matrices=False, check_finite=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc


def truncated_svd(A, rel_tol: float) -> SvdResult:
    """Keep the singular triplets with ``sigma_j > rel_tol * sigma_1``."""
    if not 0.0 < rel_tol < 1.0:
        raise ValueError("rel_tol must lie in (0, 1)")
    U, s, Vh = full_svd(A)
    if s.size == 0 or s[0] == 0.0:
        raise EmptySpectrum("matrix is zero")
    k = int(np.count_nonzero(s > rel_tol * s[0]))
    return SvdResult(U[:, :k], s[:k], Vh[:k], s, rel_tol)


class EigDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray
    cond: float


def dense_eig(A, cap: int = DEFAULT_EIG_CAP) -> EigDecomposition:
    """Eigenvalues and unit-norm eigenvectors of a small dense matrix.

    ``cond`` is the 2-norm condition number of the eigenvector matrix; a huge
    value signals a (nearly) defective matrix.
    """
    A = as_dense(A, "A")
    k = A.shape[0]
    if A.shape != (k, k):
        raise ValueError(f"A must be square, got {A.shape}")
    if k > cap:
        raise ValueError(f"dense eigenproblem of size {k} exceeds cap {cap}")
    if k == 0:
        return EigDecomposition(np.empty(0, complex), np.empty((0, 0), complex), 1.0)
    try:
        w, V = sla.eig(A, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    V = V / np.linalg.norm(V, axis=0)
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(V))
    if not np.isfinite(cond):
        cond = np.inf
    return EigDecomposition(w.astype(complex), V.astype(complex), cond)
