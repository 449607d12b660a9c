"""Resolvent probing: solves ``T(z_i)^{-1} U``, moments and block Hankel matrices."""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NearSingularWarning, OrderTooHigh, SingularMatrix, SingularPoint
from .problems import NepProblem
from .sampling import SamplingSet

THREADS_ENV = "NEPSOLVE_NUM_THREADS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def probing_matrix(n: int, L: int, seed, real: bool) -> np.ndarray:
    """Gaussian ``n x L`` probing matrix; complex entries get independent parts."""
    rng = np.random.default_rng(seed)
    if real:
        return rng.standard_normal((n, L))
    return rng.standard_normal((n, L)) + 1j * rng.standard_normal((n, L))


@dataclass
class ProbeTable:
    """Solved blocks ``Y_i = T(z_i)^{-1} U`` for every sampling point.

    Failed points hold NaN blocks and ``ok[i] = False``.
    """

    U: np.ndarray
    seed: Optional[int]
    points: np.ndarray
    Y: np.ndarray
    ok: np.ndarray
    pivot_ratio: np.ndarray
    near_singular: np.ndarray

    @property
    def N(self) -> int:
        return self.points.size

    @property
    def L(self) -> int:
        return self.U.shape[1]

    @property
    def n(self) -> int:
        return self.U.shape[0]

    def sampling_matrix(self, normalize: bool = True) -> np.ndarray:
        """``S = [Y_0, Y_1, ...]`` over successful points, columns optionally unit-norm."""
        blocks = self.Y[self.ok]
        S = np.concatenate(list(blocks), axis=1) if blocks.size else np.empty((self.n, 0))
        if normalize and S.size:
            norms = np.linalg.norm(S, axis=0)
            norms[norms == 0] = 1.0
            S = S / norms
        return S

    def save(self, path) -> None:
        np.savez_compressed(
            path, U=self.U, seed=-1 if self.seed is None else self.seed, points=self.points, Y=self.Y,
            ok=self.ok, pivot_ratio=self.pivot_ratio, near_singular=self.near_singular,
        )

    @classmethod
    def load(cls, path) -> "ProbeTable":
        with np.load(path) as d:
            seed = int(d["seed"])
            return cls(d["U"], None if seed < 0 else seed, d["points"], d["Y"], d["ok"],
                       d["pivot_ratio"], d["near_singular"])


def _solve_points(problem: NepProblem, points, U, workers):
    def one(z):
        try:
            X, info = problem.solve(z, U, return_info=True)
            return X, (np.nan if info is None else info.pivot_ratio), True
        except SingularMatrix:
            return None, 0.0, False

    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, points))
    return [one(z) for z in points]


def _assemble_table(problem, points, U, seed, workers) -> ProbeTable:
    for z in points:
        for s in problem.singular_points:
            if abs(complex(z) - s) <= 1e-15 * max(1.0, abs(s)):
                raise SingularPoint(f"sampling point {z} is a singular point of T")
    out = _solve_points(problem, points, U, workers)
    dtype = np.result_type(U.dtype, float)
    for X, _, ok in out:
        if ok:
            dtype = np.result_type(dtype, X.dtype)
    N = len(points)
    Y = np.full((N, problem.n, U.shape[1]), np.nan, dtype=dtype)
    ok = np.zeros(N, bool)
    ratio = np.zeros(N)
    for i, (X, r, good) in enumerate(out):
        if good:
            Y[i] = X
        ok[i], ratio[i] = good, r
    if not ok.any():
        raise SingularMatrix("T(z) was singular at every sampling point")
    if not ok.all():
        warnings.warn(f"T(z) singular at {int((~ok).sum())} sampling point(s); they are left out",
                      NearSingularWarning)
    near = ok & (ratio < 1e-13)
    if near.any():
        warnings.warn(f"{near.sum()} sampling point(s) nearly coincide with eigenvalues", NearSingularWarning)
    return ProbeTable(U, seed, np.asarray(points), Y, ok, ratio, near)


def make_probe(problem: NepProblem, sampling: SamplingSet, L: int = 1, seed=0, U=None,
               workers: Optional[int] = None) -> ProbeTable:
    """Solve ``T(z_i) Y_i = U`` at every sampling point.

    ``U`` is Gaussian with the given seed unless supplied.  It is real when the
    problem is real and all points are real, in which case every solve stays
    in real arithmetic.
    """
    real = problem.real and sampling.is_real
    if U is None:
        if L < 1:
            raise ValueError("L must be >= 1")
        U = probing_matrix(problem.n, L, seed, real)
    else:
        U = np.asarray(U)
        if U.ndim == 1:
            U = U.reshape(-1, 1)
        if U.shape[0] != problem.n:
            raise ValueError(f"U has {U.shape[0]} rows, expected {problem.n}")
    points = sampling.points.real if real else sampling.points
    return _assemble_table(problem, points, U, seed, workers or default_workers())


def extend_probe(table: ProbeTable, problem: NepProblem, new_points, workers=None) -> ProbeTable:
    """Append points to a table, solving only for the new ones (same ``U``)."""
    new_points = np.atleast_1d(np.asarray(new_points))
    if new_points.size == 0:
        return table
    extra = _assemble_table(problem, new_points, table.U, table.seed, workers or default_workers())
    dtype = np.result_type(table.Y.dtype, extra.Y.dtype)
    return ProbeTable(
        table.U, table.seed,
        np.concatenate([table.points.astype(np.result_type(table.points, new_points)), new_points]),
        np.concatenate([table.Y.astype(dtype), extra.Y.astype(dtype)]),
        np.concatenate([table.ok, extra.ok]),
        np.concatenate([table.pivot_ratio, extra.pivot_ratio]),
        np.concatenate([table.near_singular, extra.near_singular]),
    )


def _pairwise_contract(c: np.ndarray, Y: np.ndarray, leaf: int = 8) -> np.ndarray:
    """``sum_i c[i, a] * Y[i]`` with a fixed pairwise association over ``i``."""
    N = c.shape[0]
    if N <= leaf:
        return np.einsum("ia,i...->a...", c, Y)
    h = N // 2
    return _pairwise_contract(c[:h], Y[:h], leaf) + _pairwise_contract(c[h:], Y[h:], leaf)


@dataclass
class MomentSet:
    """Reduced moments ``A_alpha`` (L x L) and vector moments ``M_alpha`` (n x L).

    Moments are taken in the local variable ``(z - center)/scale``.
    """

    A: np.ndarray
    M: np.ndarray
    K: int
    center: complex = 0j
    scale: float = 1.0

    @property
    def M_stacked(self) -> np.ndarray:
        return np.concatenate(list(self.M), axis=1)


def moment_coefficients(sampling: SamplingSet, orders: int, center=0.0, scale=1.0, mask=None) -> np.ndarray:
    """``c[i, alpha] = w_i ((z_i - center)/scale)**alpha`` for alpha < orders."""
    z, w = sampling.points, sampling.weights
    if mask is not None:
        z, w = z[mask], w[mask]
    center = complex(center)
    zeta = (z - center) / scale
    if not np.iscomplexobj(zeta) or (np.all(np.imag(zeta) == 0) and not np.iscomplexobj(w)):
        zeta = np.real(zeta)
    return w[:, None] * zeta[:, None] ** np.arange(orders)[None, :]


def reduced_moments(table: ProbeTable, sampling: SamplingSet, K: int, center=0.0, scale=1.0) -> MomentSet:
    """``A_a = sum_i w_i z_i^a U^H Y_i`` (a < 2K) and ``M_a = sum_i w_i z_i^a Y_i`` (a < K).

    Points whose solve failed are left out of the sums.
    """
    if table.N != sampling.N:
        raise ValueError("probe table and sampling set differ in length")
    N = int(table.ok.sum())
    if K < 1:
        raise ValueError("K must be >= 1")
    if 2 * K > N:
        raise OrderTooHigh(f"2K = {2 * K} exceeds N = {N}")
    if 2 * K == N:
        warnings.warn("2K == N: the highest moment order is not annihilated", stacklevel=2)
    c = moment_coefficients(sampling, 2 * K, center, scale, table.ok)
    Y = table.Y[table.ok]
    F = np.einsum("nl,inm->ilm", table.U.conj(), Y)
    A = _pairwise_contract(c, F)
    M = _pairwise_contract(c[:, :K], Y)
    return MomentSet(A, M, K, complex(center), float(scale))


def vector_moments(table: ProbeTable, sampling: SamplingSet, K: int, center=0.0, scale=1.0) -> np.ndarray:
    """``[M_0, ..., M_{K-1}]`` only; allows ``K`` up to ``N``."""
    N = int(table.ok.sum())
    if not 1 <= K <= N:
        raise OrderTooHigh(f"K = {K} must lie in [1, N = {N}]")
    c = moment_coefficients(sampling, K, center, scale, table.ok)
    M = _pairwise_contract(c, table.Y[table.ok])
    return np.concatenate(list(M), axis=1)


@dataclass
class HankelPair:
    H: np.ndarray
    H_shift: np.ndarray


def hankel_pair(moments: MomentSet) -> HankelPair:
    """Block Hankel ``H[i, j] = A_{i+j}`` and shifted ``H<[i, j] = A_{i+j+1}``."""
    K, A = moments.K, moments.A
    if A.shape[0] < 2 * K:
        raise ValueError("moments must run through order 2K-1")
    H = np.block([[A[i + j] for j in range(K)] for i in range(K)])
    Hs = np.block([[A[i + j + 1] for j in range(K)] for i in range(K)])
    return HankelPair(H, Hs)
