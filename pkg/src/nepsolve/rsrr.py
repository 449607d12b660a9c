"""Resolvent-sampling Rayleigh-Ritz (RSRR) solver.

Pipeline: probe ``T(z_i)^{-1} U`` at the sampling points, orthonormalise the
collected blocks (or, for comparison, their moments) by truncated SVD,
project ``T`` onto that basis, solve the small projected problem with
SS-FULL and lift the eigenvectors back.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import InterpolationInaccurate, NearSingularWarning, RankCollapse, Stage1Empty
from .probing import ProbeTable, extend_probe, make_probe, vector_moments
from .problems import NepProblem
from .sampling import (Ellipse, Interval, Rectangle, SamplingSet, boundary_sampling, chebyshev_points,
                       default_sampling, interpolation_nodes)
from .ss import DEFAULT_TOL_GAP, finalize, ss_full

DEFAULT_DELTA = 1e-14
DEFAULT_N_Q = 500
DEFAULT_K_Q = 2
DEFAULT_DEGREE = 40
INTERP_TOL = 1e-8
DEDUP_RTOL = 1e-8
GUARD_RING = 1e-10


@dataclass
class SubspaceBasis:
    """Orthonormal search-space basis from a truncated SVD.

    ``sigma`` are all singular values of the (column-normalised) matrix;
    ``sigma_raw`` those of the matrix before normalisation, when computed.
    """

    Q: np.ndarray
    sigma: np.ndarray
    delta: float
    scheme: str
    normalized: bool
    sigma_raw: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.Q.shape[1]

    @property
    def scaled_sigma(self) -> np.ndarray:
        return self.sigma / self.sigma[0]

    @property
    def sigma_ratio(self) -> float:
        """``sigma_1 / sigma_last``; large values (>1e14) indicate N was sufficient."""
        return float(self.sigma[0] / self.sigma[-1]) if self.sigma[-1] > 0 else np.inf


def _orthonormalize(X, delta, scheme, normalize, raw_sigma=True) -> SubspaceBasis:
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if X.size == 0:
        raise RankCollapse("empty search space")
    Xn = X
    if normalize:
        norms = np.linalg.norm(X, axis=0)
        norms[norms == 0] = 1.0
        Xn = X / norms
    try:
        svd = kernels.truncated_svd(Xn, delta)
    except kernels.EmptySpectrum as exc:
        raise RankCollapse("search space is zero") from exc
    if svd.rank == 0:
        raise RankCollapse("no singular value above the threshold")
    sig_raw = kernels.full_svd(X)[1] if (normalize and raw_sigma) else None
    return SubspaceBasis(svd.U, svd.sigma, delta, scheme, normalize, sig_raw)


def build_subspace_sampling(table: ProbeTable, delta: float = DEFAULT_DELTA, normalize: bool = True,
                            raw_sigma: bool = False) -> SubspaceBasis:
    """Basis of ``S = [T(z_0)^{-1}U, ..., T(z_{N-1})^{-1}U]``.

    Columns are scaled to unit norm before the SVD so that points close to
    eigenvalues do not dominate.
    """
    return _orthonormalize(table.sampling_matrix(normalize=False), delta, "sampling", normalize, raw_sigma)


def build_subspace_moments(table: ProbeTable, sampling: SamplingSet, K: int, delta: float = DEFAULT_DELTA,
                           normalize: bool = True, raw_sigma: bool = False) -> SubspaceBasis:
    """Basis of the moment matrix ``[M_0, ..., M_{K-1}]`` (comparison scheme)."""
    M = vector_moments(table, sampling, K, sampling.center, sampling.scale)
    return _orthonormalize(M, delta, "moment", normalize, raw_sigma)


class ChebyshevMatrixInterpolant:
    """Degree-``d`` Chebyshev expansion of a matrix function on ``[lo, hi] + i*shift``.

    Evaluation at complex ``z`` uses the analytic continuation of the
    polynomial.  Roundoff in the coefficients grows like ``rho**d`` off the
    segment, so the segment should run through the middle of the region.
    """

    def __init__(self, func, lo: float, hi: float, degree: int, shift: float = 0.0):
        self.lo, self.hi, self.degree = float(lo), float(hi), int(degree)
        self.shift = float(shift)
        m = degree + 1
        theta = (2 * np.arange(m) + 1) * np.pi / (2 * m)
        x = np.cos(theta)
        samples = np.array([func(self.c + self.r * xj) for xj in x])
        Tk = np.cos(np.outer(np.arange(m), theta))
        coef = (2.0 / m) * np.einsum("kj,j...->k...", Tk, samples)
        coef[0] *= 0.5
        self.coef = coef

    @property
    def c(self):
        mid = 0.5 * (self.lo + self.hi)
        return complex(mid, self.shift) if self.shift else mid

    @property
    def r(self):
        return 0.5 * (self.hi - self.lo)

    def __call__(self, z):
        x = (z - self.c) / self.r
        return np.tensordot(_cheb_basis(x, self.degree), self.coef, axes=(0, 0))


def _cheb_basis(x, degree):
    out = np.empty(degree + 1, dtype=np.result_type(x, float))
    out[0] = 1.0
    if degree:
        out[1] = x
    for k in range(2, degree + 1):
        out[k] = 2 * x * out[k - 1] - out[k - 2]
    return out


def _midline(region) -> float:
    """Imaginary offset of the interpolation segment."""
    if isinstance(region, Rectangle):
        return 0.5 * (region.lower_left.imag + region.upper_right.imag)
    if isinstance(region, Ellipse):
        return float(region.center.imag)
    return 0.0


def _validation_points(region, count=5):
    lo, hi = region.bounding_interval
    frac = np.array([-0.83, -0.41, 0.07, 0.52, 0.91])[:count]
    x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * frac
    if isinstance(region, Interval):
        return x.astype(complex)
    if isinstance(region, Rectangle):
        y0, y1 = region.lower_left.imag, region.upper_right.imag
        y = y0 + (y1 - y0) * np.array([0.5, 0.2, 0.8, 0.35, 0.65])[:count]
        return x + 1j * y
    if isinstance(region, Ellipse):
        c = region.center
        half_width = region.b * np.sqrt(np.clip(1 - ((x - c.real) / region.a) ** 2, 0, 1))
        return x + 1j * (c.imag + 0.5 * half_width * np.array([1, -1, 1, -1, 1])[:count])
    raise TypeError(f"unsupported region {region!r}")


@dataclass
class ProjectedNep:
    """Reduced problem ``Q^H T(z) Q`` of dimension ``k``."""

    problem: NepProblem
    Q: np.ndarray
    degree: Optional[int] = None
    validation_error: Optional[float] = None

    @property
    def k(self) -> int:
        return self.Q.shape[1]


def project(problem: NepProblem, Q, interpolation_degree: Optional[int] = None, region=None,
            tol: float = INTERP_TOL) -> ProjectedNep:
    """Project ``T`` onto ``span(Q)``.

    Split forms project each coefficient matrix once.  Black boxes are
    sampled at ``degree + 1`` Chebyshev points of the region's real extent,
    interpolated, and checked at five held-out points.
    """
    Q = np.asarray(Q)
    QH = Q.conj().T
    k = Q.shape[1]
    if problem.is_split:
        cache = {}
        terms = []
        for f, A in problem.terms:
            key = id(A)
            if key not in cache:
                AQ = A @ Q
                cache[key] = QH @ (np.asarray(AQ) if not sp.issparse(AQ) else AQ.toarray())
            terms.append((f, cache[key]))
        real = problem.real and not np.iscomplexobj(Q)
        return ProjectedNep(NepProblem(k, terms, real=real, name=f"{problem.name}|Q"), Q)

    if region is None:
        raise ValueError("black-box projection needs a region for interpolation")
    degree = DEFAULT_DEGREE if interpolation_degree is None else int(interpolation_degree)
    lo, hi = region.bounding_interval
    shift = _midline(region)
    interp = ChebyshevMatrixInterpolant(lambda z: QH @ problem.evaluate(z) @ Q, lo, hi, degree, shift)
    err = 0.0
    for z in _validation_points(region):
        exact = QH @ problem.evaluate(z) @ Q
        err = max(err, float(np.linalg.norm(interp(z) - exact) / max(np.linalg.norm(exact), 1e-300)))
    if err > tol:
        raise InterpolationInaccurate(f"interpolation error {err:.2e} exceeds {tol:.0e}; raise the degree")
    reduced = NepProblem(k, evaluate=interp, real=problem.real and not np.iscomplexobj(Q) and shift == 0.0,
                         name=f"{problem.name}|Q", singular_points=problem.singular_points)
    return ProjectedNep(reduced, Q, degree, err)


def _inner_sampling(region, N_Q, contour_Q):
    if isinstance(contour_Q, SamplingSet):
        return contour_Q
    if contour_Q in (None, "boundary"):
        return boundary_sampling(region, N_Q)
    if contour_Q == "chebyshev":
        if not isinstance(region, Interval):
            raise ValueError("chebyshev inner points need an interval region")
        return chebyshev_points(region, N_Q)
    if isinstance(contour_Q, (Interval, Ellipse, Rectangle)):
        return default_sampling(contour_Q, N_Q)
    raise ValueError(f"unknown inner contour {contour_Q!r}")


def rsrr_from_table(problem: NepProblem, region, sampling: SamplingSet, table: ProbeTable,
                    scheme: str = "sampling", K: Optional[int] = None, delta: float = DEFAULT_DELTA,
                    normalize: bool = True, N_Q: int = DEFAULT_N_Q, K_Q: int = DEFAULT_K_Q, contour_Q=None,
                    tol_gap: float = DEFAULT_TOL_GAP, interpolation_degree: Optional[int] = None,
                    raw_sigma: bool = False, workers=None):
    """Steps after probing: basis, projection, SS-FULL, lifting."""
    t0 = time.perf_counter()
    if scheme == "sampling":
        basis = build_subspace_sampling(table, delta, normalize, raw_sigma)
    elif scheme == "moment":
        basis = build_subspace_moments(table, sampling, K or sampling.N, delta, normalize, raw_sigma)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    t1 = time.perf_counter()
    proj = project(problem, basis.Q, interpolation_degree, region)
    inner = _inner_sampling(region, N_Q, contour_Q)
    t2 = time.perf_counter()
    reduced = ss_full(proj.problem, inner, K_Q, tol_gap, region, workers=workers)
    t3 = time.perf_counter()
    V = basis.Q @ reduced.eigenvectors
    prov = {
        "algorithm": "rsrr" if scheme == "sampling" else "rsrr-moment",
        "N": sampling.N, "L": table.L, "K": K if scheme == "moment" else None, "seed": table.seed,
        "delta": delta, "normalize": normalize, "k": basis.k, "N_Q": inner.N, "K_Q": K_Q,
        "tol_gap": tol_gap, "interpolation_degree": proj.degree,
    }
    out = finalize(problem, reduced.eigenvalues, V, reduced.gap, region, prov, subspace=basis, table=table)
    out.timings.update(subspace=t1 - t0, inner_solve=t3 - t2, total_post_probe=time.perf_counter() - t0)
    return out


def rsrr_solve(problem: NepProblem, region, N: Optional[int] = None, L: int = 1, seed=0,
               scheme: str = "sampling", K: Optional[int] = None, delta: float = DEFAULT_DELTA,
               normalize: bool = True, N_Q: int = DEFAULT_N_Q, K_Q: int = DEFAULT_K_Q, contour_Q=None,
               tol_gap: float = DEFAULT_TOL_GAP, interpolation_degree: Optional[int] = None,
               sampling: Optional[SamplingSet] = None, raw_sigma: bool = False, workers=None):
    """Compute the eigenpairs inside ``region``.

    Parameters
    ----------
    region : Interval, Ellipse or Rectangle
    N, L : number of sampling points and probing vectors.  ``N`` may be
        omitted when ``sampling`` is given.
    scheme : ``"sampling"`` (default) or ``"moment"`` (uses ``K`` moments,
        default ``K = N``).
    N_Q, K_Q, contour_Q : parameters of the inner SS-FULL solve.  The default
        contour is the region boundary (a flat ellipse for intervals).
    """
    problem.check_region(region)
    if sampling is None:
        if N is None:
            raise ValueError("give N or an explicit sampling set")
        sampling = default_sampling(region, N)
    if N is not None and sampling.N != N:
        raise ValueError("N disagrees with the sampling set")
    t0 = time.perf_counter()
    table = make_probe(problem, sampling, L, seed, workers=workers)
    t_probe = time.perf_counter() - t0
    out = rsrr_from_table(problem, region, sampling, table, scheme, K, delta, normalize, N_Q, K_Q,
                          contour_Q, tol_gap, interpolation_degree, raw_sigma, workers)
    out.timings["probe"] = t_probe
    return out


def _new_points(result, old_points, region):
    """Distinct inside eigenvalue estimates away from existing sampling points."""
    cands = result.eigenvalues[result.inside]
    kept = []
    for lam in cands:
        if any(abs(lam - mu) <= DEDUP_RTOL * max(abs(lam), abs(mu)) for mu in kept):
            continue
        kept.append(lam)
    ring = GUARD_RING * region.diameter
    old = np.asarray(old_points, dtype=complex)
    return np.array([lam for lam in kept if np.min(np.abs(old - lam)) > ring], dtype=complex)


def rsrr_two_stage(problem: NepProblem, region, N: Optional[int] = None, L: int = 1, seed=0,
                   sampling: Optional[SamplingSet] = None, **kwargs):
    """Two-stage RSRR: coarse solve, then re-solve with the estimates added as points.

    Probe solves of the first stage are reused.  The stage-1 result is kept
    in ``result.previous``.
    """
    stage1 = rsrr_solve(problem, region, N, L, seed, sampling=sampling, **kwargs)
    if stage1.n_inside == 0:
        raise Stage1Empty("stage 1 found no eigenvalues inside the region")
    sampling1 = sampling if sampling is not None else default_sampling(region, N)
    new = _new_points(stage1, stage1.table.points, region)
    with warnings.catch_warnings():
        # the new points are eigenvalue estimates, so near-singular solves are intended
        warnings.simplefilter("ignore", NearSingularWarning)
        table2 = extend_probe(stage1.table, problem, new, workers=kwargs.get("workers"))
    pts = table2.points
    if problem.real and np.all(np.imag(pts) == 0):
        pts = np.real(pts)
    try:
        sampling2 = interpolation_nodes(pts, region=region)
    except Exception:
        # weights are not used by the sampling scheme; keep unit weights
        sampling2 = SamplingSet(pts, np.ones(pts.size), "barycentric", region.capacity, region.center,
                                region.scale, 0.0, region)
    kw = {k: v for k, v in kwargs.items() if k != "sampling"}
    stage2 = rsrr_from_table(problem, region, sampling2, table2, **{
        k: v for k, v in kw.items()
        if k in ("scheme", "K", "delta", "normalize", "N_Q", "K_Q", "contour_Q", "tol_gap",
                 "interpolation_degree", "raw_sigma", "workers")
    })
    stage2.provenance.update(algorithm="rsrr-two-stage", N_stage1=sampling1.N, N_added=int(new.size))
    stage2.previous = stage1
    return stage2
