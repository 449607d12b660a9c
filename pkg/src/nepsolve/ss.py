"""Hankel-pencil eigensolvers: SS-RI / SS-CI and the full-resolvent SS-FULL.

The moments of the probed resolvent are assembled into a block Hankel
pencil ``(H<, H)``.  A truncated SVD of ``H`` gives the eigenvalue count via
the largest successive singular-value gap, and the eigenpairs follow from a
small dense eigenproblem.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from . import kernels
from .errors import GapNotFound, ZeroVector
from .probing import ProbeTable, hankel_pair, make_probe, reduced_moments
from .problems import NepProblem
from .sampling import SamplingSet

DEFAULT_TOL_GAP = 1e3
FALLBACK_REL_TOL = 1e-12
SS_FULL_CAP = 2000
_RATIO_CAP = 1e300


@dataclass(frozen=True)
class GapReport:
    sigma: np.ndarray
    ratios: np.ndarray
    g_max: float
    count: int
    accepted: bool
    tol_gap: float = DEFAULT_TOL_GAP

    def to_dict(self) -> dict:
        return {"g_max": self.g_max, "count": self.count, "accepted": self.accepted, "tol_gap": self.tol_gap}


def detect_count(sigma, tol_gap: float = DEFAULT_TOL_GAP) -> GapReport:
    """Locate the largest ratio ``sigma_j / sigma_{j+1}``.

    The count is the (1-based) index of that ratio, first index on ties.
    A zero denominator gives an infinite ratio, capped at 1e300 in the report.
    """
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("need at least two singular values")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = s[:-1] / s[1:]
    r = np.where(np.isnan(r), 1.0, r)
    r = np.minimum(r, _RATIO_CAP)
    j = int(np.argmax(r))
    g = float(r[j])
    return GapReport(s, r, g, j + 1, g >= tol_gap, tol_gap)


def residual(problem: NepProblem, lam, v) -> float:
    """``||T(lam) v||_2 / ||v||_2``."""
    v = np.asarray(v)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ZeroVector("eigenvector is zero")
    return float(np.linalg.norm(problem.matvec(lam, v)) / nv)


def weighted_residual(problem: NepProblem, lam, v) -> float:
    """Residual divided by ``sum_j |f_j(lam)| * ||A_j||_1`` (split form only)."""
    scale = float(np.sum([abs(f(lam)) for f, _ in problem.terms] * problem.term_norms()))
    return residual(problem, lam, v) / scale


@dataclass
class EigResult:
    """Computed eigenpairs, sorted by ascending ``|lambda|``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    inside: np.ndarray
    gap: Optional[GapReport]
    provenance: dict = field(default_factory=dict)
    weighted_residuals: Optional[np.ndarray] = None
    subspace: Any = None
    table: Optional[ProbeTable] = None
    previous: Optional["EigResult"] = None
    timings: dict = field(default_factory=dict)

    def __len__(self):
        return self.eigenvalues.size

    @property
    def accepted(self) -> bool:
        return bool(self.gap is not None and self.gap.accepted)

    @property
    def n_inside(self) -> int:
        return int(np.count_nonzero(self.inside))

    def max_residual(self, inside_only: bool = True, weighted: bool = False) -> float:
        r = self.weighted_residuals if weighted else self.residuals
        if r is None:
            raise ValueError("no weighted residuals available")
        r = r[self.inside] if inside_only else r
        return float(r.max()) if r.size else np.nan

    def inside_only(self) -> "EigResult":
        m = self.inside
        return replace(
            self, eigenvalues=self.eigenvalues[m], eigenvectors=self.eigenvectors[:, m],
            residuals=self.residuals[m], inside=self.inside[m],
            weighted_residuals=None if self.weighted_residuals is None else self.weighted_residuals[m],
        )


def finalize(problem: NepProblem, lam, V, gap, region=None, provenance=None, **extra) -> EigResult:
    """Normalise eigenvectors, compute residuals and region flags, sort by |lambda|."""
    lam = np.asarray(lam, dtype=complex)
    V = np.asarray(V)
    if lam.size:
        norms = np.linalg.norm(V, axis=0)
        norms[norms == 0] = 1.0
        V = V / norms
    order = np.argsort(np.abs(lam), kind="stable")
    lam, V = lam[order], V[:, order]
    res = np.array([residual(problem, l, V[:, k]) for k, l in enumerate(lam)])
    wres = None
    if problem.is_split:
        wres = np.array([weighted_residual(problem, l, V[:, k]) for k, l in enumerate(lam)])
    inside = np.asarray(region.contains(lam), bool) if region is not None else np.ones(lam.size, bool)
    return EigResult(lam, V, res, inside, gap, dict(provenance or {}), wres, **extra)


def extract_pairs(moments, tol_gap=DEFAULT_TOL_GAP):
    """Eigenvalues and eigenvectors from the Hankel pencil of ``moments``.

    Returns ``(lam, V, gap)`` with ``lam`` mapped back from the local variable.
    """
    hp = hankel_pair(moments)
    U0, s, Vh = kernels.full_svd(hp.H)
    if s[0] == 0:
        raise kernels.EmptySpectrum("all moments vanish")
    if s.size >= 2:
        gap = detect_count(s, tol_gap)
    else:
        gap = GapReport(s, np.empty(0), np.inf, 1, True, tol_gap)
    if gap.accepted:
        k = gap.count
    else:
        k = max(1, int(np.count_nonzero(s > FALLBACK_REL_TOL * s[0])))
        gap = replace(gap, count=k)
        warnings.warn(f"largest singular-value gap {gap.g_max:.3g} below {tol_gap:g}", GapNotFound, stacklevel=3)
    V0, s0, W0 = U0[:, :k], s[:k], Vh[:k].conj().T
    A = (V0.conj().T @ hp.H_shift @ W0) / s0
    lam_local, B, _ = kernels.dense_eig(A)
    V = moments.M_stacked @ ((W0 / s0) @ B)
    lam = moments.center + moments.scale * lam_local
    return lam, V, gap


def ss_solve(problem: NepProblem, table: ProbeTable, sampling: SamplingSet, K: int,
             tol_gap: float = DEFAULT_TOL_GAP, region=None) -> EigResult:
    """SS-RI (barycentric points) or SS-CI (contour quadrature) from a probe table.

    Results whose gap test failed are still returned, with ``accepted`` False.
    """
    t0 = time.perf_counter()
    if K * table.L < 1:
        raise ValueError("K * L must be positive")
    moments = reduced_moments(table, sampling, K, sampling.center, sampling.scale)
    lam, V, gap = extract_pairs(moments, tol_gap)
    region = region if region is not None else sampling.region
    prov = {
        "algorithm": "ss-ci" if sampling.mode == "contour" else "ss-ri",
        "N": sampling.N, "L": table.L, "K": K, "seed": table.seed, "tol_gap": tol_gap,
    }
    out = finalize(problem, lam, V, gap, region, prov, table=table)
    out.timings["extract"] = time.perf_counter() - t0
    return out


def ss_ri(problem: NepProblem, sampling: SamplingSet, L: int, K: int, seed=0,
          tol_gap: float = DEFAULT_TOL_GAP, region=None, workers=None) -> EigResult:
    """Probe and extract in one call."""
    t0 = time.perf_counter()
    table = make_probe(problem, sampling, L, seed, workers=workers)
    t1 = time.perf_counter()
    out = ss_solve(problem, table, sampling, K, tol_gap, region)
    out.timings["probe"] = t1 - t0
    return out


def ss_full(problem: NepProblem, sampling: SamplingSet, K: int = 2, tol_gap: float = DEFAULT_TOL_GAP,
            region=None, cap: int = SS_FULL_CAP, workers=None) -> EigResult:
    """SS-RI with the identity as probing matrix (the full resolvent).

    Meant for small problems, in particular projected ones.
    """
    if problem.n > cap:
        raise ValueError(f"SS-FULL on dimension {problem.n} exceeds cap {cap}")
    table = make_probe(problem, sampling, U=np.eye(problem.n), seed=None, workers=workers)
    out = ss_solve(problem, table, sampling, K, tol_gap, region)
    out.provenance["algorithm"] = "ss-full"
    return out
