"""Desk-scale reproduction harness and independent oracle checks.

Every runner returns a :class:`Report` with pass/fail verdicts and writes
plot-ready CSV files when ``out_dir`` is given.  The oracle linearisations
live here, not in the library, so that the production path is never tested
against itself.
"""

from __future__ import annotations

import os
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import numpy.polynomial.polynomial as P
import scipy.linalg as sla

from . import io
from .errors import OracleMismatch
from .problems import (GUN_KAPPA, NepProblem, ScalarFunction, loaded_string, quadratic,
                       synthetic_damping, synthetic_gun)
from .rsrr import rsrr_solve, rsrr_two_stage
from .sampling import Ellipse, Interval, Rectangle, chebyshev_points, ellipse_trapezoid, rectangle_gauss
from .ss import ss_ri

STRING_INTERVAL = Interval(3.0, 10000.0)
STRING_ELLIPSE = Ellipse(5001.5, 4998.5, 4998.5 / 2)
GUN_RECT = Rectangle(1.5 - 0.5j, 6.0 + 1.5j)
DAMPING_RECT = Rectangle(-40 + 100j, 5 + 850j)
FIG4_SEEDS = (1, 2, 3, 4, 5)
GUN_DATA_ENV = "NEPSOLVE_GUN_DATA"


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


@dataclass
class Report:
    name: str
    verdicts: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def add(self, name, passed, detail=""):
        v = Verdict(name, bool(passed), detail)
        self.verdicts.append(v)
        return v

    def __getitem__(self, name) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def write(self, out_dir) -> None:
        if out_dir is None:
            return
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for key, (header, rows) in self.tables.items():
            path = out / f"{self.name}_{key}.csv"
            io.write_csv(path, header, rows)
            self.paths[key] = path
        summary = out / f"{self.name}_summary.txt"
        summary.write_text("\n".join(v.line() for v in self.verdicts) + "\n")
        self.paths["summary"] = summary


def _residual_rows(label, result):
    lam, res = result.eigenvalues[result.inside], result.residuals[result.inside]
    return [[label, i + 1, float(l.real), float(l.imag), float(r)] for i, (l, r) in enumerate(zip(lam, res))]


def _max_res(result) -> float:
    return result.max_residual() if result.n_inside else np.inf


# -- Fig. 2 analogue: SS-RI (Chebyshev) vs SS-CI (ellipse) ---------------

def run_fig2(out_dir=None, n: int = 400, seed: int = 0) -> Report:
    """Loaded string with SS-RI/SS-CI on the (L, K) grid (10,10), (3,40), plus (2,60)."""
    t0 = time.perf_counter()
    rep = Report("fig2")
    p = loaded_string(n)
    cheb = chebyshev_points(STRING_INTERVAL, 200)
    contour = ellipse_trapezoid(STRING_ELLIPSE, 200)
    runs = {}
    rows = []
    for (L, K) in ((10, 10), (3, 40)):
        for label, smp in (("chebyshev", cheb), ("contour", contour)):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                r = ss_ri(p, smp, L, K, seed, region=STRING_INTERVAL)
            runs[label, L, K] = r
            rows += _residual_rows(f"{label}_L{L}_K{K}", r)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        bad = ss_ri(p, cheb, 2, 60, seed, region=STRING_INTERVAL)
    runs["chebyshev", 2, 60] = bad
    rows += _residual_rows("chebyshev_L2_K60", bad)
    # diagnostic only: same rule with a node on the vertex next to the smallest eigenvalue
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        runs["contour_offset0", 10, 10] = ss_ri(p, ellipse_trapezoid(STRING_ELLIPSE, 200, offset=0.0), 10, 10, seed,
                                                region=STRING_INTERVAL)
    rows += _residual_rows("contour_offset0_L10_K10", runs["contour_offset0", 10, 10])
    rep.tables["residuals"] = (["run", "index", "re", "im", "residual"], rows)
    rep.tables["summary"] = (["run", "n_inside", "accepted", "g_max", "max_residual"], [
        [f"{k[0]}_L{k[1]}_K{k[2]}", r.n_inside, int(r.accepted), float(r.gap.g_max), _max_res(r)]
        for k, r in runs.items()
    ])

    rc, ro = _max_res(runs["chebyshev", 10, 10]), _max_res(runs["contour", 10, 10])
    rep.add("ss_ri_chebyshev_accuracy", rc <= 1e-8 and runs["chebyshev", 10, 10].n_inside == 32,
            f"max residual {rc:.2e} (<= 1e-8), {runs['chebyshev', 10, 10].n_inside} inside")
    med = [float(np.median(runs[k, 10, 10].residuals[runs[k, 10, 10].inside])) for k in ("chebyshev", "contour")]
    rep.add("ss_ci_contour_within_decade", ro <= 10 * rc,
            f"contour {ro:.2e} vs chebyshev {rc:.2e}, ratio {ro / rc:.1f} (<= 10); "
            f"medians {med[1]:.1e} vs {med[0]:.1e}; unshifted nodes {_max_res(runs['contour_offset0', 10, 10]):.2e}")
    ri = _max_res(runs["chebyshev", 3, 40])
    rep.add("large_K_deteriorates", ri >= 100 * rc, f"(L=3,K=40) {ri:.2e} vs (L=10,K=10) {rc:.2e}, ratio {ri / rc:.1e}")
    rb = _max_res(bad)
    rep.add("very_large_K_fails", (not bad.accepted) or rb > 1e-2,
            f"(L=2,K=60) accepted={bad.accepted}, g_max {bad.gap.g_max:.2e}, max residual {rb:.2e}")
    rep.runs = runs
    rep.elapsed = time.perf_counter() - t0
    rep.write(out_dir)
    return rep


# -- Fig. 3 analogue: sampling vs moment scheme --------------------------

def run_fig3(out_dir=None, n: int = 400, N: int = 100, seed: int = 0, Ls=(1, 2)) -> Report:
    t0 = time.perf_counter()
    rep = Report("fig3")
    p = loaded_string(n)
    smp = chebyshev_points(STRING_INTERVAL, N)
    runs, rows, sig_rows = {}, [], []
    for L in Ls:
        for scheme in ("sampling", "moment"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                r = rsrr_solve(p, STRING_INTERVAL, N, L, seed, scheme=scheme, K=N, sampling=smp, raw_sigma=True)
            runs[scheme, L] = r
            rows += _residual_rows(f"{scheme}_L{L}", r)
            s = r.subspace.scaled_sigma
            sig_rows += [[f"{scheme}_L{L}", j + 1, float(x)] for j, x in enumerate(s)]
    rep.tables["residuals"] = (["run", "index", "re", "im", "residual"], rows)
    rep.tables["sigma"] = (["run", "index", "sigma_scaled"], sig_rows)

    r1 = runs["sampling", 1]
    rep.add("rsrr_count", r1.n_inside == 32 and r1.accepted,
            f"{r1.n_inside} inside, accepted={r1.accepted}, g_max {r1.gap.g_max:.2e}")
    rep.add("rsrr_accuracy", _max_res(r1) <= 1e-8, f"max residual {_max_res(r1):.2e} (<= 1e-8)")
    rm = runs["moment", 1]
    rep.add("moment_scheme_worse", _max_res(rm) >= 100 * _max_res(r1),
            f"moment {_max_res(rm):.2e} vs sampling {_max_res(r1):.2e}")
    sM = rm.subspace.scaled_sigma[31] if rm.subspace.sigma.size > 31 else 0.0
    sS = r1.subspace.scaled_sigma[31] if r1.subspace.sigma.size > 31 else 0.0
    rep.add("sigma32_M_small", sM <= 1e-11, f"scaled sigma_32 of M {sM:.2e} (<= 1e-11)")
    rep.add("sigma32_S_large", sS >= 1e-10, f"scaled sigma_32 of S {sS:.2e} (>= 1e-10)")
    rep.runs = runs
    rep.elapsed = time.perf_counter() - t0
    rep.write(out_dir)
    return rep


# -- Fig. 4 analogue: N versus L at fixed budget -------------------------

FIG4_PRODUCTS = (16, 32, 64, 96, 128)


def run_fig4(out_dir=None, n: int = 400, Ls=(1, 2, 4, 8), products=FIG4_PRODUCTS, seeds=FIG4_SEEDS,
             slack: float = 3.0) -> Report:
    """Seed-averaged max residual over N*L for each L."""
    t0 = time.perf_counter()
    rep = Report("fig4")
    p = loaded_string(n)
    curves = {}
    rows = []
    for L in Ls:
        curve = []
        for NL in products:
            N = NL // L
            vals = []
            for s in seeds:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    try:
                        r = rsrr_solve(p, STRING_INTERVAL, N, L, s)
                        vals.append(_max_res(r))
                    except Exception:
                        vals.append(np.inf)
            avg = float(np.mean(vals))
            curve.append(avg)
            rows.append([L, N, NL, avg] + [float(v) for v in vals])
        curves[L] = np.array(curve)
    rep.tables["curves"] = (["L", "N", "NL", "mean_max_residual"] + [f"seed{s}" for s in seeds], rows)

    if 64 in products and 1 in Ls and 8 in Ls:
        k = list(products).index(64)
        a, b = curves[1][k], curves[8][k]
        rep.add("N_beats_L_at_64", a <= b, f"(L=1,N=64) {a:.2e} vs (L=8,N=8) {b:.2e}")
    for L, c in curves.items():
        ok = all(c[i + 1] <= slack * c[i] for i in range(len(c) - 1))
        rep.add(f"monotone_L{L}", ok, " -> ".join(f"{x:.1e}" for x in c))
    if 1 in curves:
        plateau = [NL for NL, v in zip(products, curves[1]) if v <= 1e-9]
        rep.add("plateau_L1_before_128", bool(plateau) and plateau[0] < 128,
                f"first N*L with mean residual <= 1e-9: {plateau[0] if plateau else None}")
    rep.curves = curves
    rep.elapsed = time.perf_counter() - t0
    rep.write(out_dir)
    return rep


# -- oracles --------------------------------------------------------------

def companion_eigenvalues(coeffs, scale: float = 1.0) -> np.ndarray:
    """Finite eigenvalues of ``sum_k z^k C_k`` via the block companion pencil.

    The variable is rescaled by ``scale`` and the coefficients normalised,
    which keeps high-degree products of widely spread poles well conditioned.
    """
    d = len(coeffs) - 1
    n = coeffs[0].shape[0]
    C = [np.asarray(c, dtype=complex) * scale**k for k, c in enumerate(coeffs)]
    nrm = max(np.linalg.norm(c) for c in C)
    C = [c / nrm for c in C]
    A = np.zeros((d * n, d * n), complex)
    B = np.eye(d * n, dtype=complex)
    A[:-n, n:] = np.eye((d - 1) * n)
    for k in range(d):
        A[-n:, k * n:(k + 1) * n] = -C[k]
    B[-n:, -n:] = C[d]
    ev = sla.eig(A, B, right=False)
    return ev[np.isfinite(ev)] * scale


def loaded_string_oracle(problem: NepProblem) -> np.ndarray:
    """Eigenvalues of the loaded string from ``(z - 1) T(z)``.

    The product ``(z-1)K + zE - z(z-1)M`` is a quadratic matrix polynomial;
    its ``n - 1`` spurious eigenvalues at the pole ``z = 1`` are removed.
    """
    (_, K), (f, E), (_, M) = problem.terms
    sigma = f.p["sigma"]
    coeffs = [-sigma * K, K + E + sigma * M, -M]
    ev = companion_eigenvalues(coeffs)
    ev = ev[np.argsort(np.abs(ev - sigma))][problem.n - 1:]
    return np.sort(ev.real)


def loaded_string_cubic_oracle(problem: NepProblem) -> np.ndarray:
    """Same spectrum through ``z (z - 1) T(z)``, a cubic; drops the extra roots at 0 and 1."""
    (_, K), (f, E), (_, M) = problem.terms
    s = f.p["sigma"]
    Z = np.zeros_like(K)
    ev = companion_eigenvalues([Z, -s * K, K + E + s * M, -M])
    n = problem.n
    ev = ev[np.argsort(np.minimum(np.abs(ev - s), np.abs(ev)))][2 * n - 1:]
    return np.sort(ev.real)


def damping_oracle(problem: NepProblem, scale: float = 1000.0) -> np.ndarray:
    """Rational damping model times ``prod_j (z + b_j)``: a degree ``2 + J`` polynomial."""
    terms = problem.terms
    M, K_s, K_v = terms[0][1], terms[1][1], terms[2][1]
    G = float(terms[2][0].coef)
    a = np.array([f.p["a"] for f, _ in terms[3:]])
    b = np.array([f.p["b"] for f, _ in terms[3:]])
    n = problem.n
    J = a.size
    coeffs = [np.zeros((n, n)) for _ in range(J + 3)]

    def add(poly, A):
        for k, c in enumerate(poly):
            coeffs[k] = coeffs[k] + c * A

    full = P.polyfromroots(-b)
    add(P.polymul([0, 0, 1], full), M)
    add(full, K_s + G * K_v)
    for j in range(J):
        add(P.polymul([0, G * a[j]], P.polyfromroots(-np.delete(b, j))), K_v)
    ev = companion_eigenvalues(coeffs, scale)
    # roots of the cleared denominator are not eigenvalues
    keep = [not np.any(np.abs(l + b) <= 1e-8 * b) for l in ev]
    return ev[np.array(keep, bool)]


def quadratic_oracle(M, C, K) -> np.ndarray:
    return companion_eigenvalues([K, C, M])


def determinant_roots(problem: NepProblem, region: Rectangle, grid=(120, 60), tol=1e-13, maxit=50) -> np.ndarray:
    """Zeros of ``det T`` in a rectangle.

    Local minima of ``|det T|`` on a grid seed Newton's method with the
    logarithmic derivative ``d/dz log det T = tr(T^{-1} T')``.
    """
    nx, ny = grid
    x = np.linspace(region.lower_left.real, region.upper_right.real, nx)
    y = np.linspace(region.lower_left.imag, region.upper_right.imag, ny)
    logdet = np.empty((ny, nx))
    for i, yi in enumerate(y):
        for j, xj in enumerate(x):
            logdet[i, j] = np.linalg.slogdet(problem.evaluate(xj + 1j * yi))[1]
    seeds = []
    for i in range(ny):
        for j in range(nx):
            nb = logdet[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            if logdet[i, j] <= nb.min():
                seeds.append(x[j] + 1j * y[i])
    roots = []
    for z in seeds:
        for _ in range(maxit):
            step = 1.0 / np.trace(np.linalg.solve(problem.evaluate(z), problem.derivative(z)))
            z = z - step
            if abs(step) <= tol * max(1.0, abs(z)):
                break
        else:
            continue
        if region.contains(z) and not any(abs(z - r) <= 1e-8 * abs(z) for r in roots):
            roots.append(z)
    return np.array(sorted(roots, key=abs), dtype=complex)


def _match(computed, reference) -> float:
    """Worst relative distance from each computed value to the nearest reference value,
    and vice versa (so that both sets must agree)."""
    computed, reference = np.asarray(computed), np.asarray(reference)
    if computed.size == 0 or reference.size == 0:
        return 0.0 if computed.size == reference.size else np.inf
    d1 = max(np.min(np.abs(reference - c)) / abs(c) for c in computed)
    d2 = max(np.min(np.abs(computed - r)) / abs(r) for r in reference)
    return float(max(d1, d2))


def _quadratic_instance(seed=11, n=6):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    K = (Q * np.linspace(1.0, 9.0, n)) @ Q.T
    C = 0.2 * rng.standard_normal((n, n))
    return np.eye(n), C, K


def run_oracles(out_dir=None, strict: bool = False) -> Report:
    """RSRR against four independent references.

    With ``strict`` the first mismatch raises OracleMismatch.
    """
    t0 = time.perf_counter()
    rep = Report("oracles")
    rows = []

    def check(name, computed, reference, tol):
        err = _match(computed, reference)
        rows.extend([[name, "computed", float(np.real(c)), float(np.imag(c))] for c in computed])
        rows.extend([[name, "oracle", float(np.real(c)), float(np.imag(c))] for c in reference])
        ok = err <= tol and len(computed) == len(reference)
        rep.add(name, ok, f"{len(computed)} computed / {len(reference)} reference, worst rel. error {err:.1e} (<= {tol:g})")
        if strict and not ok:
            raise OracleMismatch(f"{name}: worst relative mismatch {err:.2e}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        # (a) loaded string, both sides of the pole at 1
        p = loaded_string(20)
        ref = loaded_string_oracle(p)
        cubic = loaded_string_cubic_oracle(p)
        hi = 1.05 * ref.max()
        lam = []
        for reg in (Interval(0.05, 0.95), Interval(1.05, hi)):
            r = rsrr_solve(p, reg, 40, 1, seed=1)
            lam.extend(r.eigenvalues[r.inside].real)
        check("loaded_string_companion", np.sort(lam), ref, 1e-8)
        check("loaded_string_cubic_vs_quadratic", cubic, ref, 1e-8)

        # (b) quadratic
        M, C, K = _quadratic_instance()
        q = quadratic(M, C, K)
        reg = Ellipse(0.0, 4.0, 4.0)
        ref = quadratic_oracle(M, C, K)
        r = rsrr_solve(q, reg, 64, 1, seed=1)
        check("quadratic_companion", r.eigenvalues[r.inside], ref[np.asarray(reg.contains(ref))], 1e-8)

        # (c) rational damping, Biot parameters
        d = synthetic_damping()
        ref = damping_oracle(d)
        r = rsrr_solve(d, DAMPING_RECT, 32, 1, seed=1)
        check("rational_damping_companion", r.eigenvalues[r.inside], ref[np.asarray(DAMPING_RECT.contains(ref))], 1e-8)

        # (d) gun form
        g = synthetic_gun()
        ref = determinant_roots(g, GUN_RECT)
        r = rsrr_solve(g, GUN_RECT, 32, 1, seed=1)
        check("gun_determinant_scan", r.eigenvalues[r.inside], ref, 1e-6)

    rep.tables["eigenvalues"] = (["check", "source", "re", "im"], rows)
    rep.elapsed = time.perf_counter() - t0
    rep.write(out_dir)
    return rep


# -- two-stage refinement ---------------------------------------------------

def load_gun_data(directory) -> NepProblem:
    d = Path(directory)
    files = [d / f"{name}.mtx" for name in ("K", "M", "W1", "W2")]
    funcs = [ScalarFunction.constant(), ScalarFunction.monomial(2, -1.0),
             ScalarFunction.sqrt_branch(GUN_KAPPA[0]), ScalarFunction.sqrt_branch(GUN_KAPPA[1])]
    return io.load_split_problem(files, funcs, name="gun")


def run_two_stage(out_dir=None, gun_dir: Optional[str] = None) -> Report:
    """Stage 2 must not be worse than stage 1.

    The NLEVP gun check runs only when the matrices are available (argument
    or ``$NEPSOLVE_GUN_DATA``, files K.mtx, M.mtx, W1.mtx, W2.mtx).
    """
    t0 = time.perf_counter()
    rep = Report("two_stage")
    rows = []
    cases = [("synthetic_gun", synthetic_gun(), GUN_RECT, 4), ("synthetic_damping", synthetic_damping(), DAMPING_RECT, 6)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, prob, reg, N in cases:
            r2 = rsrr_two_stage(prob, reg, N, 1, seed=1)
            r1 = r2.previous
            a, b = _max_res(r1), _max_res(r2)
            rows.append([name, N, r2.provenance["N_added"], r1.n_inside, r2.n_inside, a, b])
            rep.add(f"{name}_stage2_not_worse", b <= a, f"stage 1 {a:.2e} ({r1.n_inside} inside) -> stage 2 {b:.2e} ({r2.n_inside} inside)")

        gun_dir = gun_dir or os.environ.get(GUN_DATA_ENV)
        if gun_dir:
            g = load_gun_data(gun_dir)
            reg = Rectangle(200 + 0j, 360 + 50j)
            smp = rectangle_gauss(reg, 10, 5)
            r2 = rsrr_two_stage(g, reg, sampling=smp, L=2, seed=1)
            r1 = r2.previous
            a = r1.max_residual(weighted=True) if r1.n_inside else np.inf
            b = r2.max_residual(weighted=True) if r2.n_inside else np.inf
            rows.append(["nlevp_gun", smp.N, r2.provenance["N_added"], r1.n_inside, r2.n_inside, a, b])
            rep.add("nlevp_gun_25_eigenvalues", r2.n_inside == 25 and b <= a,
                    f"{r2.n_inside} inside (25), weighted residual {a:.2e} -> {b:.2e}")
    rep.tables["stages"] = (["case", "N_stage1", "N_added", "inside_stage1", "inside_stage2", "max_res_stage1",
                             "max_res_stage2"], rows)
    rep.elapsed = time.perf_counter() - t0
    rep.write(out_dir)
    return rep


RUNNERS = {"fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4, "oracles": run_oracles, "two-stage": run_two_stage}
