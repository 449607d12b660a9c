"""Nonlinear eigenvalue problems ``T(z) v = 0`` and built-in benchmark families.

A problem is either in *split form*, ``T(z) = sum_j f_j(z) A_j`` with every
``f_j`` drawn from a small closed family of scalar functions, or a *black
box* given by an evaluation callback (optionally with its own solver).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import DimensionMismatch, SingularMatrix, SingularPoint, UnknownFunctionFamily
from .sampling import Ellipse, Interval, Rectangle

FAMILIES = ("constant", "monomial", "rational_string", "rational_damping", "sqrt_branch")


def _real_if_possible(c):
    c = complex(c)
    return c.real if c.imag == 0 else c


@dataclass(frozen=True)
class ScalarFunction:
    """One scalar coefficient function of a split-form problem.

    ========================  ==========================  ===========
    family                    value                       parameters
    ========================  ==========================  ===========
    ``constant``              ``coef``
    ``monomial``              ``coef * z**p``             ``p``
    ``rational_string``       ``coef * z / (z - sigma)``  ``sigma``
    ``rational_damping``      ``coef * a z / (z + b)``    ``a``, ``b``
    ``sqrt_branch``           ``coef * i sqrt(z^2-k^2)``  ``kappa``
    ========================  ==========================  ===========

    The square root is the principal branch, so ``sqrt_branch`` has cuts on
    ``[-kappa, kappa]`` and on the imaginary axis.
    """

    family: str
    params: tuple = ()
    coef: complex = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnknownFunctionFamily(self.family)
        params = dict(self.params)
        required = {
            "constant": (), "monomial": ("p",), "rational_string": ("sigma",),
            "rational_damping": ("a", "b"), "sqrt_branch": ("kappa",),
        }[self.family]
        for key in required:
            if key not in params:
                raise ValueError(f"{self.family} needs parameter {key!r}")
            if not np.isfinite(params[key]):
                raise ValueError(f"parameter {key} must be finite")
        if self.family == "monomial" and (int(params["p"]) != params["p"] or params["p"] < 0):
            raise ValueError("monomial power must be a nonnegative integer")
        if self.family == "sqrt_branch" and params["kappa"] < 0:
            raise ValueError("kappa must be >= 0")
        object.__setattr__(self, "params", tuple(sorted(params.items())))
        object.__setattr__(self, "coef", _real_if_possible(self.coef))

    @classmethod
    def constant(cls, coef=1.0):
        return cls("constant", (), coef)

    @classmethod
    def monomial(cls, p, coef=1.0):
        return cls("monomial", (("p", int(p)),), coef)

    @classmethod
    def rational_string(cls, sigma, coef=1.0):
        return cls("rational_string", (("sigma", float(sigma)),), coef)

    @classmethod
    def rational_damping(cls, a, b, coef=1.0):
        return cls("rational_damping", (("a", float(a)), ("b", float(b))), coef)

    @classmethod
    def sqrt_branch(cls, kappa, coef=1.0):
        return cls("sqrt_branch", (("kappa", float(kappa)),), coef)

    @property
    def p(self):
        return dict(self.params)

    def __call__(self, z):
        p, c, fam = self.p, self.coef, self.family
        if fam == "constant":
            return c
        if fam == "monomial":
            return c * z ** p["p"]
        if fam == "rational_string":
            return c * z / (z - p["sigma"])
        if fam == "rational_damping":
            return c * p["a"] * z / (z + p["b"])
        return c * 1j * np.sqrt(complex(z) ** 2 - p["kappa"] ** 2)

    def derivative(self, z):
        p, c, fam = self.p, self.coef, self.family
        if fam == "constant":
            return 0.0 * c
        if fam == "monomial":
            k = p["p"]
            return c * k * z ** (k - 1) if k else 0.0 * c
        if fam == "rational_string":
            s = p["sigma"]
            return -c * s / (z - s) ** 2
        if fam == "rational_damping":
            return c * p["a"] * p["b"] / (z + p["b"]) ** 2
        z = complex(z)
        return c * 1j * z / np.sqrt(z**2 - p["kappa"] ** 2)

    @property
    def is_real(self) -> bool:
        """True when ``f(conj z) == conj f(z)``."""
        return self.family != "sqrt_branch" and isinstance(self.coef, float)

    @property
    def singular_points(self) -> tuple:
        p = self.p
        if self.family == "rational_string":
            return (p["sigma"],)
        if self.family == "rational_damping":
            return (-p["b"],)
        if self.family == "sqrt_branch":
            return (p["kappa"], -p["kappa"])
        return ()

    def conflicts_with(self, region) -> bool:
        """Whether a pole, branch point or branch cut touches the closed region."""
        if any(bool(region.contains(s, tol=0.0)) for s in self.singular_points):
            return True
        if self.family != "sqrt_branch":
            return False
        kappa = self.p["kappa"]
        if isinstance(region, Interval):
            lo, hi, im_lo, im_hi = region.a, region.b, 0.0, 0.0
        elif isinstance(region, Ellipse):
            c = region.center
            lo, hi, im_lo, im_hi = c.real - region.a, c.real + region.a, c.imag - region.b, c.imag + region.b
        elif isinstance(region, Rectangle):
            lo, hi = region.lower_left.real, region.upper_right.real
            im_lo, im_hi = region.lower_left.imag, region.upper_right.imag
        else:
            return False
        # bounding-box test (exact for intervals and rectangles)
        touches_real_cut = im_lo <= 0.0 <= im_hi and lo <= kappa and hi >= -kappa
        touches_imag_axis = lo <= 0.0 <= hi
        return touches_real_cut or touches_imag_axis

    def to_dict(self) -> dict:
        c = complex(self.coef)
        return {"family": self.family, **dict(self.params), "coef": c.real if c.imag == 0 else [c.real, c.imag]}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalarFunction":
        d = dict(d)
        family = d.pop("family", None)
        if family not in FAMILIES:
            raise UnknownFunctionFamily(str(family))
        coef = d.pop("coef", 1.0)
        if isinstance(coef, (list, tuple)):
            coef = complex(float(coef[0]), float(coef[1]))
        elif isinstance(coef, str):
            coef = complex(coef.replace(" ", ""))
        params = tuple((k, int(v) if k == "p" else float(v)) for k, v in d.items())
        return cls(family, params, coef)


def _one_norm(A) -> float:
    if sp.issparse(A):
        return float(abs(A).sum(axis=0).max())
    return float(np.abs(A).sum(axis=0).max())


class NepProblem:
    """Matrix-valued function ``T(z)`` of dimension ``n``.

    Parameters
    ----------
    n : int
        Dimension.
    terms : sequence of (ScalarFunction, matrix), optional
        Split form.  Matrices may be dense arrays or scipy sparse matrices.
    evaluate : callable, optional
        Black-box ``z -> T(z)`` (dense ``n x n``).  Required without ``terms``.
    solve : callable, optional
        ``(z, B) -> T(z)^{-1} B``.  Defaults to a dense LU (or sparse LU for
        sparse split forms).
    real : bool, optional
        ``T(conj z) == conj T(z)``.  Inferred for split forms.
    """

    def __init__(self, n, terms=None, evaluate=None, solve=None, real=None, name="nep",
                 singular_points=()):
        self.n = int(n)
        self.name = name
        self._solve_cb = solve
        self._evaluate_cb = evaluate
        if terms is None and evaluate is None:
            raise ValueError("need split terms or an evaluate callback")
        if terms is not None:
            checked = []
            for f, A in terms:
                if not isinstance(f, ScalarFunction):
                    raise TypeError("split terms need ScalarFunction coefficients")
                if not sp.issparse(A):
                    A = kernels.as_dense(A, "term matrix")
                if A.shape != (self.n, self.n):
                    raise DimensionMismatch(f"term matrix has shape {A.shape}, expected {(self.n, self.n)}")
                checked.append((f, A))
            self.terms = tuple(checked)
        else:
            self.terms = None
        if real is None:
            real = self.terms is not None and all(
                f.is_real and not np.iscomplexobj(A.data if sp.issparse(A) else A) for f, A in self.terms
            )
        self.real = bool(real)
        pts = list(singular_points)
        if self.terms is not None:
            for f, _ in self.terms:
                pts.extend(f.singular_points)
        self.singular_points = tuple(sorted(set(pts), key=lambda s: (np.real(s), np.imag(s))))
        self._norms = None

    def __repr__(self):
        form = f"{len(self.terms)} split terms" if self.is_split else "black box"
        return f"NepProblem({self.name!r}, n={self.n}, {form}, real={self.real})"

    @property
    def is_split(self) -> bool:
        return self.terms is not None

    @property
    def is_sparse(self) -> bool:
        return self.is_split and any(sp.issparse(A) for _, A in self.terms)

    def _point(self, z):
        z = complex(z)
        for s in self.singular_points:
            if abs(z - s) <= 1e-15 * max(1.0, abs(s)):
                raise SingularPoint(f"z = {z} is a singular point of T")
        if self.real and z.imag == 0:
            return z.real
        return z

    def assemble(self, z):
        """``T(z)`` in its native storage (sparse for sparse split forms)."""
        z = self._point(z)
        if not self.is_split:
            return kernels.as_dense(self._evaluate_cb(z), "T(z)")
        acc = None
        for f, A in self.terms:
            term = f(z) * A
            acc = term if acc is None else acc + term
        return acc

    def evaluate(self, z) -> np.ndarray:
        T = self.assemble(z)
        return T.toarray() if sp.issparse(T) else np.asarray(T)

    def matvec(self, z, v) -> np.ndarray:
        """``T(z) @ v`` without assembling ``T`` for split forms."""
        z = self._point(z)
        if not self.is_split:
            return self.evaluate(z) @ v
        out = None
        for f, A in self.terms:
            term = f(z) * (A @ v)
            out = term if out is None else out + term
        return out

    def solve(self, z, B, return_info=False):
        """``T(z)^{-1} B``; ``info`` is a kernels.SolveInfo or None."""
        z = self._point(z)
        if self._solve_cb is not None:
            X = np.asarray(self._solve_cb(z, B))
            if not np.all(np.isfinite(X)):
                raise SingularMatrix(f"solve callback returned non-finite values at z = {z}")
            return (X, None) if return_info else X
        T = self.assemble(z)
        if sp.issparse(T):
            try:
                lu = spla.splu(sp.csc_matrix(T))
            except RuntimeError as exc:
                raise SingularMatrix(str(exc)) from exc
            rhs = np.asarray(B)
            if np.iscomplexobj(rhs) and not np.iscomplexobj(T.data):
                X = lu.solve(rhs.real) + 1j * lu.solve(rhs.imag)
            else:
                X = lu.solve(rhs.astype(np.result_type(T.dtype, rhs.dtype)))
            diag = np.abs(lu.U.diagonal())
            info = kernels.SolveInfo(float(diag.min()), float(diag.max()))
            if not np.all(np.isfinite(X)):
                raise SingularMatrix(f"sparse LU failed at z = {z}")
            return (X, info) if return_info else X
        return kernels.solve_multi(T, B, return_info=return_info)

    def derivative(self, z) -> np.ndarray:
        """``T'(z)``; analytic for split forms, central differences otherwise."""
        z = self._point(z)
        if self.is_split:
            acc = np.zeros((self.n, self.n), dtype=complex)
            for f, A in self.terms:
                acc = acc + f.derivative(z) * (A.toarray() if sp.issparse(A) else A)
            return acc
        h = 1e-6 * max(1.0, abs(z))
        return (self.evaluate(z + h) - self.evaluate(z - h)) / (2 * h)

    def term_norms(self) -> np.ndarray:
        if not self.is_split:
            raise ValueError("term norms need a split-form problem")
        if self._norms is None:
            self._norms = np.array([_one_norm(A) for _, A in self.terms])
        return self._norms

    def check_region(self, region) -> None:
        """Raise SingularPoint if a pole, branch point or cut touches ``region``."""
        if self.is_split:
            for f, _ in self.terms:
                if f.conflicts_with(region):
                    raise SingularPoint(f"{f.family} term {dict(f.params)} is singular inside {region}")
        for s in self.singular_points:
            if bool(region.contains(s, tol=0.0)):
                raise SingularPoint(f"singular point {s} lies in {region}")


def evaluate(problem: NepProblem, z) -> np.ndarray:
    return problem.evaluate(z)


def _square(name, A, n=None):
    if not sp.issparse(A):
        A = kernels.as_dense(A, name)
    if A.shape[0] != A.shape[1] or (n is not None and A.shape[0] != n):
        raise DimensionMismatch(f"{name} has shape {A.shape}")
    return A


def loaded_string(n: int) -> NepProblem:
    """Finite-element string fixed at one end and attached to a spring-mass load.

    ``T(z) = K + z/(z-1) e_n e_n^T - z M`` with ``n`` equal elements.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    K = n * (2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1))
    K[-1, -1] = n
    M = (4 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)) / (6 * n)
    M[-1, -1] = 2 / (6 * n)
    E = np.zeros((n, n))
    E[-1, -1] = 1.0
    terms = [
        (ScalarFunction.constant(1.0), K),
        (ScalarFunction.rational_string(1.0), E),
        (ScalarFunction.monomial(1, -1.0), M),
    ]
    return NepProblem(n, terms, name=f"loaded_string({n})")


def quadratic(M, C, K) -> NepProblem:
    """``T(z) = z^2 M + z C + K``."""
    M = _square("M", M)
    n = M.shape[0]
    C, K = _square("C", C, n), _square("K", K, n)
    terms = [(ScalarFunction.monomial(2), M), (ScalarFunction.monomial(1), C), (ScalarFunction.constant(), K)]
    return NepProblem(n, terms, name="quadratic")


def rational_damping(M, K_s, K_v, G_inf, a: Sequence[float], b: Sequence[float]) -> NepProblem:
    """Viscoelastic (Biot) damping model.

    ``T(z) = z^2 M + K_s + G_inf (1 + sum_j a_j z / (z + b_j)) K_v``, stored as
    one term per relaxation pair, all sharing ``K_v``.
    """
    M = _square("M", M)
    n = M.shape[0]
    K_s, K_v = _square("K_s", K_s, n), _square("K_v", K_v, n)
    a, b = np.atleast_1d(np.asarray(a, float)), np.atleast_1d(np.asarray(b, float))
    if a.shape != b.shape:
        raise DimensionMismatch("a and b differ in length")
    if np.any(b <= 0):
        raise ValueError("relaxation parameters b_j must be positive")
    terms = [(ScalarFunction.monomial(2), M), (ScalarFunction.constant(), K_s),
             (ScalarFunction.constant(G_inf), K_v)]
    terms += [(ScalarFunction.rational_damping(aj, bj, G_inf), K_v) for aj, bj in zip(a, b)]
    return NepProblem(n, terms, name="rational_damping")


def gun_form(K, M, W: Sequence, kappa: Sequence[float]) -> NepProblem:
    """``T(z) = K - z^2 M + i sum_j sqrt(z^2 - kappa_j^2) W_j`` (principal branch)."""
    K = _square("K", K)
    n = K.shape[0]
    M = _square("M", M, n)
    W = [_square(f"W[{j}]", Wj, n) for j, Wj in enumerate(W)]
    if len(W) != len(kappa):
        raise DimensionMismatch("one kappa per damping matrix")
    terms = [(ScalarFunction.constant(), K), (ScalarFunction.monomial(2, -1.0), M)]
    terms += [(ScalarFunction.sqrt_branch(k), Wj) for k, Wj in zip(kappa, W)]
    return NepProblem(n, terms, name="gun_form")


BIOT_A = (0.762063, 1.814626, 84.93828, 4.869723)
BIOT_B = (53.72964, 504.5871, 29695.64, 2478.43)
BIOT_G_INF = 362750.0
GUN_KAPPA = (0.0, 108.8774)


def _random_spd(rng, n, spectrum) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = (Q * np.asarray(spectrum, float)) @ Q.T
    return 0.5 * (A + A.T)


def synthetic_gun(n: int = 6, seed: int = 7) -> NepProblem:
    """Small gun-form instance: ``K`` with frequencies 2..5.5, ``M = I``, two
    weak damping matrices with branch points 0 and 1.

    All ``n`` physical eigenvalues lie in the rectangle ``[1.5, 6] x [-0.5, 1.5]``.
    """
    rng = np.random.default_rng(seed)
    K = _random_spd(rng, n, np.linspace(2.0, 5.5, n) ** 2)
    W1 = _random_spd(rng, n, rng.uniform(0.05, 0.3, n))
    W2 = _random_spd(rng, n, rng.uniform(0.05, 0.3, n))
    p = gun_form(K, np.eye(n), [W1, W2], [0.0, 1.0])
    p.name = f"synthetic_gun({n})"
    return p


def synthetic_damping(n: int = 8, seed: int = 3) -> NepProblem:
    """Small viscoelastic instance with the Biot relaxation parameters above.

    Undamped frequencies span 100..800; the weakly damped eigenvalues sit
    near the positive imaginary axis.
    """
    rng = np.random.default_rng(seed)
    K_s = _random_spd(rng, n, np.linspace(100.0, 800.0, n) ** 2)
    K_v = 1e-2 * _random_spd(rng, n, rng.uniform(0.5, 1.5, n))
    p = rational_damping(np.eye(n), K_s, K_v, BIOT_G_INF, BIOT_A, BIOT_B)
    p.name = f"synthetic_damping({n})"
    return p


BUILTIN = {
    "loaded_string": loaded_string,
    "synthetic_gun": synthetic_gun,
    "synthetic_damping": synthetic_damping,
}
