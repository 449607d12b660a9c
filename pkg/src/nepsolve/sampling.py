"""Search regions, sampling points and their companion weights.

Two kinds of point sets exist.  *Contour* sets carry quadrature weights of a
closed curve (trapezoidal rule on an ellipse, Gauss-Legendre on the sides of
a rectangle), normalised so that ``sum(w * f(z))`` approximates
``(1/2pi) * closed integral of f dz``.  *Barycentric* sets carry the weights
``1 / prod_{j != i} (z_i - z_j)`` of polynomial interpolation, each factor
divided by a capacity ``C`` so that they stay inside floating-point range.
Both kinds may be fed to the moment-based solvers, since any common factor
in the weights cancels in the Hankel pencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DuplicatePoints, PointCollision, WeightOverflow

CONTOUR = "contour"
BARYCENTRIC = "barycentric"

_LOG_MAX = np.log(1e300)


@dataclass(frozen=True)
class Interval:
    """Real interval ``[a, b]``.

    ``imag_tol`` is the admissible |Im z| for membership, relative to the
    half-length; computed eigenvalues of real problems carry roundoff-sized
    imaginary parts.
    """

    a: float
    b: float
    imag_tol: float = 1e-6
    kind = "interval"

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
            raise ValueError(f"interval needs a < b, got [{self.a}, {self.b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.a + self.b))

    @property
    def scale(self) -> float:
        return 0.5 * (self.b - self.a)

    @property
    def diameter(self) -> float:
        return self.b - self.a

    @property
    def capacity(self) -> float:
        return 0.25 * (self.b - self.a)

    @property
    def bounding_interval(self) -> tuple[float, float]:
        return self.a, self.b

    def contains(self, z, tol: float = 1e-12):
        z = np.asarray(z, dtype=complex)
        slack = tol * self.diameter
        return (
            (z.real >= self.a - slack)
            & (z.real <= self.b + slack)
            & (np.abs(z.imag) <= self.imag_tol * self.scale + slack)
        )

    def enclosing_ellipse(self, ratio: float = 0.1) -> "Ellipse":
        return Ellipse(self.center, self.scale, ratio * self.scale)

    def to_dict(self) -> dict:
        return {"kind": "interval", "a": self.a, "b": self.b, "imag_tol": self.imag_tol}


@dataclass(frozen=True)
class Ellipse:
    """Ellipse ``center + a cos(t) + i b sin(t)`` with the ``a`` axis along Re."""

    center: complex
    a: float
    b: float
    kind = "ellipse"

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        a, b = float(self.a), float(self.b)
        if not (a > 0 and b > 0):
            raise ValueError(f"ellipse semi-axes must be positive, got a={self.a}, b={self.b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def scale(self) -> float:
        return max(self.a, self.b)

    @property
    def diameter(self) -> float:
        return 2.0 * max(self.a, self.b)

    @property
    def capacity(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def bounding_interval(self) -> tuple[float, float]:
        return self.center.real - self.a, self.center.real + self.a

    def contains(self, z, tol: float = 1e-12):
        z = np.asarray(z, dtype=complex) - self.center
        return (z.real / self.a) ** 2 + (z.imag / self.b) ** 2 <= 1.0 + tol

    def to_dict(self) -> dict:
        return {"kind": "ellipse", "center": [self.center.real, self.center.imag], "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle given by its lower-left and upper-right corners."""

    lower_left: complex
    upper_right: complex
    kind = "rectangle"

    def __post_init__(self):
        ll, ur = complex(self.lower_left), complex(self.upper_right)
        if not (ll.real < ur.real and ll.imag < ur.imag):
            raise ValueError(f"rectangle corners not ordered: {ll}, {ur}")
        object.__setattr__(self, "lower_left", ll)
        object.__setattr__(self, "upper_right", ur)

    @property
    def width(self) -> float:
        return self.upper_right.real - self.lower_left.real

    @property
    def height(self) -> float:
        return self.upper_right.imag - self.lower_left.imag

    @property
    def center(self) -> complex:
        return 0.5 * (self.lower_left + self.upper_right)

    @property
    def scale(self) -> float:
        return 0.5 * max(self.width, self.height)

    @property
    def diameter(self) -> float:
        return abs(self.upper_right - self.lower_left)

    @property
    def capacity(self) -> float:
        return 0.25 * self.diameter

    @property
    def bounding_interval(self) -> tuple[float, float]:
        return self.lower_left.real, self.upper_right.real

    @property
    def corners(self) -> list[complex]:
        ll, ur = self.lower_left, self.upper_right
        return [ll, complex(ur.real, ll.imag), ur, complex(ll.real, ur.imag)]

    def contains(self, z, tol: float = 1e-12):
        z = np.asarray(z, dtype=complex)
        slack = tol * self.diameter
        ll, ur = self.lower_left, self.upper_right
        return (
            (z.real >= ll.real - slack)
            & (z.real <= ur.real + slack)
            & (z.imag >= ll.imag - slack)
            & (z.imag <= ur.imag + slack)
        )

    def to_dict(self) -> dict:
        ll, ur = self.lower_left, self.upper_right
        return {"kind": "rectangle", "lower_left": [ll.real, ll.imag], "upper_right": [ur.real, ur.imag]}


Region = Union[Interval, Ellipse, Rectangle]


def region_from_dict(d: dict) -> Region:
    def cplx(v):
        if isinstance(v, (list, tuple)):
            return complex(float(v[0]), float(v[1]))
        if isinstance(v, str):
            return complex(v.replace(" ", ""))
        return complex(v)

    kind = d.get("kind")
    if kind == "interval":
        return Interval(float(d["a"]), float(d["b"]), float(d.get("imag_tol", 1e-6)))
    if kind == "ellipse":
        return Ellipse(cplx(d["center"]), float(d["a"]), float(d["b"]))
    if kind == "rectangle":
        return Rectangle(cplx(d["lower_left"]), cplx(d["upper_right"]))
    raise ValueError(f"unknown region kind {kind!r}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SamplingSet:
    """Sampling points with weights.

    ``center`` and ``scale`` define the local variable ``(z - center)/scale``
    in which monomial moments are formed.  For barycentric sets,
    ``log_factor`` is the log of the common factor between the stored weights
    and the exact ``1/prod(z_i - z_j)``.
    """

    points: np.ndarray
    weights: np.ndarray
    mode: str
    capacity: float = 1.0
    center: complex = 0j
    scale: float = 1.0
    log_factor: float = 0.0
    region: Optional[Region] = field(default=None, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points)
        w = np.asarray(self.weights)
        if pts.ndim != 1 or pts.size < 1:
            raise ValueError("a sampling set needs at least one point")
        if w.shape != pts.shape:
            raise ValueError("points and weights differ in length")
        if self.mode not in (CONTOUR, BARYCENTRIC):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == BARYCENTRIC and np.any(w == 0):
            raise ValueError("barycentric weights must be nonzero")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    def __len__(self) -> int:
        return self.points.size

    @property
    def N(self) -> int:
        return self.points.size

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.points) or bool(np.all(self.points.imag == 0))

    def local_points(self) -> np.ndarray:
        z = (self.points - self.center) / self.scale
        return z.real if self.is_real and complex(self.center).imag == 0 else z

    def scaled_weights(self, c) -> "SamplingSet":
        """Copy with all weights multiplied by ``c``."""
        return SamplingSet(
            self.points, self.weights * c, self.mode, self.capacity, self.center, self.scale,
            self.log_factor + float(np.log(abs(c))) if self.mode == BARYCENTRIC else self.log_factor,
            self.region,
        )


def _diameter(points: np.ndarray) -> float:
    if points.size < 2:
        return 0.0
    return float(np.abs(points[:, None] - points[None, :]).max())


def barycentric_weights(points, capacity="auto", return_log_factor=False):
    """Barycentric weights of polynomial interpolation in ``points``.

    Each node difference is divided by ``capacity`` before the product is
    taken (``"auto"`` uses a quarter of the point-set diameter).  The result
    equals the exact weights times ``capacity**(N-1)``.  Products are formed
    in log-magnitude and unit-phase parts so that no intermediate over- or
    underflows.
    """
    z = np.asarray(points)
    if z.ndim != 1 or z.size < 1:
        raise ValueError("need a 1-D array of at least one point")
    N = z.size
    if capacity == "auto" or capacity is None:
        capacity = _diameter(z) / 4.0 or 1.0
    capacity = float(capacity)
    if not capacity > 0:
        raise ValueError("capacity must be positive")
    if N == 1:
        w = np.ones(1, dtype=z.dtype if np.iscomplexobj(z) else float)
        return (w, 0.0) if return_log_factor else w

    d = (z[:, None] - z[None, :]) / capacity
    np.fill_diagonal(d, 1.0)
    if np.any(d == 0):
        i, j = np.argwhere(d == 0)[0]
        raise DuplicatePoints(f"points {i} and {j} coincide ({z[i]})")
    log_abs = np.log(np.abs(d)).sum(axis=1)
    if np.any(np.abs(log_abs) > _LOG_MAX):
        raise WeightOverflow("barycentric weights leave [1e-300, 1e300]; adjust the capacity")
    if np.iscomplexobj(z):
        phase = np.prod(d / np.abs(d), axis=1)
        w = np.exp(-log_abs) / phase
    else:
        sign = np.prod(np.sign(d), axis=1)
        w = sign * np.exp(-log_abs)
    log_factor = (N - 1) * np.log(capacity)
    return (w, float(log_factor)) if return_log_factor else w


def interpolation_nodes(points, capacity="auto", region: Optional[Region] = None) -> SamplingSet:
    """Barycentric sampling set for arbitrary distinct points."""
    z = np.asarray(points)
    if np.iscomplexobj(z) and np.all(z.imag == 0):
        z = z.real
    if capacity == "auto" and region is not None:
        capacity = region.capacity
    w, log_factor = barycentric_weights(z, capacity, return_log_factor=True)
    if capacity == "auto" or capacity is None:
        capacity = _diameter(z) / 4.0 or 1.0
    if region is not None:
        center, scale = region.center, region.scale
    else:
        center = complex(0.5 * (z.real.max() + z.real.min()), 0.5 * (np.imag(z).max() + np.imag(z).min()))
        scale = max(0.5 * _diameter(z), 1e-300) if z.size > 1 else 1.0
    return SamplingSet(z, w, BARYCENTRIC, float(capacity), center, scale, log_factor, region)


def chebyshev_points(region, N: int) -> SamplingSet:
    """Chebyshev points of the first kind mapped to an interval.

    Weights are the common-factor-free form ``(-1)^i sin((2i+1)pi/2N)``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not isinstance(region, Interval):
        region = Interval(*region)
    i = np.arange(N)
    theta = (2 * i + 1) * np.pi / (2 * N)
    x = np.cos(theta)
    pts = region.center.real + region.scale * x
    w = np.where(i % 2 == 0, 1.0, -1.0) * np.sin(theta)
    C = region.capacity
    # stored = exact * N * C**(N-1)
    log_factor = float(np.log(N) + (N - 1) * np.log(C))
    return SamplingSet(pts, w, BARYCENTRIC, C, region.center, region.scale, log_factor, region)


def ellipse_trapezoid(region: Ellipse, N: int, offset: float = 0.5) -> SamplingSet:
    """N-point trapezoidal rule on an ellipse, nodes at angles 2pi(j+offset)/N.

    The default half offset keeps nodes off the real axis.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    alpha = 2 * np.pi * (np.arange(N) + offset) / N
    z = region.center + region.a * np.cos(alpha) + 1j * region.b * np.sin(alpha)
    w = (-region.a * np.sin(alpha) + 1j * region.b * np.cos(alpha)) / N
    return SamplingSet(z, w, CONTOUR, region.capacity, region.center, region.scale, np.nan, region)


def _side_rule(z0: complex, z1: complex, n: int, panels: int = 1):
    x, wg = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    edges = z0 + (z1 - z0) * np.linspace(0.0, 1.0, panels + 1)
    for p0, p1 in zip(edges[:-1], edges[1:]):
        half = 0.5 * (p1 - p0)
        nodes.append(0.5 * (p0 + p1) + half * x)
        weights.append(wg * half / (2 * np.pi))
    return np.concatenate(nodes), np.concatenate(weights)


def rectangle_gauss(region: Rectangle, points_per_long_side: int, points_per_short_side: int,
                    panels: int = 1) -> SamplingSet:
    """Gauss-Legendre nodes on the four sides, traversed counterclockwise.

    With ``panels > 1`` every side is split into that many equal panels, each
    carrying the given number of nodes (a composite rule).
    """
    if points_per_long_side < 1 or points_per_short_side < 1:
        raise ValueError("point counts must be >= 1")
    c = region.corners
    horizontal_long = region.width >= region.height
    nodes, weights = [], []
    for k in range(4):
        is_horizontal = k % 2 == 0
        n = points_per_long_side if is_horizontal == horizontal_long else points_per_short_side
        z, w = _side_rule(c[k], c[(k + 1) % 4], n, panels)
        nodes.append(z)
        weights.append(w)
    return SamplingSet(np.concatenate(nodes), np.concatenate(weights), CONTOUR, region.capacity,
                       region.center, region.scale, np.nan, region)


def rectangle_composite_gauss(region: Rectangle, total: int, order: int = 10) -> SamplingSet:
    """Composite Gauss rule with roughly ``total`` nodes spread by side length."""
    perimeter = 2 * (region.width + region.height)
    c = region.corners
    nodes, weights = [], []
    for k in range(4):
        length = abs(c[(k + 1) % 4] - c[k])
        panels = max(1, int(round(total * length / perimeter / order)))
        z, w = _side_rule(c[k], c[(k + 1) % 4], order, panels)
        nodes.append(z)
        weights.append(w)
    return SamplingSet(np.concatenate(nodes), np.concatenate(weights), CONTOUR, region.capacity,
                       region.center, region.scale, np.nan, region)


def rectangle_gauss_split(region: Rectangle, N: int) -> SamplingSet:
    """Exactly ``N`` Gauss nodes, split over the four sides by length (at least one each)."""
    if N < 4:
        raise ValueError("a rectangle rule needs N >= 4")
    c = region.corners
    lengths = np.array([abs(c[(k + 1) % 4] - c[k]) for k in range(4)])
    share = 1 + (N - 4) * lengths / lengths.sum()
    counts = np.floor(share).astype(int)
    # largest remainders take the leftover nodes
    for k in np.argsort(counts - share)[: N - counts.sum()]:
        counts[k] += 1
    nodes, weights = [], []
    for k in range(4):
        z, w = _side_rule(c[k], c[(k + 1) % 4], int(counts[k]))
        nodes.append(z)
        weights.append(w)
    return SamplingSet(np.concatenate(nodes), np.concatenate(weights), CONTOUR, region.capacity,
                       region.center, region.scale, np.nan, region)


def rectangle_chebyshev_grid(region: Rectangle, nx: int, ny: int) -> SamplingSet:
    """Tensor grid of Chebyshev points inside a rectangle (barycentric mode)."""
    x = chebyshev_points(Interval(region.lower_left.real, region.upper_right.real), nx).points
    y = chebyshev_points(Interval(region.lower_left.imag, region.upper_right.imag), ny).points
    pts = (x[:, None] + 1j * y[None, :]).ravel()
    return interpolation_nodes(pts, region=region)


def default_sampling(region: Region, N: int) -> SamplingSet:
    """The natural point set for a region: Chebyshev on intervals, quadrature on contours."""
    if isinstance(region, Interval):
        return chebyshev_points(region, N)
    if isinstance(region, Ellipse):
        return ellipse_trapezoid(region, N)
    if isinstance(region, Rectangle):
        return rectangle_gauss_split(region, N)
    raise TypeError(f"unsupported region {region!r}")


def boundary_sampling(region: Region, N: int, flat_ratio: float = 0.1) -> SamplingSet:
    """Quadrature on the boundary of a region.

    An interval has no interior, so the flat ellipse on it (minor/major axis
    ratio ``flat_ratio``) is used instead.
    """
    if isinstance(region, Interval):
        return ellipse_trapezoid(region.enclosing_ellipse(flat_ratio), N)
    if isinstance(region, Ellipse):
        return ellipse_trapezoid(region, N)
    if isinstance(region, Rectangle):
        return rectangle_composite_gauss(region, N)
    raise TypeError(f"unsupported region {region!r}")


def _require_barycentric(sampling: SamplingSet, alpha: int):
    if sampling.mode != BARYCENTRIC:
        raise ValueError("operation needs a barycentric sampling set")
    if not 0 <= alpha < sampling.N:
        raise ValueError(f"order {alpha} must satisfy 0 <= alpha < N = {sampling.N}")


def phi_alpha_1(sampling: SamplingSet, alpha: int, z) -> complex:
    """Weighted pole sum ``sum_i w_i z_i**alpha / (z_i - z)``."""
    _require_barycentric(sampling, alpha)
    z = complex(z)
    if np.any(sampling.points == z):
        raise PointCollision(f"{z} is a sampling point")
    zi = sampling.points
    return complex(np.sum(sampling.weights * zi**alpha / (zi - z)))


def phi_alpha_1_closed_form(sampling: SamplingSet, alpha: int, z) -> complex:
    """``-z**alpha / l(z)`` rescaled by the weight normalisation of ``sampling``.

    ``l`` is the node polynomial; evaluated through logarithms to stay finite.
    """
    _require_barycentric(sampling, alpha)
    z = complex(z)
    if np.any(sampling.points == z):
        raise PointCollision(f"{z} is a sampling point")
    log_l = np.sum(np.log((z - sampling.points).astype(complex)))
    return complex(-(z**alpha) * np.exp(sampling.log_factor - log_l))


def node_polynomial(sampling: SamplingSet, z) -> complex:
    return complex(np.prod(z - sampling.points))


def annihilation_sum(sampling: SamplingSet, f: Callable, alpha: int) -> complex:
    """``sum_i w_i z_i**alpha f(z_i)``.

    Vanishes for polynomial ``f`` of degree below ``N-1-alpha`` and returns
    the (weight-normalised) leading coefficient at degree ``N-1-alpha``.
    """
    _require_barycentric(sampling, alpha)
    zi = sampling.points
    try:
        fz = np.asarray(f(zi))
        if fz.shape != zi.shape:
            raise ValueError
    except Exception:
        fz = np.array([f(x) for x in zi])
    return complex(np.sum(sampling.weights * zi**alpha * fz))


__all__ = [
    "Interval", "Ellipse", "Rectangle", "Region", "SamplingSet", "CONTOUR", "BARYCENTRIC",
    "region_from_dict", "barycentric_weights", "interpolation_nodes", "chebyshev_points",
    "ellipse_trapezoid", "rectangle_gauss", "rectangle_gauss_split", "rectangle_composite_gauss", "rectangle_chebyshev_grid",
    "default_sampling", "boundary_sampling", "phi_alpha_1", "phi_alpha_1_closed_form",
    "node_polynomial", "annihilation_sum",
]
