"""Poincare disk kernel: points, ideal points, isometries, geodesics, horodisks.

Conventions
-----------
* Points of the hyperbolic plane are complex numbers ``z`` with ``|z| < 1``.
* The metric is ``lambda(z)^2 |dz|^2`` with ``lambda(z) = 2 / (1 - |z|^2)``.
* The Busemann function at an ideal point ``xi`` is normalised to vanish at
  the origin: ``B_xi(z) = log(|xi - z|^2 / (1 - |z|^2))``.  It decreases at
  unit speed along every geodesic ending at ``xi``.
* The horodisk ``H_xi(t)`` is ``{B_xi < -t}``.  ``H_xi(0)`` has Euclidean
  diameter 1 and passes through the origin; increasing ``t`` shrinks it so
  that ``d(dH(0), H(t)) = t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12
DIST_TOL = 1e-9
BOUNDARY_MARGIN = 1e-12


class HypGeomError(ValueError):
    """Base class for kernel errors."""


class CoincidentEndpoints(HypGeomError):
    pass


class DegenerateAxis(HypGeomError):
    pass


class OverlappingHorodisks(HypGeomError):
    pass


class UntruncatedEnd(HypGeomError):
    pass


class KappaOutOfRange(HypGeomError):
    pass


# ---------------------------------------------------------------------------
# scalar helpers

def one_minus_abs2(z):
    """``1 - |z|^2`` computed as ``(1-|z|)(1+|z|)``."""
    r = np.abs(z)
    return (1.0 - r) * (1.0 + r)


def conformal_factor(z):
    """Hyperbolic conformal factor ``2/(1-|z|^2)`` of the disk."""
    return 2.0 / one_minus_abs2(z)


def busemann(xi, z):
    """Busemann function at the unit complex number ``xi``, zero at 0."""
    return np.log(np.abs(xi - z) ** 2 / one_minus_abs2(z))


def hyp_distance(p, q):
    """Hyperbolic distance between disk points (arrays broadcast).

    Uses ``d = log((A+B)^2 / ((1-|p|^2)(1-|q|^2)))`` with ``A = |1 - conj(p) q|``
    and ``B = |p - q|``, which stays accurate close to the unit circle.
    """
    p = _as_complex(p)
    q = _as_complex(q)
    a = np.abs(1.0 - np.conj(p) * q)
    b = np.abs(p - q)
    d = np.log((a + b) ** 2 / (one_minus_abs2(p) * one_minus_abs2(q)))
    return np.maximum(d, 0.0)


def hyp_distance_cross_ratio(p, q):
    """Reference formula ``arccosh(1 + 2|p-q|^2 / ((1-|p|^2)(1-|q|^2)))``."""
    p = _as_complex(p)
    q = _as_complex(q)
    return np.arccosh(1.0 + 2.0 * np.abs(p - q) ** 2 / ((1 - np.abs(p) ** 2) * (1 - np.abs(q) ** 2)))


def _as_complex(z):
    if isinstance(z, DiskPoint):
        return z.z
    return np.asarray(z, dtype=complex) if not np.isscalar(z) else complex(z)


def canonical_angle(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    if TWO_PI - t < ANGLE_TOL:
        t = 0.0
    return t


def angle_gap(a: float, b: float) -> float:
    """Unsigned angular separation in ``[0, pi]``."""
    d = abs(canonical_angle(a) - canonical_angle(b))
    return min(d, TWO_PI - d)


# ---------------------------------------------------------------------------
# points

@dataclass(frozen=True)
class DiskPoint:
    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not abs(z) < 1.0 - BOUNDARY_MARGIN:
            raise HypGeomError(f"point {z} is not inside the unit disk")
        object.__setattr__(self, "z", z)

    def distance(self, other: "DiskPoint") -> float:
        return float(hyp_distance(self.z, other.z))


@dataclass(frozen=True, eq=False)
class IdealPoint:
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", canonical_angle(float(self.theta)))

    @classmethod
    def from_complex(cls, w: complex) -> "IdealPoint":
        return cls(math.atan2(w.imag, w.real))

    @property
    def point(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))

    def __eq__(self, other):
        if not isinstance(other, IdealPoint):
            return NotImplemented
        return angle_gap(self.theta, other.theta) <= ANGLE_TOL

    def __hash__(self):
        return hash(round(self.theta, 9))

    def __repr__(self):
        return f"IdealPoint({self.theta:.12g})"


# ---------------------------------------------------------------------------
# isometries

@dataclass(frozen=True)
class Isometry:
    """Orientation preserving isometry ``z -> (a z + b) / (conj(b) z + conj(a))``."""

    a: complex
    b: complex

    def __post_init__(self):
        a, b = complex(self.a), complex(self.b)
        det = abs(a) ** 2 - abs(b) ** 2
        if det <= 0:
            raise HypGeomError("matrix does not preserve the disk")
        s = math.sqrt(det)
        object.__setattr__(self, "a", a / s)
        object.__setattr__(self, "b", b / s)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b.conjugate(), self.a.conjugate()]])

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1.0, 0.0)

    @classmethod
    def rotation(cls, angle: float) -> "Isometry":
        return cls(complex(math.cos(angle / 2), math.sin(angle / 2)), 0.0)

    @classmethod
    def moving_origin_to(cls, w: complex) -> "Isometry":
        """``z -> (z + w) / (1 + conj(w) z)``."""
        return cls(1.0, complex(w))

    @classmethod
    def real_translation(cls, length: float) -> "Isometry":
        """Translation along the real diameter towards ``+1``."""
        return cls(math.cosh(length / 2), math.sinh(length / 2))

    def __call__(self, z):
        return self.apply(z)

    def apply(self, z):
        z = _as_complex(z)
        return (self.a * z + self.b) / (self.b.conjugate() * z + self.a.conjugate())

    def derivative(self, z):
        z = _as_complex(z)
        return 1.0 / (self.b.conjugate() * z + self.a.conjugate()) ** 2

    def apply_ideal(self, p: IdealPoint) -> IdealPoint:
        return IdealPoint.from_complex(self.apply(p.point))

    def apply_point(self, p: DiskPoint) -> DiskPoint:
        return DiskPoint(self.apply(p.z))

    def compose(self, other: "Isometry") -> "Isometry":
        """``self o other``."""
        m = self.matrix @ other.matrix
        return Isometry(m[0, 0], m[0, 1])

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return self.compose(other)

    def inverse(self) -> "Isometry":
        return Isometry(self.a.conjugate(), -self.b)

    def power(self, k: int) -> "Isometry":
        result = Isometry.identity()
        base = self if k >= 0 else self.inverse()
        for _ in range(abs(k)):
            result = result @ base
        return result

    def apply_horodisk(self, h: "Horodisk") -> "Horodisk":
        xi = self.apply(h.center.point)
        xi = xi / abs(xi)
        shift = float(busemann(xi, self.apply(0.0)))
        return Horodisk(IdealPoint.from_complex(xi), h.t - shift)

    def close_to(self, other: "Isometry", tol: float = 1e-9) -> bool:
        # matrices are defined up to sign; compare relative to their size
        d1 = abs(self.a - other.a) + abs(self.b - other.b)
        d2 = abs(self.a + other.a) + abs(self.b + other.b)
        scale = max(1.0, abs(self.a) + abs(self.b))
        return min(d1, d2) <= tol * scale


# ---------------------------------------------------------------------------
# geodesics

@dataclass(frozen=True, eq=False)
class Geodesic:
    """Complete oriented geodesic from ``start`` to ``end``.

    ``point(s)`` is the point at signed arclength ``s`` from the midpoint,
    the point of the geodesic closest to the origin.
    """

    start: IdealPoint
    end: IdealPoint
    frame: Isometry = field(init=False, repr=False)
    center: Optional[complex] = field(init=False, repr=False)
    radius: Optional[float] = field(init=False, repr=False)

    def __post_init__(self):
        if self.start == self.end:
            raise CoincidentEndpoints("geodesic endpoints coincide")
        a, b = self.start.theta, self.end.theta
        half = canonical_angle(a - b) / 2.0  # in (0, pi)
        y = math.tan(math.pi / 4 - half / 2)
        psi = a - math.pi / 2 - half
        frame = Isometry.rotation(psi) @ Isometry.moving_origin_to(1j * y)
        object.__setattr__(self, "frame", frame)
        gap = angle_gap(a, b)
        if abs(gap - math.pi) <= ANGLE_TOL:
            center, radius = None, None
        else:
            d = canonical_angle(b - a)
            mid = a + d / 2 if d <= math.pi else b + (TWO_PI - d) / 2
            center = complex(math.cos(mid), math.sin(mid)) / math.cos(gap / 2)
            radius = math.tan(gap / 2)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @classmethod
    def between(cls, a, b) -> "Geodesic":
        a = a if isinstance(a, IdealPoint) else IdealPoint(a)
        b = b if isinstance(b, IdealPoint) else IdealPoint(b)
        return cls(a, b)

    @property
    def is_diameter(self) -> bool:
        return self.center is None

    @property
    def midpoint(self) -> complex:
        return self.frame.apply(0.0)

    def point(self, s):
        return self.frame.apply(np.tanh(np.asarray(s, dtype=float) / 2.0))

    def tangent(self, s):
        """Euclidean unit tangent at arclength ``s`` (direction of travel)."""
        x = np.tanh(np.asarray(s, dtype=float) / 2.0)
        d = self.frame.derivative(x)
        return d / np.abs(d)

    def reversed(self) -> "Geodesic":
        return Geodesic(self.end, self.start)

    def to_frame(self, z):
        """Coordinates in which this geodesic is the real diameter."""
        return self.frame.inverse().apply(z)

    def signed_distance(self, z):
        """Signed distance, positive on the left of the direction of travel."""
        w = self.to_frame(z)
        return np.arcsinh(2.0 * np.imag(w) / one_minus_abs2(w))

    def distance(self, z):
        return np.abs(self.signed_distance(z))

    def foot(self, z):
        """Arclength parameter of the orthogonal projection of ``z``."""
        w = self.to_frame(z)
        # the perpendicular through w meets the diameter at x = tanh(s/2)
        # where tanh(s) = 2 Re(w) / (1 + |w|^2)
        c = 2.0 * np.real(w) / (1.0 + np.abs(w) ** 2)
        return np.arctanh(c)

    def busemann_sum(self) -> float:
        """``B_start + B_end`` along the geodesic (constant on it)."""
        return 2.0 * math.log(abs(math.sin((self.start.theta - self.end.theta) / 2.0)))

    def side(self, z):
        return np.sign(self.signed_distance(z))

    def intersects(self, other: "Geodesic") -> bool:
        """True when the two geodesics cross in the open disk."""
        a1, b1 = self.start.theta, self.end.theta
        pts = [other.start, other.end]
        if any(p == self.start or p == self.end for p in pts):
            return False
        span = canonical_angle(b1 - a1)
        inside = [0.0 < canonical_angle(p.theta - a1) < span for p in pts]
        return inside[0] != inside[1]

    def svg_path(self, scale: float = 100.0) -> str:
        p, q = self.start.point * scale, self.end.point * scale
        if self.is_diameter:
            return f"M {p.real:.4f} {-p.imag:.4f} L {q.real:.4f} {-q.imag:.4f}"
        r = self.radius * scale
        cross = (p.conjugate() * q).imag
        sweep = 1 if cross < 0 else 0
        return f"M {p.real:.4f} {-p.imag:.4f} A {r:.4f} {r:.4f} 0 0 {sweep} {q.real:.4f} {-q.imag:.4f}"


REAL_DIAMETER = None  # set below


def geodesic_between(a, b) -> Geodesic:
    return Geodesic.between(a, b)


# ---------------------------------------------------------------------------
# horodisks

@dataclass(frozen=True)
class Horodisk:
    center: IdealPoint
    t: float = 0.0

    @property
    def euclidean_radius(self) -> float:
        # 1/(1+e^t) without overflow
        return float(0.5 * (1.0 - math.tanh(self.t / 2.0))) if self.t < 30 else math.exp(-self.t)

    @property
    def euclidean_center(self) -> complex:
        return (1.0 - self.euclidean_radius) * self.center.point

    def contains(self, z):
        return busemann(self.center.point, z) < -self.t

    def shifted(self, dt: float) -> "Horodisk":
        return Horodisk(self.center, self.t + dt)

    def disjoint_from(self, other: "Horodisk", tol: float = DIST_TOL) -> bool:
        if self.center == other.center:
            return False
        gap = Geodesic(self.center, other.center).busemann_sum() + self.t + other.t
        return gap >= -tol

    def horocycle_point(self, x):
        """Points of the horocycle; ``x`` is a signed horocyclic arclength
        measured from the point closest to the origin."""
        xi = self.center.point
        # rotate xi to 1 and use the upper half plane w = i(1+z)/(1-z) where
        # the horocycle is Im w = e^t (B = -log Im w in that chart)
        height = math.exp(self.t)
        w = np.asarray(x, dtype=float) * height + 1j * height
        z = (w - 1j) / (w + 1j)
        return xi * z

    def horocycle_coordinate(self, z):
        """Inverse of :meth:`horocycle_point` for points on (or near) the horocycle."""
        zr = np.asarray(z, dtype=complex) / self.center.point
        w = 1j * (1 + zr) / (1 - zr)
        return np.real(w) / math.exp(self.t)

    def svg_circle(self, scale: float = 100.0) -> str:
        c = self.euclidean_center * scale
        return f'<circle cx="{c.real:.4f}" cy="{-c.imag:.4f}" r="{self.euclidean_radius * scale:.4f}"/>'


def tangency_param(a, b) -> float:
    """Common parameter at which the horodisks at ``a`` and ``b`` touch."""
    a = a if isinstance(a, IdealPoint) else IdealPoint(a)
    b = b if isinstance(b, IdealPoint) else IdealPoint(b)
    if a == b:
        raise CoincidentEndpoints("tangency of a horodisk with itself")
    return -0.5 * Geodesic(a, b).busemann_sum()


# ---------------------------------------------------------------------------
# truncated lengths

def _horodisk_interval(g: Geodesic, h: Horodisk):
    """Arclength interval of ``g`` inside ``h``; ``None`` if disjoint.

    Endpoints of the interval may be infinite.
    """
    if h.center == g.end:
        return (float(busemann(g.end.point, g.midpoint)) + h.t, math.inf)
    if h.center == g.start:
        return (-math.inf, -float(busemann(g.start.point, g.midpoint)) - h.t)
    local = g.frame.inverse().apply_horodisk(h)
    rho = local.euclidean_radius
    c = local.euclidean_center
    disc = rho * rho - c.imag * c.imag
    if disc <= 0:
        return None
    r = math.sqrt(disc)
    x0, x1 = c.real - r, c.real + r
    x0, x1 = max(x0, -1.0), min(x1, 1.0)
    s0 = -math.inf if x0 <= -1.0 else 2 * math.atanh(x0)
    s1 = math.inf if x1 >= 1.0 else 2 * math.atanh(x1)
    return (s0, s1)


def truncated_length(g: Geodesic, horodisks: Sequence[Horodisk] = (),
                     segment: Optional[tuple] = None, strict: bool = False,
                     check_disjoint: bool = True) -> float:
    """Hyperbolic length of ``g`` (or of an arclength window) outside the horodisks.

    Returns ``math.inf`` when an ideal end of a full geodesic is not covered;
    with ``strict=True`` that situation raises :class:`UntruncatedEnd`.
    """
    hs = list(horodisks)
    if check_disjoint:
        for i in range(len(hs)):
            for j in range(i + 1, len(hs)):
                if not hs[i].disjoint_from(hs[j]):
                    raise OverlappingHorodisks(f"{hs[i]} and {hs[j]} overlap")
    lo, hi = (-math.inf, math.inf) if segment is None else (float(segment[0]), float(segment[1]))
    intervals = []
    for h in hs:
        iv = _horodisk_interval(g, h)
        if iv is not None:
            intervals.append(iv)
    covered_lo = any(iv[0] == -math.inf for iv in intervals)
    covered_hi = any(iv[1] == math.inf for iv in intervals)
    if (lo == -math.inf and not covered_lo) or (hi == math.inf and not covered_hi):
        if strict:
            raise UntruncatedEnd("an ideal end of the geodesic is not truncated")
        return math.inf
    # length of [lo, hi] minus the union of the intervals
    pieces = sorted((max(a, lo), min(b, hi)) for a, b in intervals)
    pieces = [p for p in pieces if p[1] > p[0]]
    if lo == -math.inf:
        lo = min(p[0] for p in pieces) if pieces else lo
    if hi == math.inf:
        hi = max(p[1] for p in pieces) if pieces else hi
    total = 0.0
    cursor = lo
    for a, b in pieces:
        if a > cursor:
            total += a - cursor
        cursor = max(cursor, b)
    if hi > cursor:
        total += hi - cursor
    return total


def chord_length(start: IdealPoint, end: IdealPoint, t_start: float, t_end: float) -> float:
    """Signed truncated length of the geodesic between two horodisk centres.

    Negative values mean the two horodisks overlap along the geodesic.
    """
    return Geodesic(start, end).busemann_sum() + t_start + t_end


# ---------------------------------------------------------------------------
# translations

def make_translation(axis: Geodesic, length: float) -> Isometry:
    """Hyperbolic translation along ``axis`` (from start towards end)."""
    if not math.isfinite(length):
        raise DegenerateAxis("translation length must be finite")
    if length == 0:
        raise DegenerateAxis("zero translation length")
    f = axis.frame
    return f @ Isometry.real_translation(length) @ f.inverse()


def make_parabolic(fixed: IdealPoint, step: float) -> Isometry:
    """Parabolic isometry fixing ``fixed``.

    In the upper half plane where ``fixed`` sits at infinity the map is
    ``w -> w + step``; horocycles centred at ``fixed`` are preserved.
    """
    if step == 0:
        raise DegenerateAxis("zero parabolic step")
    std = Isometry(1 + 0.5j * step, -0.5j * step)
    rot = Isometry.rotation(fixed.theta)
    return rot @ std @ rot.inverse()


# ---------------------------------------------------------------------------
# equidistant curves

@dataclass(frozen=True)
class EquidistantCurve:
    """Points at signed distance ``signed_distance`` from ``axis``.

    Positive distance is on the left of the axis direction.  The geodesic
    curvature is ``tanh(|signed_distance|)``.
    """

    axis: Geodesic
    signed_distance: float

    @property
    def curvature(self) -> float:
        return math.tanh(abs(self.signed_distance))

    def point(self, s):
        s = np.asarray(s, dtype=float)
        base = 1j * math.tanh(self.signed_distance / 2.0)
        # translate the offset point along the real diameter, then map
        c, sh = np.cosh(s / 2), np.sinh(s / 2)
        w = (c * base + sh) / (sh * base + c)
        return self.axis.frame.apply(w)

    def transformed(self, g: Isometry) -> "_MappedCurve":
        return _MappedCurve(self, g)


@dataclass(frozen=True)
class _MappedCurve:
    base: EquidistantCurve
    g: Isometry

    @property
    def curvature(self) -> float:
        return self.base.curvature

    def point(self, s):
        return self.g.apply(self.base.point(s))


def geodesic_curvature_from_samples(z0: complex, z1: complex, z2: complex) -> float:
    """Hyperbolic geodesic curvature of the Euclidean circle through 3 points.

    For the conformal metric ``e^{2 phi}|dz|^2`` one has
    ``k_g = e^{-phi} (k_E - d phi / d n)`` with ``n`` the Euclidean unit normal
    pointing to the centre of curvature.
    """
    a, b, c = z0, z1, z2
    d = 2 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    ux = ((abs(a) ** 2) * (b.imag - c.imag) + (abs(b) ** 2) * (c.imag - a.imag) + (abs(c) ** 2) * (a.imag - b.imag)) / d
    uy = ((abs(a) ** 2) * (c.real - b.real) + (abs(b) ** 2) * (a.real - c.real) + (abs(c) ** 2) * (b.real - a.real)) / d
    center = complex(ux, uy)
    radius = abs(b - center)
    n = (center - b) / radius
    lam = 2.0 / (1.0 - abs(b) ** 2)
    # grad phi for phi = log(2/(1-|z|^2)) is 2 z / (1 - |z|^2)
    grad = 2.0 * b / (1.0 - abs(b) ** 2)
    dphi_dn = grad.real * n.real + grad.imag * n.imag
    return (1.0 / radius - dphi_dn) / lam


# ---------------------------------------------------------------------------
# distance gained between two orthogonal rays

def _ray_configuration(kappa: float):
    """Model configuration used for ``d_kappa``.

    The rays leave the origin towards ``e^{+-i pi/4}``; ``gamma`` joins their
    endpoints; ``gamma'`` is the real diameter.  ``c_0`` is the curvature
    ``kappa`` curve orthogonal to the real diameter, tangent to ``gamma``
    from the far side, with its axis beyond it.  ``c_t`` is ``c_0`` moved by
    ``t`` along the real diameter towards the origin.
    """
    gamma = Geodesic.between(-math.pi / 4, math.pi / 4)
    x_gamma = gamma.midpoint.real
    dist_axis = math.atanh(kappa)
    x_axis = Isometry.real_translation(dist_axis).apply(x_gamma).real
    # axis orthogonal to the real diameter through x_axis, oriented upwards
    axis = Geodesic.between(-math.pi / 2, math.pi / 2)
    shift = Isometry.real_translation(2 * math.atanh(x_axis))
    axis_frame = shift @ axis.frame
    # an upward oriented geodesic has its left side towards -1
    base = EquidistantCurve(axis, dist_axis)

    def curve(t):
        return base.transformed(Isometry.real_translation(-t) @ shift)

    return gamma, curve, axis_frame


def _ray_distance(z, direction: complex):
    """Distance from ``z`` to the geodesic ray from 0 towards ``direction``."""
    w = np.asarray(z) / direction
    along = np.real(w)
    d_line = np.abs(np.arcsinh(2.0 * np.imag(w) / one_minus_abs2(w)))
    d_origin = hyp_distance(0.0, w)
    return np.where(along >= 0, d_line, d_origin)


def _curve_min(fn, lo=-12.0, hi=12.0, grid=801):
    s = np.linspace(lo, hi, grid)
    v = fn(s)
    k = int(np.argmin(v))
    a, b = s[max(k - 1, 0)], s[min(k + 1, grid - 1)]
    res = optimize.minimize_scalar(fn, bounds=(a, b), method="bounded", options={"xatol": 1e-13})
    return float(min(res.fun, v[k]))


def _tangency_gap(curve, t: float) -> float:
    c = curve(t)
    upper = math.cos(math.pi / 4) + 1j * math.sin(math.pi / 4)

    def signed(s):
        z = c.point(s) / upper
        return np.arcsinh(2.0 * np.imag(z) / one_minus_abs2(z)) * -1.0

    return _curve_min(signed)


def dk_constant(kappa: float, xtol: float = 1e-10) -> float:
    """Distance gained by the two orthogonal rays over the geodesic they span.

    Root of the tangency condition between the translated curvature-``kappa``
    curve and the rays, found by bisection.
    """
    if not 0.0 < kappa < 1.0:
        raise KappaOutOfRange(f"kappa={kappa} must lie in (0, 1)")
    gamma, curve, _ = _ray_configuration(kappa)
    t_hi = 2 * math.atanh(gamma.midpoint.real)
    f = lambda t: _tangency_gap(curve, t)
    lo, hi = 0.0, t_hi
    if f(lo) <= 0:
        return 0.0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ray_configuration_distances(kappa: float, offset: float):
    """Distances from ``c_{-offset}`` to ``gamma`` and to the two rays."""
    gamma, curve, _ = _ray_configuration(kappa)
    c = curve(-offset)
    d_gamma = _curve_min(lambda s: gamma.distance(c.point(s)))
    rays = [complex(math.cos(a), math.sin(a)) for a in (math.pi / 4, -math.pi / 4)]
    d_rays = min(_curve_min(lambda s, r=r: _ray_distance(c.point(s), r)) for r in rays)
    return d_gamma, d_rays


REAL_DIAMETER = Geodesic.between(math.pi, 0.0)
