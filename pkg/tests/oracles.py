"""Independent reference computations used to freeze expected values.

Nothing here calls into the closed-form kernel paths being tested; each
routine goes through a different formula or a brute-force search.
"""

import math

import numpy as np
from scipy import optimize


def cross_ratio_distance(p: complex, q: complex) -> float:
    return float(np.arccosh(1 + 2 * abs(p - q) ** 2 / ((1 - abs(p) ** 2) * (1 - abs(q) ** 2))))


def orthogonal_circle(a: float, b: float):
    """Centre and radius of the circle through e^{ia}, e^{ib} orthogonal to |z|=1.

    Solves the 2x2 linear system Re(conj(w_k) c) = 1 for the centre.
    """
    wa, wb = complex(math.cos(a), math.sin(a)), complex(math.cos(b), math.sin(b))
    m = np.array([[wa.real, wa.imag], [wb.real, wb.imag]])
    cx, cy = np.linalg.solve(m, [1.0, 1.0])
    c = complex(cx, cy)
    return c, math.sqrt(abs(c) ** 2 - 1)


def horodisk_circle(theta: float, t: float):
    """Euclidean circle of the horodisk at e^{i theta} with parameter t.

    The radius comes from the point on the ray to the centre at distance t
    beyond the base horocycle, which itself passes through the origin.
    """
    # base horocycle meets the diameter at 0; move t towards the ideal point
    x = math.tanh(t / 2)
    rho = (1 - x) / 2
    xi = complex(math.cos(theta), math.sin(theta))
    return (1 - rho) * xi, rho


def horodisk_gap(theta_a: float, theta_b: float, t: float) -> float:
    ca, ra = horodisk_circle(theta_a, t)
    cb, rb = horodisk_circle(theta_b, t)
    return abs(ca - cb) - ra - rb


def tangency_by_bisection(theta_a: float, theta_b: float) -> float:
    return optimize.brentq(lambda t: horodisk_gap(theta_a, theta_b, t), -20.0, 20.0, xtol=1e-14)


def boundary_gap_along_real_axis(t: float) -> float:
    """Distance from the base horocycle at 1 to the one of parameter t, on the real axis."""
    _, rho0 = horodisk_circle(0.0, 0.0)
    _, rho = horodisk_circle(0.0, t)
    x0 = 1 - 2 * rho0
    x1 = 1 - 2 * rho
    return cross_ratio_distance(x0, x1)


def ideal_polygon_area(angles) -> float:
    """Hyperbolic area of the ideal polygon with the given vertex angles.

    One vertex is sent to infinity in the upper half plane; the area is then
    the integral of 1/y over the chain of half circles below the region.
    """
    from scipy import integrate

    pts = [complex(math.cos(a), math.sin(a)) for a in sorted(angles)]
    top = pts[0]
    # Moebius map of the disk onto the upper half plane sending top to infinity
    xs = sorted((1j * (top + w) / (top - w)).real for w in pts[1:])
    total = 0.0
    for x0, x1 in zip(xs, xs[1:]):
        c, r = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
        val, _ = integrate.quad(lambda x: 1.0 / math.sqrt(max(r * r - (x - c) ** 2, 1e-300)), x0, x1, limit=200)
        total += val
    return total


def _band_phi(rho, rho1, rho2, upper):
    """Band angle of the geodesic joining boundary points rho1 < rho2 at rho."""
    x1, x2 = math.exp(rho1), math.exp(rho2)
    c = 0.5 * (x1 + x2) * (-1 if upper else 1)
    r = 0.5 * (x2 - x1)
    m = math.exp(rho)
    re = (m * m + c * c - r * r) / (2 * c)
    return math.acos(max(-1.0, min(1.0, re / m)))


def annular_polygon_area(upper_rhos, lower_rhos, period) -> float:
    """Area of the invariant region between an upper and a lower chain.

    Chains are given by one period of band coordinates (``None`` means the
    axis).  In band coordinates the area element is drho dphi / sin(phi)^2.
    """
    from scipy import integrate

    def chain_cot(rhos, upper):
        if rhos is None:
            return lambda rho: 0.0, []
        rs = sorted(rhos)
        ext = [r - period for r in rs] + rs + [r + period for r in rs]

        def f(rho):
            for a, b in zip(ext, ext[1:]):
                if a <= rho <= b:
                    phi = _band_phi(rho, a, b, upper)
                    return math.cos(phi) / max(math.sin(phi), 1e-300)
            raise ValueError(rho)
        return f, ext

    f_up, bu = chain_cot(upper_rhos, True)
    f_lo, bl = chain_cot(lower_rhos, False)
    start = 0.0
    pts = sorted(p for p in bu + bl if start < p < start + period)
    knots = [start] + pts + [start + period]
    total = 0.0
    for a, b in zip(knots, knots[1:]):
        val, _ = integrate.quad(lambda r: f_lo(r) - f_up(r), a, b, limit=200)
        total += val
    return total


# -- exact minimal graphs ----------------------------------------------------------

def distance_to_real_diameter(z):
    """Signed hyperbolic distance from disk points to the real diameter."""
    z = np.asarray(z, dtype=complex)
    return np.arcsinh(2.0 * z.imag / (1.0 - np.abs(z) ** 2))


def translation_invariant_graph(c: float):
    """Height as a function of signed distance s for the minimal graph invariant
    along a geodesic: cosh(s) f'/sqrt(1+f'^2) = c, f(0) = 0 (needs |c| < 1)."""
    from scipy.integrate import quad

    def f(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.array([quad(lambda x: c / math.sqrt(math.cosh(x) ** 2 - c * c), 0.0, si)[0] for si in s])
    return f
