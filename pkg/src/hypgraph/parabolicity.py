"""Conformal-type diagnostics: area growth of distance spheres, a Huber-type
curvature test, conformal moduli of annuli and the auxiliary metric built
from a map between conformal metrics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import dijkstra


class ParabolicityError(ValueError):
    pass


class DisconnectedMesh(ParabolicityError):
    pass


class GridTooShort(ParabolicityError):
    pass


class NotAnAnnulus(ParabolicityError):
    pass


class OrientationReversed(ParabolicityError):
    pass


class NotDiffeomorphism(ParabolicityError):
    pass


# ---------------------------------------------------------------------------
# metric samples and growth

@dataclass
class MetricSample:
    """Vertices joined by weighted edges, with area weights and curvature."""

    coords: np.ndarray            # (n, 2), for plotting only
    edges: np.ndarray             # (k, 2)
    lengths: np.ndarray           # (k,)
    area: np.ndarray              # (n,) dual-cell areas
    curvature: np.ndarray         # (n,)
    boundary: np.ndarray          # vertex indices

    def __post_init__(self):
        if np.any(self.area <= 0):
            raise ValueError("area weights must be positive")
        if not np.all(np.isfinite(self.curvature)):
            raise ValueError("curvature must be finite")

    def scaled(self, c: float) -> "MetricSample":
        """The metric multiplied by ``c**2``."""
        return MetricSample(self.coords, self.edges, self.lengths * c, self.area * c * c,
                            self.curvature / (c * c), self.boundary)

    def distances(self) -> np.ndarray:
        n = len(self.area)
        if not len(self.boundary):
            raise DisconnectedMesh("empty boundary")
        g = sp.coo_matrix((self.lengths, (self.edges[:, 0], self.edges[:, 1])), shape=(n, n)).tocsr()
        d = dijkstra(g, directed=False, indices=np.asarray(self.boundary), min_only=True)
        if not np.all(np.isfinite(d)):
            raise DisconnectedMesh(f"{int(np.sum(~np.isfinite(d)))} vertices unreachable from the boundary")
        return d


def rotational_collar(profile: Callable[[np.ndarray], np.ndarray], length: float, n_s: int,
                      n_theta: int = 64, curvature: float = 0.0) -> MetricSample:
    """Grid sample of ``ds^2 + (profile(s) dtheta)^2`` on ``[0, length] x S^1``
    with ``theta`` of period one; the boundary is ``s = 0``."""
    s = np.linspace(0.0, length, n_s + 1)
    ds = s[1] - s[0]
    th = np.arange(n_theta) / n_theta
    S, T = np.meshgrid(s, th, indexing="ij")
    idx = np.arange(S.size).reshape(S.shape)
    f = profile(s)
    radial = np.column_stack([idx[:-1].ravel(), idx[1:].ravel()])
    radial_len = np.full(len(radial), ds)
    ring = np.column_stack([idx.ravel(), np.roll(idx, -1, axis=1).ravel()])
    ring_len = np.repeat(f / n_theta, n_theta)
    # diagonals keep graph distances close to the metric ones
    diag = np.column_stack([idx[:-1].ravel(), np.roll(idx, -1, axis=1)[1:].ravel()])
    fm = 0.5 * (f[:-1] + f[1:])
    diag_len = np.repeat(np.sqrt(ds ** 2 + (fm / n_theta) ** 2), n_theta)
    w = np.full(len(s), ds)
    w[0] = w[-1] = 0.5 * ds
    area = np.repeat(w * f / n_theta, n_theta)
    coords = np.column_stack([S.ravel(), T.ravel()])
    return MetricSample(coords, np.vstack([radial, ring, diag]),
                        np.concatenate([radial_len, ring_len, diag_len]), area,
                        np.full(S.size, float(curvature)), idx[0].copy())


def flat_cylinder(circumference: float, length: float, n_s: int = 200, n_theta: int = 32) -> MetricSample:
    return rotational_collar(lambda s: np.full_like(s, circumference), length, n_s, n_theta, 0.0)


def funnel_collar(core_length: float, length: float, n_s: int = 200, n_theta: int = 32) -> MetricSample:
    """Collar of a closed geodesic of length ``core_length``: profile ``L cosh s``."""
    return rotational_collar(lambda s: core_length * np.cosh(s), length, n_s, n_theta, -1.0)


def cusp_collar(horocycle_length: float, length: float, n_s: int = 200, n_theta: int = 32) -> MetricSample:
    """Cusp neighbourhood bounded by a horocycle of the given length: profile ``L e^{-s}``."""
    return rotational_collar(lambda s: horocycle_length * np.exp(-s), length, n_s, n_theta, -1.0)


@dataclass
class GrowthReport:
    r: np.ndarray
    area: np.ndarray
    curvature: np.ndarray         # integral of K over S_r
    curvature_minus: np.ndarray   # integral of K^- over S_r
    usable_radius: float

    def to_dict(self) -> dict:
        return {"r": self.r.tolist(), "area": self.area.tolist(),
                "curvature": self.curvature.tolist(), "curvature_minus": self.curvature_minus.tolist(),
                "usable_radius": self.usable_radius}


def distance_spheres(metric: MetricSample, r_grid: Sequence[float]) -> GrowthReport:
    """Areas and curvature integrals of ``S_r = {d(p, boundary) < r}``."""
    d = metric.distances()
    r = np.asarray(r_grid, dtype=float)
    order = np.argsort(d)
    ds = d[order]
    cum_a = np.concatenate([[0.0], np.cumsum(metric.area[order])])
    kw = metric.curvature[order] * metric.area[order]
    cum_k = np.concatenate([[0.0], np.cumsum(kw)])
    cum_km = np.concatenate([[0.0], np.cumsum(np.maximum(-kw, 0.0))])
    pos = np.searchsorted(ds, r, side="left")
    return GrowthReport(r, cum_a[pos], cum_k[pos], cum_km[pos], float(d.max()))


@dataclass
class HuberVerdict:
    verdict: str                  # 'parabolic_criterion_met' or 'criterion_not_met'
    C: float
    ratio: float                  # final q(r) over the fitted C
    partial_sums: np.ndarray
    partial_slope: float
    corroborated: bool

    @property
    def met(self) -> bool:
        return self.verdict == "parabolic_criterion_met"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "C": self.C, "ratio": self.ratio,
                "partial_slope": self.partial_slope, "corroborated": self.corroborated}


def huber_check(report: GrowthReport, C: Optional[float] = None, slack: float = 0.1,
                min_points: int = 4) -> HuberVerdict:
    """Test ``-int_{S_r} K >= -C ln(2+r)`` on the tail of the grid.

    With ``C`` omitted it is fitted by least squares over the last half of the
    grid, and the bound must still hold at the end of the grid up to
    ``slack``: a quantity growing faster than ``ln(2+r)`` overshoots its own
    fit there.  Only ever concludes that the sufficient criterion holds or not.
    """
    r = report.r
    half = r >= 0.5 * (r[0] + r[-1])
    if len(r) < 2 * min_points or half.sum() < min_points or r[-1] <= 0:
        raise GridTooShort(f"need at least {2 * min_points} radii with {min_points} in the last half")
    ell = np.log(2.0 + r)
    q = -report.curvature / ell
    if C is None:
        C_fit = float(np.sum(q[half] * ell[half] ** 2) / np.sum(ell[half] ** 2))
        C_use = max(C_fit, 0.0)
        bound = (1.0 + slack) * C_use + 1e-12 * max(1.0, float(np.max(np.abs(report.curvature))))
        ok = bool(q[-1] <= bound)
    else:
        C_use = float(C)
        ok = bool(np.all(q <= C_use * (1 + 1e-12) + 1e-12))
    ratio = float(q[-1] / C_use) if C_use > 0 else (0.0 if q[-1] <= 0 else math.inf)
    # corroboration: int r/|S_r| dr diverges when r^2/|S_r| does not decay,
    # a scale-invariant test on the tail
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(report.area > 0, r / report.area, 0.0)
    dr = np.diff(r, prepend=r[0])
    P = np.cumsum(integrand * dr)
    lr = np.log(np.maximum(r, 1e-300))
    sel = half & (r > 0)
    slope = float(np.polyfit(lr[sel], P[sel], 1)[0]) if sel.sum() >= 2 else 0.0
    tail = r * integrand
    grows = bool(tail[-1] >= (1.0 - slack) * tail[np.argmax(half)]) and slope > 0
    return HuberVerdict("parabolic_criterion_met" if ok else "criterion_not_met",
                        C_use, ratio, P, slope, grows)


# ---------------------------------------------------------------------------
# conformal modulus

@dataclass
class AnnulusMesh:
    coords: np.ndarray            # (n, 2)
    triangles: np.ndarray         # (m, 3)
    inner: np.ndarray             # vertex ids, potential 0
    outer: np.ndarray             # vertex ids, potential 1
    dof: Optional[np.ndarray] = None   # periodic identification


@dataclass
class ModulusEstimate:
    modulus: float
    energy: float
    potential: np.ndarray

    def to_dict(self) -> dict:
        return {"modulus": self.modulus, "energy": self.energy}


def _p1_gradients(coords, tris):
    p = coords[tris]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    g = np.empty((len(p), 2, 3))
    for i in range(3):
        e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        g[:, 0, i] = -e[:, 1] / (2 * area)
        g[:, 1, i] = e[:, 0] / (2 * area)
    return g, np.abs(area)


def euler_characteristic(tris: np.ndarray) -> int:
    edges = np.sort(np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1)
    n_e = len(np.unique(edges, axis=0))
    return len(np.unique(tris)) - n_e + len(tris)


def conformal_modulus(ann: AnnulusMesh, tensor: Optional[np.ndarray] = None,
                      check_topology: bool = True) -> ModulusEstimate:
    """Modulus ``1/E`` where ``E`` is the Dirichlet energy of the harmonic
    potential equal to 0 on the inner loop and 1 on the outer loop.

    ``tensor`` is an optional per-triangle (2, 2) metric ``G``; the energy
    density is then ``grad v^T G^{-1} grad v sqrt(det G)``.  Without it the
    chart is taken as conformal, so no factor is needed.
    """
    dof = np.arange(len(ann.coords)) if ann.dof is None else np.asarray(ann.dof)
    tris = dof[ann.triangles]
    inner, outer = set(dof[ann.inner].tolist()), set(dof[ann.outer].tolist())
    if not inner or not outer:
        raise NotAnAnnulus("both boundary loops must be non-empty")
    if inner & outer:
        raise NotAnAnnulus("the boundary loops intersect")
    if check_topology and euler_characteristic(tris) != 0:
        raise NotAnAnnulus(f"Euler characteristic {euler_characteristic(tris)} != 0")
    G, area = _p1_gradients(ann.coords, ann.triangles)
    if tensor is None:
        M = np.broadcast_to(np.eye(2), (len(tris), 2, 2)) * area[:, None, None]
    else:
        T = np.asarray(tensor, dtype=float)
        det = T[:, 0, 0] * T[:, 1, 1] - T[:, 0, 1] * T[:, 1, 0]
        M = np.linalg.inv(T) * (np.sqrt(det) * area)[:, None, None]
    local = np.einsum("mki,mkl,mlj->mij", G, M, G)
    n = int(dof.max()) + 1
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    A = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    v = np.zeros(n)
    fixed = np.zeros(n, dtype=bool)
    fixed[list(inner)] = True
    fixed[list(outer)] = True
    v[list(outer)] = 1.0
    free = ~fixed & np.isin(np.arange(n), tris)
    if free.any():
        rhs = -A[free][:, fixed] @ v[fixed]
        v[free] = spla.spsolve(A[free][:, free].tocsc(), rhs)
    energy = float(v @ (A @ v))
    if not energy > 0:
        raise NotAnAnnulus("zero energy: the loops do not bound an annulus")
    return ModulusEstimate(1.0 / energy, energy, v[dof])


def round_annulus(c: float, n_theta: int = 128, n_r: Optional[int] = None) -> AnnulusMesh:
    """Mesh of ``1 <= |z| <= c`` on a log-polar grid (vertices in the plane)."""
    lc = math.log(c)
    if n_r is None:
        n_r = max(4, int(round(n_theta * lc / (2 * math.pi))))
    s = np.linspace(0.0, lc, n_r + 1)
    th = 2 * math.pi * np.arange(n_theta) / n_theta
    S, T = np.meshgrid(s, th, indexing="ij")
    z = np.exp(S + 1j * T)
    idx = np.arange(S.size).reshape(S.shape)
    nxt = np.roll(idx, -1, axis=1)
    a, b, c2, d = idx[:-1], nxt[:-1], nxt[1:], idx[1:]
    tris = np.vstack([np.column_stack([a.ravel(), b.ravel(), c2.ravel()]),
                      np.column_stack([a.ravel(), c2.ravel(), d.ravel()])])
    coords = np.column_stack([z.real.ravel(), z.imag.ravel()])
    return AnnulusMesh(coords, tris, idx[0].copy(), idx[-1].copy())


def graph_metric_tensor(grad_u: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Induced metric ``lam^2 I + grad u grad u^T`` of a graph, per triangle."""
    T = lam[:, None, None] ** 2 * np.eye(2)[None] + grad_u[:, :, None] * grad_u[:, None, :]
    return T


# ---------------------------------------------------------------------------
# the auxiliary metric of a map between conformal metrics

@dataclass
class HatMetric:
    factor: np.ndarray            # conformal factor of g_hat = sigma(u)^2 |u_z|^2
    jacobian: np.ndarray          # (|u_z|^2 - |u_zbar|^2) / |u_z|^2
    curvature: np.ndarray         # discrete curvature of g_hat (nan on the grid border)
    target_curvature: np.ndarray  # K_{g2}(u) * jacobian
    domination: np.ndarray        # smallest eigenvalue of 4 g_hat - u^* g2

    def residual(self, margin: int = 2) -> float:
        """Largest relative mismatch of the curvature identity away from the border."""
        a = self.curvature[margin:-margin, margin:-margin]
        b = self.target_curvature[margin:-margin, margin:-margin]
        return float(np.nanmax(np.abs(a - b) / np.maximum(np.abs(b), 1e-12)))

    def to_dict(self) -> dict:
        return {"residual": self.residual(), "min_jacobian": float(np.min(self.jacobian)),
                "min_domination": float(np.min(self.domination))}


def hat_metric_check(x: np.ndarray, y: np.ndarray, u: np.ndarray,
                     sigma: Callable[[np.ndarray], np.ndarray],
                     target_curvature: Callable[[np.ndarray], np.ndarray]) -> HatMetric:
    """Build ``g_hat`` for the map ``u`` sampled on the grid ``x[i], y[j]``.

    ``u`` holds complex values of shape ``(len(x), len(y))``; ``sigma`` is the
    conformal factor of the target metric.  Derivatives are central finite
    differences; curvature uses the five-point Laplacian.
    """
    hx, hy = x[1] - x[0], y[1] - y[0]
    ux = np.gradient(u, hx, axis=0, edge_order=2)
    uy = np.gradient(u, hy, axis=1, edge_order=2)
    uz = 0.5 * (ux - 1j * uy)
    uzb = 0.5 * (ux + 1j * uy)
    J = np.abs(uz) ** 2 - np.abs(uzb) ** 2
    if np.any(J > 0) and np.any(J < 0):
        raise NotDiffeomorphism("the Jacobian changes sign")
    if np.any(np.abs(uz) <= np.abs(uzb)):
        raise OrientationReversed("|u_z| <= |u_zbar| somewhere")
    s2 = sigma(u) ** 2
    factor = s2 * np.abs(uz) ** 2
    jac = J / np.abs(uz) ** 2
    lf = np.log(factor)
    lap = np.full(lf.shape, np.nan)
    lap[1:-1, 1:-1] = ((lf[2:, 1:-1] - 2 * lf[1:-1, 1:-1] + lf[:-2, 1:-1]) / hx ** 2
                       + (lf[1:-1, 2:] - 2 * lf[1:-1, 1:-1] + lf[1:-1, :-2]) / hy ** 2)
    K = -lap / (2.0 * factor)
    dom = s2 * (4 * np.abs(uz) ** 2 - (np.abs(uz) + np.abs(uzb)) ** 2)
    return HatMetric(factor, jac, K, target_curvature(u) * jac, dom)


def hyperbolic_factor(w: np.ndarray) -> np.ndarray:
    return 2.0 / (1.0 - np.abs(w) ** 2)


# ---------------------------------------------------------------------------
# graph area growth over an end

@dataclass
class EndGrowth:
    r: np.ndarray
    area: np.ndarray
    exponent: float               # log-log slope over the last octave
    octave_ratio: float           # area(r_max) / area(r_max / 2)
    height_window: float

    def to_dict(self) -> dict:
        return {"r": self.r.tolist(), "area": self.area.tolist(), "exponent": self.exponent,
                "octave_ratio": self.octave_ratio, "height_window": self.height_window}


def end_area_growth(base_distance: np.ndarray, height: np.ndarray, W: np.ndarray,
                    area: np.ndarray, r_grid: Sequence[float], M: float) -> EndGrowth:
    """Graph area over ``{d < r, |u| < M + r}`` for per-triangle samples.

    ``area`` are base areas and ``W`` the graph area factors.
    """
    r = np.asarray(r_grid, dtype=float)
    if len(r) < 3:
        raise GridTooShort("need at least three radii")
    A = np.array([float(np.sum((W * area)[(base_distance < ri) & (np.abs(height) < M + ri)])) for ri in r])
    top = r[-1]
    octave = r >= 0.5 * top - 1e-12
    lo = int(np.argmax(octave))
    sel = octave & (A > 0)
    if sel.sum() >= 2:
        exponent = float(np.polyfit(np.log(r[sel]), np.log(A[sel]), 1)[0])
    else:
        exponent = 0.0
    ratio = float(A[-1] / A[lo]) if A[lo] > 0 else math.inf
    return EndGrowth(r, A, exponent, ratio, float(M))


def graph_end_area_growth(u, dom, end: str, r_grid: Optional[Sequence[float]] = None,
                          M: Optional[float] = None, n_r: int = 24) -> EndGrowth:
    """Area growth of the graph of a solved field over a funnel end.

    The base distance of a point of the end is its distance to the end
    boundary curve; ``M`` defaults to the largest ``|u|`` on that curve.
    The default grid runs up to the largest base distance in the mesh.
    """
    from .domain import Lift, axis_distance_band, band_to_disk, disk_to_band
    from .limits import end_side_masks
    if not dom.model.is_annulus or dom.model.end_distance is None:
        raise ValueError("a funnel end needs an annulus model with an end distance")
    mesh = u.mesh
    dE = float(dom.model.end_distance)
    side = end_side_masks(mesh, dom)[end]
    cent = mesh.centroids
    base = np.asarray(axis_distance_band(cent[:, 0] + 1j * cent[:, 1]), dtype=float) - dE
    sel = side & (base > 0)
    uc = u.values[mesh.triangles].mean(axis=1)
    g = np.einsum("mki,mi->mk", mesh.gradient_operators(), u.values[mesh.triangles])
    lam = mesh.lam
    W = np.sqrt(1.0 + np.sum(g * g, axis=1) / lam ** 2)
    if M is None:
        phi_up = math.pi - math.asin(1.0 / math.cosh(dE))
        v = dom.chain(end)[0]
        pt = dom.ideal_point(Lift(v.index, 0)).point * 0.99
        phi = phi_up if disk_to_band(pt).imag > math.pi / 2 else math.pi - phi_up
        lo = mesh.meta["rho_cut"]
        rho = np.linspace(lo, lo + mesh.period, 400)
        vals = mesh.interpolate(u.values, band_to_disk(rho + 1j * phi))
        M = float(np.nanmax(np.abs(vals)))
    if r_grid is None:
        top = float(base[sel].max())
        r_grid = np.linspace(top / n_r, top, n_r)
    return end_area_growth(base[sel], uc[sel], W[sel], mesh.hyperbolic_areas()[sel], r_grid, M)
