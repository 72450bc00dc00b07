"""Minimal surface equation on truncated domains: P1 area minimisation and flux.

The graph of ``u`` over a surface with conformal metric ``lam^2 |dz|^2`` has
area ``sum_T A_T lam_T sqrt(lam_T^2 + |grad u|^2)`` with chart gradients and
one-point quadrature at barycentres.  This functional is strictly convex in
the free values, and its minimiser is computed by damped Newton.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import IdealDomain
from .mesh import Mesh, mesh_region

log = logging.getLogger(__name__)

INTERPOLATE = "interpolate"


class SolverError(RuntimeError):
    pass


class NewtonDiverged(SolverError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace or []


class NonFiniteBoundaryData(SolverError, ValueError):
    pass


class UnresolvedCurve(SolverError, ValueError):
    pass


@dataclass
class SolveConfig:
    h: float = 0.1
    tol: float = 1e-10            # max-norm of the free gradient
    max_iter: int = 200
    armijo: float = 1e-4
    max_halvings: int = 30
    gd_after: int = 3             # consecutive line-search failures before gradient descent
    t_margin: float = 1.0         # truncation beyond the worst tangency at each vertex
    seed: Optional[int] = None    # random initial guess when set

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class ScalarField:
    mesh: Mesh
    values: np.ndarray                  # per vertex
    fixed: np.ndarray                   # boolean, Dirichlet vertices
    data: np.ndarray                    # imposed values (nan off the boundary)
    energy: float = float("nan")
    residual: float = float("nan")
    iterations: int = 0
    trace: List[dict] = field(default_factory=list)

    def __call__(self, vertex: int) -> float:
        return float(self.values[vertex])

    @property
    def data_bounds(self) -> Tuple[float, float]:
        d = self.data[self.fixed]
        return float(d.min()), float(d.max())


@dataclass
class GradientField:
    """Per-triangle ``X = grad u / W`` in an orthonormal frame of the hyperbolic metric."""

    X: np.ndarray          # (m, 2)
    W: np.ndarray          # (m,)

    @property
    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.X, axis=1)

    @property
    def vertical(self) -> np.ndarray:
        """Vertical component ``-1/W`` of the upward unit normal's opposite."""
        return -1.0 / self.W


@dataclass
class FluxReport:
    flux: Dict[str, float]
    length: Dict[str, float]
    labels: Dict[str, Optional[str]]
    residual: float
    boundary_length: float
    seam_mismatch: float = 0.0

    @property
    def ratio(self) -> Dict[str, float]:
        return {k: self.flux[k] / self.length[k] for k in self.flux if self.length[k] > 0}

    def total(self, kind: str) -> float:
        return sum(v for k, v in self.flux.items() if k.startswith(kind + ":"))

    def by_label(self, label: str) -> float:
        return sum(v for k, v in self.flux.items() if self.labels.get(k) == label)

    def to_dict(self) -> dict:
        return {"flux": dict(self.flux), "length": dict(self.length), "ratio": self.ratio,
                "residual": self.residual, "boundary_length": self.boundary_length,
                "seam_mismatch": self.seam_mismatch}


# ---------------------------------------------------------------------------
# boundary data

BoundaryData = Mapping[str, Union[float, str]]


def boundary_values(mesh: Mesh, data: BoundaryData) -> Tuple[np.ndarray, np.ndarray]:
    """Dirichlet values per vertex from per-arc data.

    ``data`` maps arc names to numbers or to functions of the disk position;
    a horocycle arc mapped to
    ``'interpolate'`` (the default for unlisted horocycle arcs) receives values
    linear in arclength between its two neighbouring edge values.
    """
    vals = np.full(mesh.n_vertices, np.nan)
    fixed = np.zeros(mesh.n_vertices, dtype=bool)
    for a in mesh.arcs:
        if a.kind != "edge":
            continue
        if a.name not in data:
            raise KeyError(f"no boundary data for {a.name}")
        vals[a.vertices] = _arc_values(mesh, a, data[a.name])
        fixed[a.vertices] = True
    for a in mesh.arcs:
        if a.kind != "horo":
            continue
        rule = data.get(a.name, INTERPOLATE)
        if rule == INTERPOLATE:
            v0, v1 = float(data[a.neighbours[0]]), float(data[a.neighbours[1]])
            s = a.params / a.length if a.length > 0 else np.zeros(len(a.params))
            vals[a.vertices] = v0 + (v1 - v0) * s
        else:
            vals[a.vertices] = _arc_values(mesh, a, rule)
        fixed[a.vertices] = True
    return vals, fixed


def _arc_values(mesh: Mesh, arc, rule) -> np.ndarray:
    if callable(rule):
        v = np.asarray(rule(mesh.disk[arc.vertices]), dtype=float)
    else:
        v = np.full(len(arc.vertices), float(rule))
    if not np.all(np.isfinite(v)):
        raise NonFiniteBoundaryData(f"{arc.name}: non-finite values")
    return v


def js_boundary_data(mesh: Mesh, n: float) -> Dict[str, float]:
    """``+n`` on a-edges and ``-n`` on b-edges; horocycle arcs interpolate."""
    if not math.isfinite(n):
        raise NonFiniteBoundaryData(f"n={n}")
    return {a.name: (n if a.label == "a" else -n) for a in mesh.arcs if a.kind == "edge"}


# ---------------------------------------------------------------------------
# discrete area functional

class AreaFunctional:
    """Energy, gradient and Hessian on the degrees of freedom of a mesh."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.tri_dofs = mesh.dof[mesh.triangles]
        self.G = mesh.gradient_operators()
        self.A = mesh.areas
        self.lam = mesh.lam
        self.ndof = mesh.n_dofs
        rows = np.repeat(self.tri_dofs, 3, axis=1).ravel()
        cols = np.tile(self.tri_dofs, (1, 3)).ravel()
        self._rc = (rows, cols)

    def grads(self, u_dof: np.ndarray) -> np.ndarray:
        return np.einsum("mij,mj->mi", self.G, u_dof[self.tri_dofs])

    def energy(self, u_dof: np.ndarray) -> float:
        g = self.grads(u_dof)
        s = np.sqrt(self.lam ** 2 + np.sum(g * g, axis=1))
        return float(np.sum(self.A * self.lam * s))

    def gradient(self, u_dof: np.ndarray) -> np.ndarray:
        g = self.grads(u_dof)
        s = np.sqrt(self.lam ** 2 + np.sum(g * g, axis=1))
        flux = (self.A * self.lam / s)[:, None] * g
        local = np.einsum("mij,mi->mj", self.G, flux)
        return np.bincount(self.tri_dofs.ravel(), weights=local.ravel(), minlength=self.ndof)

    def hessian(self, u_dof: np.ndarray) -> sp.csr_matrix:
        g = self.grads(u_dof)
        s = np.sqrt(self.lam ** 2 + np.sum(g * g, axis=1))
        w = self.A * self.lam
        M = (w / s)[:, None, None] * np.eye(2)[None] - (w / s ** 3)[:, None, None] * g[:, :, None] * g[:, None, :]
        local = np.einsum("mki,mkl,mlj->mij", self.G, M, self.G)
        return sp.csr_matrix((local.ravel(), self._rc), shape=(self.ndof, self.ndof))


def _to_dofs(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    out = np.zeros(mesh.n_dofs)
    out[mesh.dof] = values
    return out


def solve_mse(mesh: Mesh, boundary_data: BoundaryData, config: Optional[SolveConfig] = None,
              initial: Optional[np.ndarray] = None) -> ScalarField:
    """Discrete minimiser of the graph area with the given Dirichlet data."""
    cfg = config or SolveConfig(h=mesh.meta.get("h", 0.1))
    vals, fixed = boundary_values(mesh, boundary_data)
    F = AreaFunctional(mesh)
    fixed_dof = np.zeros(mesh.n_dofs, dtype=bool)
    fixed_dof[mesh.dof[fixed]] = True
    free = ~fixed_dof
    u = np.zeros(mesh.n_dofs)
    u[mesh.dof[fixed]] = vals[fixed]
    lo, hi = float(np.min(vals[fixed])), float(np.max(vals[fixed]))
    if initial is not None:
        u[free] = _to_dofs(mesh, np.asarray(initial, dtype=float))[free]
    elif cfg.seed is not None:
        rng = np.random.default_rng(cfg.seed)
        u[free] = rng.uniform(lo, hi, size=int(free.sum()))
    E = F.energy(u)
    trace = [{"iter": 0, "energy": E, "step": 0.0, "mode": "init"}]
    failures = 0
    res = math.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        grad = F.gradient(u)
        res = float(np.max(np.abs(grad[free]))) if free.any() else 0.0
        if res <= cfg.tol:
            break
        if failures < cfg.gd_after:
            H = F.hessian(u)[free][:, free]
            d = np.zeros_like(u)
            d[free] = spla.spsolve(H.tocsc(), -grad[free])
            mode = "newton"
        else:
            d = np.zeros_like(u)
            d[free] = -grad[free]
            mode = "gradient"
        slope = float(grad @ d)
        if mode == "newton" and abs(slope) <= 1e-13 * max(1.0, abs(E)):
            # the predicted decrease is below round-off in the energy
            trial = u + d
            res_t = float(np.max(np.abs(F.gradient(trial)[free])))
            if F.energy(trial) <= E + 1e-12 * max(1.0, abs(E)) and res_t <= res:
                u, res = trial, res_t
            trace.append({"iter": it, "energy": E, "step": 1.0, "mode": "roundoff"})
            break
        step, accepted = 1.0, False
        for _ in range(cfg.max_halvings + 1):
            trial = u + step * d
            Et = F.energy(trial)
            if Et <= E + cfg.armijo * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            failures += 1
            trace.append({"iter": it, "energy": E, "step": 0.0, "mode": mode + "-failed"})
            if mode == "gradient":
                raise NewtonDiverged("line search failed on a gradient step", trace)
            continue
        failures = 0 if mode == "newton" else failures
        assert Et <= E + 1e-12 * max(1.0, abs(E)), "area functional increased"
        u, E = trial, Et
        trace.append({"iter": it, "energy": E, "step": step, "mode": mode})
    else:
        raise NewtonDiverged(f"no convergence in {cfg.max_iter} iterations (residual {res:.3e})", trace)
    values = u[mesh.dof]
    values[fixed] = vals[fixed]
    return ScalarField(mesh, values, fixed, vals, F.energy(u), res, it, trace)


# ---------------------------------------------------------------------------
# derived quantities

def gradient_field(u: ScalarField) -> GradientField:
    mesh = u.mesh
    G = mesh.gradient_operators()
    g = np.einsum("mij,mj->mi", G, u.values[mesh.triangles])
    lam = mesh.lam
    s = np.sqrt(lam ** 2 + np.sum(g * g, axis=1))
    return GradientField(g / s[:, None], s / lam)


def _edge_flux(mesh: Mesh, X: np.ndarray, edges: np.ndarray, tris: np.ndarray,
               normals: np.ndarray) -> np.ndarray:
    return np.sum(X[tris] * normals, axis=1) * mesh.segment_lengths(edges)


def _boundary_geometry(mesh: Mesh):
    key = "_bgeom"
    if key in mesh.meta:
        return mesh.meta[key]
    et = mesh.edge_triangles()
    tris, normals = [], []
    for a, b in mesh.boundary_edges:
        k = et[(min(a, b), max(a, b))][0]
        pa, pb = mesh.coords[a], mesh.coords[b]
        d = pb - pa
        nrm = np.array([d[1], -d[0]]) / np.linalg.norm(d)
        c = mesh.coords[mesh.triangles[k]].mean(axis=0)
        if np.dot(c - pa, nrm) > 0:
            nrm = -nrm
        tris.append(k)
        normals.append(nrm)
    mesh.meta[key] = (np.array(tris), np.array(normals))
    return mesh.meta[key]


def flux(u: ScalarField, curve, X: Optional[GradientField] = None) -> float:
    """Flux of ``X_u`` across a marked boundary arc (outward normal) or an
    interior vertex path (normal to the right of the direction of travel)."""
    X = X or gradient_field(u)
    mesh = u.mesh
    if isinstance(curve, str):
        tris, normals = _boundary_geometry(mesh)
        sel = mesh.edge_marker == mesh.arc_index(curve)
        return float(np.sum(_edge_flux(mesh, X.X, mesh.boundary_edges[sel], tris[sel], normals[sel])))
    path = [int(v) for v in curve]
    et = mesh.edge_triangles()
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        key = (min(a, b), max(a, b))
        if key not in et:
            raise UnresolvedCurve(f"vertices {a} and {b} are not joined by a mesh edge")
        d = mesh.coords[b] - mesh.coords[a]
        nrm = np.array([d[1], -d[0]]) / np.linalg.norm(d)
        xs = X.X[et[key]].mean(axis=0)
        total += float(np.dot(xs, nrm)) * float(mesh.segment_lengths(np.array([[a, b]]))[0])
    return total


def flux_report(u: ScalarField, X: Optional[GradientField] = None) -> FluxReport:
    X = X or gradient_field(u)
    mesh = u.mesh
    tris, normals = _boundary_geometry(mesh)
    per_edge = _edge_flux(mesh, X.X, mesh.boundary_edges, tris, normals)
    seg_len = mesh.segment_lengths(mesh.boundary_edges)
    fl, ln, lab = {}, {}, {}
    for k, a in enumerate(mesh.arcs):
        sel = mesh.edge_marker == k
        fl[a.name] = float(per_edge[sel].sum())
        ln[a.name] = float(seg_len[sel].sum())
        lab[a.name] = a.label
    # the periodic seam is interior to the quotient, so the closed loop is
    # made of the edge and horocycle arcs only
    loop = sum(v for k, v in fl.items() if not k.startswith("cut:"))
    seam = fl.get("cut:left", 0.0) + fl.get("cut:right", 0.0)
    return FluxReport(fl, ln, lab, float(abs(loop)), mesh.boundary_length(), float(seam))


def max_principle_violation(u: ScalarField) -> float:
    lo, hi = u.data_bounds
    return float(max(0.0, lo - u.values.min(), u.values.max() - hi))


# ---------------------------------------------------------------------------

@dataclass
class JSSolution:
    u: ScalarField
    X: GradientField
    report: FluxReport
    n: float


def js_solve(domain: IdealDomain, n: float, config: Optional[SolveConfig] = None,
             mesh: Optional[Mesh] = None, initial: Optional[np.ndarray] = None):
    """Solve with ``+n`` on a-edges, ``-n`` on b-edges and interpolation on the horocycle arcs."""
    cfg = config or SolveConfig()
    mesh = mesh or mesh_region(domain, h=cfg.h, margin=cfg.t_margin)
    u = solve_mse(mesh, js_boundary_data(mesh, n), cfg, initial=initial)
    X = gradient_field(u)
    return u, X, flux_report(u, X)
