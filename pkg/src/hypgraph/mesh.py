"""Triangulations of truncated ideal domains.

Plane domains are meshed directly in the Poincare disk.  Annulus domains are
meshed over one period of band coordinates ``w = rho + i*phi`` (where the
deck translation is the shift ``rho -> rho + L``), cut along two
perpendiculars to the axis whose vertices are identified.  Both charts are
conformal, with factor ``2/(1-|z|^2)`` in the disk and ``1/sin(phi)`` in the
band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import triangle as tr
from scipy.optimize import brentq

from . import hypgeom as hg
from .domain import (
    IdealDomain, Lift, TruncationTooSmall, TruncationVector, band_to_disk, disk_to_band,
    UPPER, LOWER,
)

DISK, BAND = "disk", "band"


class MeshingFailed(RuntimeError):
    pass


@dataclass
class Arc:
    """One marked piece of the mesh boundary, as an ordered vertex chain.

    ``kind`` is ``'edge'``, ``'horo'`` or ``'cut'``.  ``params`` holds the
    hyperbolic arclength of each vertex from the start of the chain.  For
    horocycle arcs ``neighbours`` names the edge markers at the two ends.
    """

    name: str
    kind: str
    ident: object
    vertices: List[int]
    params: np.ndarray
    label: Optional[str] = None
    neighbours: Tuple[Optional[str], Optional[str]] = (None, None)

    @property
    def length(self) -> float:
        return float(self.params[-1]) if len(self.params) else 0.0


@dataclass
class Mesh:
    chart: str
    coords: np.ndarray                 # (n, 2) chart coordinates
    triangles: np.ndarray              # (m, 3), counter-clockwise
    boundary_edges: np.ndarray         # (k, 2)
    edge_marker: np.ndarray            # (k,) index into ``arcs``
    arcs: List[Arc]
    dof: np.ndarray                    # (n,) vertex -> degree of freedom
    period: Optional[float] = None
    periodic_pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))
    meta: Dict = field(default_factory=dict)

    # -- basic geometry ------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_dofs(self) -> int:
        return int(self.dof.max()) + 1

    @property
    def complex_coords(self) -> np.ndarray:
        return self.coords[:, 0] + 1j * self.coords[:, 1]

    @property
    def disk(self) -> np.ndarray:
        """Vertices in the Poincare disk."""
        w = self.complex_coords
        return w if self.chart == DISK else band_to_disk(w)

    def disk_from_chart(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return w if self.chart == DISK else band_to_disk(w)

    def conformal_factor(self, pts) -> np.ndarray:
        pts = np.asarray(pts)
        if self.chart == DISK:
            return 2.0 / (1.0 - np.sum(pts ** 2, axis=-1))
        return 1.0 / np.sin(pts[..., 1])

    @property
    def centroids(self) -> np.ndarray:
        return self.coords[self.triangles].mean(axis=1)

    @property
    def areas(self) -> np.ndarray:
        """Euclidean chart areas (positive for counter-clockwise triangles)."""
        p = self.coords[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def lam(self) -> np.ndarray:
        """Conformal factor at triangle barycentres."""
        return self.conformal_factor(self.centroids)

    def hyperbolic_areas(self) -> np.ndarray:
        return self.areas * self.lam ** 2

    def gradient_operators(self) -> np.ndarray:
        """(m, 2, 3) arrays mapping vertex values to the chart gradient."""
        p = self.coords[self.triangles]
        a2 = 2.0 * self.areas
        g = np.empty((len(p), 2, 3))
        for i in range(3):
            e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
            g[:, 0, i] = -e[:, 1] / a2
            g[:, 1, i] = e[:, 0] / a2
        return g

    def arc(self, name: str) -> Arc:
        for a in self.arcs:
            if a.name == name:
                return a
        raise KeyError(name)

    def arc_index(self, name: str) -> int:
        return [a.name for a in self.arcs].index(name)

    def segment_lengths(self, edges: np.ndarray) -> np.ndarray:
        """Midpoint-rule hyperbolic lengths of mesh segments."""
        p, q = self.coords[edges[:, 0]], self.coords[edges[:, 1]]
        return np.linalg.norm(q - p, axis=1) * self.conformal_factor(0.5 * (p + q))

    def boundary_length(self, kinds=("edge", "horo")) -> float:
        keep = np.array([self.arcs[m].kind in kinds for m in self.edge_marker])
        return float(self.segment_lengths(self.boundary_edges[keep]).sum())

    def edge_triangles(self) -> Dict[Tuple[int, int], List[int]]:
        """Undirected mesh edge -> adjacent triangles."""
        out: Dict[Tuple[int, int], List[int]] = {}
        for k, t in enumerate(self.triangles):
            for i in range(3):
                a, b = int(t[i]), int(t[(i + 1) % 3])
                out.setdefault((min(a, b), max(a, b)), []).append(k)
        return out

    def boundary_vertices(self, kinds=("edge", "horo")) -> np.ndarray:
        vs = set()
        for a in self.arcs:
            if a.kind in kinds:
                vs.update(a.vertices)
        return np.array(sorted(vs), dtype=int)

    # -- point location --------------------------------------------------------

    def chart_points(self, z) -> np.ndarray:
        """Chart coordinates of disk points, wrapped into the periodic strip."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.chart == DISK:
            return np.column_stack([z.real, z.imag])
        w = disk_to_band(z)
        lo = self.meta["rho_cut"]
        rho = lo + np.mod(w.real - lo, self.period)
        return np.column_stack([rho, w.imag])

    def locate(self, z) -> np.ndarray:
        """Index of the triangle containing each disk point (-1 outside)."""
        if "_finder" not in self.meta:
            import matplotlib.tri as mtri
            tri = mtri.Triangulation(self.coords[:, 0], self.coords[:, 1], self.triangles)
            self.meta["_finder"] = tri.get_trifinder()
        p = self.chart_points(z)
        return np.asarray(self.meta["_finder"](p[:, 0], p[:, 1]), dtype=int)

    def interpolate(self, values: np.ndarray, z) -> np.ndarray:
        """P1 interpolation of vertex values at disk points (nan outside)."""
        p = self.chart_points(z)
        k = self.locate(z)
        out = np.full(len(p), np.nan)
        ok = k >= 0
        tri = self.triangles[k[ok]]
        c = self.coords[tri]
        d1, d2, d = c[:, 1] - c[:, 0], c[:, 2] - c[:, 0], p[ok] - c[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        b1 = (d[:, 0] * d2[:, 1] - d[:, 1] * d2[:, 0]) / det
        b2 = (d1[:, 0] * d[:, 1] - d1[:, 1] * d[:, 0]) / det
        v = values[tri]
        out[ok] = (1 - b1 - b2) * v[:, 0] + b1 * v[:, 1] + b2 * v[:, 2]
        return out

    def triangle_adjacency(self) -> np.ndarray:
        """Pairs of triangles sharing an edge, periodic seams included."""
        td = self.dof[self.triangles]
        keys = {}
        pairs = []
        for k, t in enumerate(td):
            for i in range(3):
                a, b = int(t[i]), int(t[(i + 1) % 3])
                key = (min(a, b), max(a, b))
                if key in keys:
                    pairs.append((keys[key], k))
                else:
                    keys[key] = k
        return np.array(pairs, dtype=int).reshape(-1, 2)

    def summary(self) -> dict:
        return {"chart": self.chart, "vertices": self.n_vertices,
                "triangles": len(self.triangles), "arcs": [a.name for a in self.arcs],
                "h": self.meta.get("h")}


def edge_lifts(dom: IdealDomain, k_lo: int = -2, k_hi: int = 3) -> List[Tuple[int, hg.Geodesic]]:
    """Geodesics carrying the domain edges (with lifts on the annulus)."""
    out = []
    ks = range(k_lo, k_hi + 1) if dom.model.is_annulus else (0,)
    for e in dom.edges:
        for k in ks:
            a, b = Lift(e.start.vertex, e.start.k + k), Lift(e.end.vertex, e.end.k + k)
            if not dom.model.is_annulus:
                a, b = e.start, e.end
            out.append((e.index, dom.geodesic(a, b)))
    return out


def distance_to_edges(dom: IdealDomain, z) -> np.ndarray:
    """Hyperbolic distance from disk points to the union of the domain edges."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    d = np.full(len(z), np.inf)
    for _, g in edge_lifts(dom):
        d = np.minimum(d, np.abs(g.signed_distance(z)))
    return d


# ---------------------------------------------------------------------------
# truncation used for meshing

def mesh_truncation(dom: IdealDomain, margin: float = 1.0) -> TruncationVector:
    """Per-vertex parameters: the worst pairwise tangency at the vertex plus ``margin``."""
    lifts = dom.lift_window(-1, 1) if dom.model.is_annulus else dom.lift_window(0, 0)
    worst = np.zeros(dom.N)
    for a in lifts:
        if a.k != 0:
            continue
        for b in lifts:
            if b == a or dom.ideal_point(a) == dom.ideal_point(b):
                continue
            worst[a.vertex] = max(worst[a.vertex], -0.5 * dom.chord_constant(a, b))
    return TruncationVector(tuple(float(x) + margin for x in worst))


# ---------------------------------------------------------------------------
# boundary sampling

def _pieces(n_seg_len: float, h: float) -> int:
    return max(1, int(math.ceil(n_seg_len / h - 1e-9)))


def _edge_window(dom: IdealDomain, a: Lift, b: Lift, t: TruncationVector):
    g = dom.geodesic(a, b)
    ha, hb = dom.horodisk(a, t[a.vertex]), dom.horodisk(b, t[b.vertex])
    s0 = hg._horodisk_interval(g, ha)[1]
    s1 = hg._horodisk_interval(g, hb)[0]
    if not s0 < s1:
        raise TruncationTooSmall(f"horodisks at vertices {a.vertex} and {b.vertex} overlap")
    return g, s0, s1


def _sample(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n + 1)


class _Path:
    """Boundary polyline under construction: points plus per-segment arc ids."""

    def __init__(self):
        self.points: List[complex] = []
        self.arc_of_segment: List[int] = []
        self.arcs: List[dict] = []

    def add_arc(self, name, kind, ident, pts, params, label=None, neighbours=(None, None)):
        pts = list(pts)
        if self.points:
            if abs(self.points[-1] - pts[0]) > 1e-9:
                raise MeshingFailed(f"boundary gap before {name}")
            ids = [len(self.points) - 1] + list(range(len(self.points), len(self.points) + len(pts) - 1))
            pts = pts[1:]
        else:
            ids = list(range(len(pts)))
        self.arc_of_segment.extend([len(self.arcs)] * (len(ids) - 1))
        self.arcs.append(dict(name=name, kind=kind, ident=ident, ids=ids,
                              params=np.asarray(params, dtype=float), label=label,
                              neighbours=tuple(neighbours)))
        self.points.extend(pts)


def _plane_loop(dom: IdealDomain, t: TruncationVector, h: float) -> _Path:
    verts = sorted(dom.vertices, key=lambda v: v.position)
    n = len(verts)
    pieces = []
    for i in range(n):
        a, b = Lift(verts[i].index), Lift(verts[(i + 1) % n].index)
        e = dom.edge_between(a, b)
        g, s0, s1 = _edge_window(dom, a, b, t)
        pieces.append((e, g, s0, s1))
    path = _Path()
    for i, (e, g, s0, s1) in enumerate(pieces):
        m = _pieces(s1 - s0, h)
        s = s0 + (s1 - s0) * _sample(m)
        path.add_arc(f"edge:{e.index}", "edge", e.index, g.point(s), s - s0, label=e.label)
        # horocycle arc at the far vertex, towards the next edge
        e2, g2, s20, _ = pieces[(i + 1) % n]
        vid = verts[(i + 1) % n].index
        hd = dom.horodisk(Lift(vid), t[vid])
        x0 = float(hd.horocycle_coordinate(g.point(s1)))
        x1 = float(hd.horocycle_coordinate(g2.point(s20)))
        m = _pieces(abs(x1 - x0), h)
        x = x0 + (x1 - x0) * _sample(m)
        pts = hd.horocycle_point(x)
        pts[0], pts[-1] = g.point(s1), g2.point(s20)
        path.add_arc(f"horo:{vid}", "horo", vid, pts, np.abs(x - x0),
                     neighbours=(f"edge:{e.index}", f"edge:{e2.index}"))
    return path


def _band_chain(dom: IdealDomain, end: str, t: TruncationVector, h: float, rho_c: float):
    """Boundary arcs of one end between the cuts ``rho_c`` and ``rho_c + L``.

    Returns a list of ``(name, kind, ident, band_points, params, label, neighbours)``
    ordered by increasing ``rho``.
    """
    L = dom.model.translation_length
    chain = dom.chain(end)
    n = len(chain)
    lo, hi = rho_c, rho_c + L
    items = []
    g_lo = int(math.floor((lo - chain[0].coord - L) / L)) * n
    g_hi = g_lo + 4 * n
    for gi in range(g_lo, g_hi):
        a, b = dom.lift_at(end, gi), dom.lift_at(end, gi + 1)
        e = dom.edge_between(a, b)
        g, s0, s1 = _edge_window(dom, a, b, t)
        items.append(("edge", e, g, s0, s1, a, b))
    out = []

    def rho_of(g, s):
        return float(np.real(disk_to_band(g.point(s))))

    for j, (_, e, g, s0, s1, a, b) in enumerate(items):
        r0, r1 = rho_of(g, s0), rho_of(g, s1)
        # the edge piece inside the strip, with exact crossings
        sa, sb = s0, s1
        if r1 < lo or r0 > hi:
            pass
        else:
            if r0 < lo:
                sa = brentq(lambda s: rho_of(g, s) - lo, s0, s1, xtol=1e-14)
            if r1 > hi:
                sb = brentq(lambda s: rho_of(g, s) - hi, s0, s1, xtol=1e-14)
            m = _pieces(sb - sa, h)
            s = sa + (sb - sa) * _sample(m)
            w = disk_to_band(g.point(s))
            if sa != s0:
                w[0] = lo + 1j * w[0].imag
            if sb != s1:
                w[-1] = hi + 1j * w[-1].imag
            out.append((f"edge:{e.index}", "edge", e.index, w, s - sa, e.label, (None, None)))
        # horocycle arc at the lift b, if it lies inside the strip
        if j + 1 < len(items):
            _, e2, g2, s20, _, _, _ = items[j + 1]
            hd = dom.horodisk(b, t[b.vertex])
            p0, p1 = g.point(s1), g2.point(s20)
            x0 = float(hd.horocycle_coordinate(p0))
            x1 = float(hd.horocycle_coordinate(p1))
            m = _pieces(abs(x1 - x0), h)
            x = x0 + (x1 - x0) * _sample(m)
            pts = hd.horocycle_point(x)
            pts[0], pts[-1] = p0, p1
            w = disk_to_band(pts)
            rr = np.real(w)
            if rr.max() <= lo or rr.min() >= hi:
                continue
            if rr.min() < lo or rr.max() > hi:
                raise MeshingFailed("a horocycle arc crosses the periodic cut")
            out.append((f"horo:{b.vertex}", "horo", b.vertex, w, np.abs(x - x0), None,
                        (f"edge:{e.index}", f"edge:{e2.index}")))
    return out


def _cut_position(dom: IdealDomain) -> float:
    L = dom.model.translation_length
    rhos = sorted({v.coord % L for v in dom.vertices})
    gaps = [((rhos[(i + 1) % len(rhos)] - rhos[i]) % L or L, rhos[i]) for i in range(len(rhos))]
    gap, start = max(gaps)
    return start + 0.5 * gap


def _cut_samples(phi_lo: float, phi_hi: float, h: float) -> np.ndarray:
    # arclength along a perpendicular to the axis is log tan(phi/2)
    s0, s1 = math.log(math.tan(phi_lo / 2)), math.log(math.tan(phi_hi / 2))
    s = np.linspace(s0, s1, _pieces(s1 - s0, h) + 1)
    phi = 2.0 * np.arctan(np.exp(s))
    phi[0], phi[-1] = phi_lo, phi_hi
    return phi, s - s0


def _annulus_loop(dom: IdealDomain, t: TruncationVector, h: float):
    L = dom.model.translation_length
    rho_c = _cut_position(dom)
    if len(dom.ends) != 2:
        raise MeshingFailed("annulus meshing needs vertices on both ends")
    upper = _band_chain(dom, UPPER, t, h, rho_c)
    lower = _band_chain(dom, LOWER, t, h, rho_c)
    phi_lo = float(np.imag(lower[0][3][0]))
    phi_hi = float(np.imag(upper[0][3][0]))
    phi, cut_s = _cut_samples(phi_lo, phi_hi, h)
    path = _Path()
    for name, kind, ident, w, params, label, nb in lower:
        path.add_arc(name, kind, ident, w, params, label, nb)
    # exact periodic images at the right cut
    path.points[-1] = rho_c + L + 1j * phi_lo
    path.add_arc("cut:right", "cut", "right", rho_c + L + 1j * phi, cut_s)
    path.points[-1] = rho_c + L + 1j * phi_hi
    for name, kind, ident, w, params, label, nb in reversed(upper):
        path.add_arc(name, kind, ident, w[::-1], params[-1] - params[::-1], label, nb[::-1])
    path.points[-1] = rho_c + 1j * phi_hi
    path.add_arc("cut:left", "cut", "left", rho_c + 1j * phi[::-1], cut_s[-1] - cut_s[::-1])
    path.points[0] = path.points[-1] = rho_c + 1j * phi_lo
    return path, rho_c


# ---------------------------------------------------------------------------
# triangulation

def _triangulate(points: np.ndarray, segments: np.ndarray, h: float, factor_fn,
                 max_rounds: int = 12) -> dict:
    target = lambda pts: (math.sqrt(3) / 4.0) * (h / factor_fn(pts)) ** 2
    data = {"vertices": points, "segments": segments}
    out = tr.triangulate(data, "pq30Y")
    for _ in range(max_rounds):
        cent = out["vertices"][out["triangles"]].mean(axis=1)
        p = out["vertices"][out["triangles"]]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        limit = target(cent)
        if np.all(area <= 1.5 * limit):
            break
        out = dict(out)
        out["triangle_max_area"] = limit.reshape(-1, 1)
        out = tr.triangulate(out, "rpq30Ya")
    return out


def mesh_region(dom: IdealDomain, t: Optional[TruncationVector] = None, h: float = 0.1,
                margin: float = 1.0) -> Mesh:
    """Triangulate the truncated domain with hyperbolic mesh size about ``h``."""
    if not h > 0:
        raise ValueError("h must be positive")
    if t is None:
        t = mesh_truncation(dom, margin)
    rho_c = None
    if dom.model.is_annulus:
        path, rho_c = _annulus_loop(dom, t, h)
        chart = BAND
        factor = lambda p: 1.0 / np.sin(p[..., 1])
    else:
        path = _plane_loop(dom, t, h)
        chart = DISK
        factor = lambda p: 2.0 / (1.0 - np.sum(p ** 2, axis=-1))
    pts = np.array(path.points[:-1])
    n = len(pts)
    xy = np.column_stack([pts.real, pts.imag])
    segs = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    seg_arc = np.asarray(path.arc_of_segment)
    if len(seg_arc) != n:
        raise MeshingFailed("inconsistent boundary bookkeeping")
    out = _triangulate(xy, segs, h, factor)
    coords = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=int)
    if not np.allclose(coords[:n], xy, atol=0, rtol=0):
        raise MeshingFailed("boundary vertices moved during triangulation")
    # orient counter-clockwise
    p = coords[tris]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    neg = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tris[neg] = tris[neg][:, ::-1]
    arcs: List[Arc] = []
    names: List[str] = []
    for a in path.arcs:
        vids = [i % n for i in a["ids"]]
        if a["name"] in names:
            # an edge split by the periodic cut: concatenate its two pieces
            first = arcs[names.index(a["name"])]
            first.vertices = first.vertices + vids
            first.params = np.concatenate([first.params, a["params"] + first.length])
            continue
        names.append(a["name"])
        arcs.append(Arc(a["name"], a["kind"], a["ident"], vids, a["params"], a["label"], a["neighbours"]))
    seg_arc = np.array([names.index(path.arcs[k]["name"]) for k in seg_arc], dtype=int)
    dof = np.arange(len(coords))
    pairs = np.zeros((0, 2), dtype=int)
    if chart == BAND:
        left, right = next(a for a in arcs if a.name == "cut:left"), next(a for a in arcs if a.name == "cut:right")
        lv, rv = list(reversed(left.vertices)), right.vertices
        pairs = np.array(list(zip(lv, rv)), dtype=int)
        L = dom.model.translation_length
        shift = coords[pairs[:, 1]] - coords[pairs[:, 0]]
        if np.max(np.abs(shift - [L, 0.0])) > 1e-10:
            raise MeshingFailed("periodic vertices do not match under the translation")
        dof[pairs[:, 1]] = pairs[:, 0]
        _, dof = np.unique(dof, return_inverse=True)
    mesh = Mesh(chart, coords, tris, segs, seg_arc, arcs, dof,
                period=dom.model.translation_length if chart == BAND else None,
                periodic_pairs=pairs,
                meta={"h": h, "t": list(t.t), "rho_cut": rho_c, "margin": margin})
    if np.any(mesh.areas <= 0):
        raise MeshingFailed("degenerate triangle")
    return mesh
