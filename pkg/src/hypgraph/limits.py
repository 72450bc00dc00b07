"""Sequences of solutions with growing boundary data and their limits.

The normalised gradients ``X_n`` of the solutions with data ``+-n`` are
compared on a common mesh.  Where ``|X|`` approaches one along a whole
geodesic joining vertices, that geodesic is reported as a divergence line;
the lines cut the domain into components joined by oriented arrows.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import hypgeom as hg
from .domain import IdealDomain, Lift, disk_to_band
from .mesh import Mesh, distance_to_edges, mesh_region, mesh_truncation
from .solver import GradientField, ScalarField, SolveConfig, js_solve

log = logging.getLogger(__name__)


class AmbiguousFit(RuntimeError):
    def __init__(self, msg, clusters=None):
        super().__init__(msg)
        self.clusters = clusters or []


class StepRejected(RuntimeError):
    def __init__(self, msg, closeness=None):
        super().__init__(msg)
        self.closeness = closeness


@dataclass
class LimitField:
    domain: IdealDomain
    mesh: Mesh
    n_list: List[float]
    X: np.ndarray                 # (m, 2) from the largest n
    norms: np.ndarray             # (len(n_list), m)
    cauchy: np.ndarray            # (m,) |X_last - X_previous|
    fields: List[ScalarField] = field(default_factory=list)

    @property
    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.X, axis=1)


def run_sequence(domain: IdealDomain, n_list: Sequence[float], config: Optional[SolveConfig] = None,
                 mesh: Optional[Mesh] = None):
    """Solve the ``+-n`` problems on one mesh; warm-start each from the previous one."""
    n_list = [float(n) for n in n_list]
    if any(b < a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be nondecreasing")
    cfg = config or SolveConfig()
    mesh = mesh or mesh_region(domain, h=cfg.h, margin=cfg.t_margin)
    out: List[Tuple[ScalarField, GradientField]] = []
    prev = None
    for n in n_list:
        init = None
        if prev is not None and prev[1] > 0:
            init = prev[0].values * (n / prev[1])
        u, X, _ = js_solve(domain, n, cfg, mesh=mesh, initial=init)
        out.append((u, X))
        prev = (u, n)
    Xs = [x.X for _, x in out]
    cauchy = np.linalg.norm(Xs[-1] - Xs[-2], axis=1) if len(Xs) > 1 else np.zeros(len(mesh.triangles))
    limit = LimitField(domain, mesh, n_list, Xs[-1].copy(), np.array([x.norm for _, x in out]),
                       cauchy, [u for u, _ in out])
    return out, limit


# ---------------------------------------------------------------------------
# candidate geodesics

@dataclass
class Candidate:
    geodesic: hg.Geodesic
    ends: Optional[Tuple[Lift, Lift]]       # None for the core geodesic
    kind: str                               # 'chord' or 'core'

    @property
    def vertices(self) -> Tuple[int, ...]:
        return () if self.ends is None else tuple(sorted((self.ends[0].vertex, self.ends[1].vertex)))

    def lifts(self, dom: IdealDomain, k_lo: int = -2, k_hi: int = 3) -> List[hg.Geodesic]:
        if self.ends is None or not dom.model.is_annulus:
            return [self.geodesic]
        a, b = self.ends
        return [dom.geodesic(Lift(a.vertex, a.k + k), Lift(b.vertex, b.k + k)) for k in range(k_lo, k_hi + 1)]


def candidate_lines(dom: IdealDomain) -> List[Candidate]:
    """Geodesics joining two vertices that are not edges, plus the core on the annulus."""
    out, seen = [], set()
    if dom.model.is_annulus:
        firsts = [Lift(v.index, 0) for v in dom.vertices]
        seconds = dom.lift_window(-1, 1)
    else:
        firsts = seconds = dom.lift_window(0, 0)
    for a in firsts:
        for b in seconds:
            if (b.vertex, b.k) == (a.vertex, a.k) or dom.ideal_point(a) == dom.ideal_point(b):
                continue
            key = min((a.vertex, b.vertex, b.k - a.k), (b.vertex, a.vertex, a.k - b.k))
            if key in seen:
                continue
            seen.add(key)
            if dom.edge_between(a, b) is not None:
                continue
            out.append(Candidate(dom.geodesic(a, b), (a, b), "chord"))
    if dom.model.is_annulus:
        out.append(Candidate(dom.model.axis, None, "core"))
    return out


def _trace(limit: LimitField, cand: Candidate, spacing: float):
    """Sample points of a candidate inside the mesh: (points, triangles, unit tangents)."""
    mesh, dom = limit.mesh, limit.domain
    g = cand.geodesic
    if cand.kind == "core":
        lo = mesh.meta["rho_cut"]
        rho = np.arange(lo, lo + mesh.period, spacing)
        s = rho
    else:
        t = mesh_truncation(dom, mesh.meta.get("margin", 1.0))
        a, b = cand.ends
        s0 = hg._horodisk_interval(g, dom.horodisk(a, t[a.vertex]))[1]
        s1 = hg._horodisk_interval(g, dom.horodisk(b, t[b.vertex]))[0]
        if not s1 > s0:
            return np.zeros(0, complex), np.zeros(0, int), np.zeros(0, complex)
        s = np.linspace(s0, s1, max(3, int((s1 - s0) / spacing) + 1))
    z = g.point(s)
    k = mesh.locate(z)
    # chart tangent by differencing the geodesic
    ds = 1e-6
    p0, p1 = mesh_chart(mesh, g.point(s - ds)), mesh_chart(mesh, g.point(s + ds))
    tang = p1 - p0
    tang = tang / np.abs(tang)
    ok = k >= 0
    return z[ok], k[ok], tang[ok]


def mesh_chart(mesh: Mesh, z) -> np.ndarray:
    """Unwrapped chart coordinates as complex numbers."""
    z = np.asarray(z, dtype=complex)
    return z if mesh.chart == "disk" else disk_to_band(z)


@dataclass
class DetectedLine:
    candidate: Candidate
    side: str                   # 'left' or 'right' of the oriented geodesic
    support: float
    angle: float                # median angle (degrees) between X and the normal
    samples: int

    @property
    def vertices(self) -> Tuple[int, ...]:
        return self.candidate.vertices

    def to_dict(self) -> dict:
        g = self.candidate.geodesic
        return {"kind": self.candidate.kind, "vertices": list(self.vertices),
                "endpoints": [g.start.theta, g.end.theta], "side": self.side,
                "support": self.support, "angle_deg": self.angle}


@dataclass
class DivergenceReport:
    lines: List[DetectedLine]
    components: List[np.ndarray]          # triangle index arrays
    unclassified: np.ndarray              # near-unit triangles not explained
    eps: float
    scores: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "lines": [l.to_dict() for l in self.lines],
                "components": [int(len(c)) for c in self.components],
                "unclassified": int(len(self.unclassified))}


def score_candidate(limit: LimitField, cand: Candidate, eps: float, layer: float,
                    spacing: Optional[float] = None) -> dict:
    mesh = limit.mesh
    spacing = spacing or 0.5 * mesh.meta.get("h", 0.1)
    z, k, tang = _trace(limit, cand, spacing)
    if len(z):
        keep = distance_to_edges(limit.domain, z) >= layer
        z, k, tang = z[keep], k[keep], tang[keep]
    if len(z) < 5:
        return {"candidate": cand, "support": 0.0, "angle": 90.0, "side": None, "samples": len(z)}
    X = limit.X[k, 0] + 1j * limit.X[k, 1]
    nrm = np.abs(X)
    unit = nrm >= 1.0 - eps
    support = float(np.mean(unit))
    if not unit.any():
        return {"candidate": cand, "support": support, "angle": 90.0, "side": None, "samples": len(z)}
    along = np.abs(np.real(X[unit] * np.conj(tang[unit]))) / nrm[unit]
    angle = float(np.degrees(np.median(np.arcsin(np.clip(along, 0.0, 1.0)))))
    left = np.real(X[unit] * np.conj(1j * tang[unit]))
    side = "left" if np.mean(left) > 0 else "right"
    return {"candidate": cand, "support": support, "angle": angle, "side": side, "samples": len(z)}


def _line_distance(dom: IdealDomain, cand: Candidate, z: np.ndarray) -> np.ndarray:
    d = np.full(len(z), np.inf)
    for g in cand.lifts(dom):
        d = np.minimum(d, np.abs(g.signed_distance(z)))
    return d


def detect_divergence_lines(limit: LimitField, eps: float = 0.05, support_min: float = 0.8,
                            angle_max: float = 10.0, layer: float = 0.5,
                            min_cluster_area: Optional[float] = None) -> DivergenceReport:
    """Fit divergence lines to the near-unit set of the limit field.

    Triangles within ``layer`` of the domain edges are boundary layers and
    are ignored.  A near-unit cluster away from every accepted line whose
    hyperbolic area exceeds ``min_cluster_area`` raises :class:`AmbiguousFit`.
    """
    mesh, dom = limit.mesh, limit.domain
    h = mesh.meta.get("h", 0.1)
    scores = [score_candidate(limit, c, eps, layer) for c in candidate_lines(dom)]
    lines = [DetectedLine(s["candidate"], s["side"], s["support"], s["angle"], s["samples"])
             for s in scores if s["support"] >= support_min and s["angle"] <= angle_max]
    # near-unit clusters away from the boundary layers
    cent = _centroids_disk(mesh)
    interior = distance_to_edges(dom, cent) >= layer
    unit = (limit.norm >= 1.0 - eps) & interior
    near = np.zeros(len(cent), dtype=bool)
    width = max(3.0 * h, 0.3)
    for l in lines:
        near |= _line_distance(dom, l.candidate, cent) <= width
    adj = mesh.triangle_adjacency()
    clusters = _clusters(unit, adj)
    area = mesh.hyperbolic_areas()
    min_area = min_cluster_area if min_cluster_area is not None else 0.5
    unexplained = []
    for c in clusters:
        if np.mean(near[c]) >= 0.5:
            continue
        unexplained.append(c)
    big = [c for c in unexplained if area[c].sum() >= min_area]
    if big:
        raise AmbiguousFit(f"{len(big)} near-unit cluster(s) support no candidate geodesic",
                           [{"triangles": int(len(c)), "area": float(area[c].sum())} for c in big])
    rest = np.concatenate(unexplained) if unexplained else np.zeros(0, int)
    comps = split_components(mesh, dom, [l.candidate for l in lines], adj)
    rep = DivergenceReport(lines, comps, rest, eps, [
        {"vertices": list(s["candidate"].vertices), "kind": s["candidate"].kind,
         "support": s["support"], "angle": s["angle"], "samples": s["samples"]} for s in scores])
    return rep


def _centroids_disk(mesh: Mesh) -> np.ndarray:
    c = mesh.centroids
    w = c[:, 0] + 1j * c[:, 1]
    return w if mesh.chart == "disk" else mesh.disk_from_chart(w)


def _clusters(mask: np.ndarray, adj: np.ndarray) -> List[np.ndarray]:
    idx = np.nonzero(mask)[0]
    if not len(idx):
        return []
    pos = -np.ones(len(mask), dtype=int)
    pos[idx] = np.arange(len(idx))
    sel = mask[adj[:, 0]] & mask[adj[:, 1]]
    e = adj[sel]
    g = coo_matrix((np.ones(len(e)), (pos[e[:, 0]], pos[e[:, 1]])), shape=(len(idx), len(idx)))
    n, lab = connected_components(g, directed=False)
    return [idx[lab == j] for j in range(n)]


def split_components(mesh: Mesh, dom: IdealDomain, cands: Sequence[Candidate],
                     adj: Optional[np.ndarray] = None) -> List[np.ndarray]:
    """Connected components of the triangles after cutting along the given geodesics."""
    adj = mesh.triangle_adjacency() if adj is None else adj
    cent = _centroids_disk(mesh)
    cut = np.zeros(len(adj), dtype=bool)
    for c in cands:
        for g in c.lifts(dom):
            sd = g.signed_distance(cent)
            cut |= np.sign(sd[adj[:, 0]]) != np.sign(sd[adj[:, 1]])
    e = adj[~cut]
    m = len(cent)
    g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(m, m))
    n, lab = connected_components(g, directed=False)
    comps = [np.nonzero(lab == j)[0] for j in range(n)]
    area = mesh.hyperbolic_areas()
    total = area.sum()
    # slivers between a line and a horocycle are not components of the limit
    return sorted([c for c in comps if area[c].sum() >= 1e-3 * total], key=lambda c: -area[c].sum())


# ---------------------------------------------------------------------------
# oriented component graph

@dataclass
class ComponentGraph:
    graph: nx.DiGraph
    components: List[np.ndarray]
    reference: List[complex]                 # disk point per node
    drift: Dict[int, List[float]]            # node -> u_n(reference) per n
    n_list: List[float]

    @property
    def acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.graph)

    def arrows(self) -> List[Tuple[int, int]]:
        return list(self.graph.edges())

    def drift_increasing(self, tail: int = 3) -> Dict[Tuple[int, int], bool]:
        """Whether ``u_n(head) - u_n(tail)`` increases over the last ``tail`` values of n."""
        out = {}
        for a, b in self.graph.edges():
            d = np.array(self.drift[b]) - np.array(self.drift[a])
            d = d[-tail:]
            out[(a, b)] = bool(np.all(np.diff(d) > 0))
        return out

    def node_of(self, mesh: Mesh, z: complex) -> Optional[int]:
        k = int(mesh.locate(np.array([z]))[0])
        for j, c in enumerate(self.components):
            if k in set(c.tolist()):
                return j
        return None

    def to_dict(self) -> dict:
        return {"nodes": [{"id": j, "triangles": int(len(c)),
                           "reference": [float(self.reference[j].real), float(self.reference[j].imag)],
                           "drift": self.drift[j]} for j, c in enumerate(self.components)],
                "arrows": [{"from": a, "to": b, "line": self.graph.edges[a, b].get("line")}
                           for a, b in self.graph.edges()],
                "acyclic": self.acyclic}


def _reference_point(mesh: Mesh, dom: IdealDomain, comp: np.ndarray, cands, cent) -> int:
    d = distance_to_edges(dom, cent[comp])
    for c in cands:
        d = np.minimum(d, _line_distance(dom, c, cent[comp]))
    return int(comp[int(np.argmax(d))])


def offset_point(g: hg.Geodesic, s: float, d: float) -> complex:
    """Point at arclength ``s`` along ``g`` and signed distance ``d`` to its left."""
    w = hg.Isometry.real_translation(s)(1j * math.tanh(d / 2.0))
    return complex(g.frame(w))


def component_graph(report: DivergenceReport, limit: LimitField) -> ComponentGraph:
    mesh, dom = limit.mesh, limit.domain
    cent = _centroids_disk(mesh)
    cands = [l.candidate for l in report.lines]
    G = nx.DiGraph()
    refs, drift = [], {}
    for j, comp in enumerate(report.components):
        G.add_node(j, triangles=int(len(comp)))
        k = _reference_point(mesh, dom, comp, cands, cent)
        refs.append(complex(cent[k]))
        drift[j] = [float(np.mean(u.values[mesh.triangles[k]])) for u in limit.fields]
    owner = -np.ones(len(cent), dtype=int)
    for j, comp in enumerate(report.components):
        owner[comp] = j
    for i, line in enumerate(report.lines):
        z, k, _ = _trace(limit, line.candidate, 0.5 * mesh.meta.get("h", 0.1))
        g = line.candidate.geodesic
        ss = np.asarray(g.foot(z), dtype=float) if len(z) else np.array([0.0])
        votes: Dict[Tuple[int, int], int] = {}
        for s in ss[:: max(1, len(ss) // 15)]:
            sides = []
            for d in (0.3, -0.3):
                kk = int(mesh.locate(np.array([offset_point(g, float(s), d)]))[0])
                sides.append(owner[kk] if kk >= 0 else -1)
            if min(sides) >= 0 and sides[0] != sides[1]:
                votes[tuple(sides)] = votes.get(tuple(sides), 0) + 1
        if not votes:
            continue
        left, right = max(votes, key=votes.get)
        head, tail = (left, right) if line.side == "left" else (right, left)
        G.add_edge(int(tail), int(head), line=i, vertices=list(line.vertices))
    return ComponentGraph(G, report.components, refs, drift, limit.n_list)


# ---------------------------------------------------------------------------
# extension experiment

def field_gradient_at(mesh: Mesh, values: np.ndarray, z) -> np.ndarray:
    """Chart gradient of a P1 field at disk points (nan outside the mesh)."""
    k = mesh.locate(z)
    out = np.full((len(k), 2), np.nan)
    ok = k >= 0
    G = mesh.gradient_operators()[k[ok]]
    out[ok] = np.einsum("mki,mi->mk", G, values[mesh.triangles[k[ok]]])
    return out


def inner_points(mesh: Mesh, dom: IdealDomain, distance: float = 1.0) -> np.ndarray:
    """Mesh vertices (disk) at distance at least ``distance`` from the edges."""
    z = mesh.disk
    return z[distance_to_edges(dom, z) >= distance]


@dataclass
class NormalizedField:
    """A solution shifted so that it vanishes at a reference point."""

    mesh: Mesh
    values: np.ndarray
    point: complex

    @classmethod
    def of(cls, u: ScalarField, point: complex = 0j) -> "NormalizedField":
        c = float(u.mesh.interpolate(u.values, np.array([point]))[0])
        if not np.isfinite(c):
            raise ValueError(f"reference point {point} lies outside the mesh")
        return cls(u.mesh, u.values - c, complex(point))

    def compare(self, other: "NormalizedField", K: np.ndarray) -> Tuple[float, float]:
        """Sup differences of values and of hyperbolic gradient norms over ``K``."""
        a = self.mesh.interpolate(self.values, K)
        b = other.mesh.interpolate(other.values, K)
        ga = field_gradient_at(self.mesh, self.values, K)
        gb = field_gradient_at(other.mesh, other.values, K)
        lam = self.mesh.conformal_factor(self.mesh.chart_points(K))
        dv = np.abs(a - b)
        dg = np.linalg.norm(ga - gb, axis=1) / lam
        if np.all(np.isnan(dv)):
            raise ValueError("the compact set misses both meshes")
        return float(np.nanmax(dv)), float(np.nanmax(dg))


@dataclass
class ExtensionRow:
    t: float
    sup: float
    grad_sup: float
    lines: Optional[List[dict]] = None

    def to_dict(self) -> dict:
        d = {"t": self.t, "sup": self.sup, "grad_sup": self.grad_sup}
        if self.lines is not None:
            d["lines"] = self.lines
        return d


@dataclass
class ExtensionTable:
    n: float
    point: complex
    compact_size: int
    rows: List[ExtensionRow]

    @property
    def sups(self) -> List[float]:
        return [r.sup for r in self.rows if r.lines is None]

    def monotone(self) -> bool:
        s = self.sups
        return all(b < a for a, b in zip(s, s[1:]))

    def to_dict(self) -> dict:
        return {"n": self.n, "point": [self.point.real, self.point.imag],
                "compact_size": self.compact_size, "rows": [r.to_dict() for r in self.rows]}


def extension_experiment(domain0: IdealDomain, edge_pair: Tuple[int, int], t_list: Sequence[float],
                         K: Optional[np.ndarray] = None, config: Optional[SolveConfig] = None,
                         n: float = 32.0, point: complex = 0j,
                         line_n_list: Sequence[float] = (1, 2, 4, 8)) -> ExtensionTable:
    """Compare normalised ``+-n`` solutions on ``domain0`` and on its extensions.

    ``K`` defaults to the mesh vertices of ``domain0`` at distance one or more
    from its edges.  A ``t = 0`` entry runs divergence detection on the
    degenerate extension instead of a comparison.
    """
    from .domain import extend_domain
    cfg = config or SolveConfig()
    m0 = mesh_region(domain0, h=cfg.h, margin=cfg.t_margin)
    u0, _, _ = js_solve(domain0, n, cfg, mesh=m0)
    ref = NormalizedField.of(u0, point)
    K = inner_points(m0, domain0) if K is None else np.atleast_1d(np.asarray(K, dtype=complex))
    if not len(K):
        raise ValueError("the compact set is empty")
    rows = []
    for t in t_list:
        dt = extend_domain(domain0, edge_pair, float(t))
        if t == 0:
            _, limit = run_sequence(dt, line_n_list, cfg)
            rep = detect_divergence_lines(limit)
            rows.append(ExtensionRow(0.0, math.nan, math.nan, [l.to_dict() for l in rep.lines]))
            continue
        ut, _, _ = js_solve(dt, n, cfg)
        sup, gsup = ref.compare(NormalizedField.of(ut, point), K)
        log.info("extension t=%g: sup %.4g grad %.4g", t, sup, gsup)
        rows.append(ExtensionRow(float(t), sup, gsup))
    return ExtensionTable(float(n), complex(point), int(len(K)), rows)


# ---------------------------------------------------------------------------
# finitely many steps of the exhaustion

def end_edges(dom: IdealDomain, end: str):
    es = [e for e in dom.edges if dom.vertices[e.start.vertex].end == end]
    return sorted(es, key=lambda e: dom.vertices[e.start.vertex].position)


def consecutive_pairs(dom: IdealDomain, end: str) -> List[Tuple[int, int]]:
    """Partition the edges of ``end`` into consecutive (b, a) pairs."""
    from .domain import BadLabels
    es = end_edges(dom, end)
    n = len(es)
    start = next((i for i in range(n) if es[i].label == "b" and es[(i + 1) % n].label == "a"), None)
    alternating = all(es[i].label != es[(i + 1) % n].label for i in range(n))
    if start is None or n % 2 or not alternating:
        raise BadLabels(f"edges of end {end!r} cannot be paired")
    return [(es[(start + 2 * j) % n].index, es[(start + 2 * j + 1) % n].index) for j in range(n // 2)]


def _edge_by_start(dom: IdealDomain, end: str, coord: float) -> int:
    L = dom.model.translation_length or 0.0
    for e in end_edges(dom, end):
        c = dom.vertices[e.start.vertex].coord
        gap = abs((c - coord + L / 2) % L - L / 2) if L else abs(hg.angle_gap(c, coord))
        if gap < 1e-9:
            return e.index
    raise KeyError(f"no edge starts at {coord}")


def extend_all_pairs(dom: IdealDomain, t: float) -> IdealDomain:
    """Glue rhombi beyond every consecutive (b, a) pair of every end."""
    from .domain import extend_domain
    for end in dom.ends:
        starts = [(dom.vertices[dom.edges[i].start.vertex].coord, dom.vertices[dom.edges[j].start.vertex].coord)
                  for i, j in consecutive_pairs(dom, end)]
        for c1, c2 in starts:
            dom = extend_domain(dom, (_edge_by_start(dom, end, c1), _edge_by_start(dom, end, c2)), t)
    return dom


def signed_edge_distance(dom: IdealDomain, z, reference: complex = 0j) -> np.ndarray:
    """Distance to the edges, negated for points beyond some edge (seen from ``reference``)."""
    from .mesh import edge_lifts
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    d = np.full(len(z), np.inf)
    inside = np.ones(len(z), dtype=bool)
    for _, g in edge_lifts(dom):
        s = np.asarray(g.signed_distance(z), dtype=float)
        s0 = float(g.signed_distance(reference))
        inside &= np.sign(s) == np.sign(s0)
        d = np.minimum(d, np.abs(s))
    return np.where(inside, d, -d)


def boundary_distance(dom: IdealDomain, point: complex = 0j) -> float:
    return float(signed_edge_distance(dom, np.array([point]), point)[0])


def end_boundary_distance(dom: IdealDomain) -> Dict[str, float]:
    """Distance from each end boundary curve to the nearest edge of that end."""
    from .domain import edge_axis_distance
    dE = dom.model.end_distance or 0.0
    return {end: min(edge_axis_distance(dom, e) for e in end_edges(dom, end)) - dE for end in dom.ends}


def end_side_masks(mesh: Mesh, dom: IdealDomain) -> Dict[str, np.ndarray]:
    """Triangles on the side of each end (split by the core geodesic)."""
    phi = mesh.coords[mesh.triangles, 1].mean(axis=1)
    out = {}
    for end in dom.ends:
        v = dom.chain(end)[0]
        pt = dom.ideal_point(Lift(v.index, 0)).point * 0.99
        upper_side = disk_to_band(pt).imag > math.pi / 2
        out[end] = phi > math.pi / 2 if upper_side else phi <= math.pi / 2
    return out


def graph_annulus_moduli(u: ScalarField, dom: IdealDomain, inner: np.ndarray,
                         outer: np.ndarray) -> Dict[str, float]:
    """Moduli of the graph of ``u`` over the region between two vertex sets, per end."""
    from .parabolicity import AnnulusMesh, conformal_modulus, graph_metric_tensor
    mesh = u.mesh
    g = np.einsum("mki,mi->mk", mesh.gradient_operators(), u.values[mesh.triangles])
    T = graph_metric_tensor(g, mesh.lam)
    out = {}
    for end, side in end_side_masks(mesh, dom).items():
        tri = mesh.triangles[side]
        vs = np.unique(tri)
        ann = AnnulusMesh(mesh.coords, tri, np.intersect1d(inner, vs), np.intersect1d(outer, vs), mesh.dof)
        out[end] = conformal_modulus(ann, T[side], check_topology=False).modulus
    return out


@dataclass
class IterationStep:
    index: int
    domain: IdealDomain
    field: ScalarField
    t: Optional[float]
    closeness: Optional[float]          # sup + gradient sup on the previous compact
    closeness_bound: Optional[float]
    delta: float                        # compact = {d(p, edges) >= delta}
    moduli: Dict[str, float]            # "j:end" -> modulus of the graph over K_j \ K_{j-1}
    boundary_distance: float            # from the reference point
    end_distance: Dict[str, float]
    tried: List[Tuple[float, float]] = field(default_factory=list)
    modulus_scan: Dict[float, float] = field(default_factory=dict)   # delta -> smallest modulus

    def to_dict(self) -> dict:
        return {"index": self.index, "vertices": self.domain.N, "t": self.t,
                "closeness": self.closeness, "closeness_bound": self.closeness_bound,
                "delta": self.delta, "moduli": self.moduli,
                "modulus_scan": {str(k): v for k, v in self.modulus_scan.items()},
                "boundary_distance": self.boundary_distance, "end_distance": self.end_distance,
                "tried": [list(x) for x in self.tried]}


@dataclass
class IterationResult:
    steps: List[IterationStep]
    distance_constant: float            # min over ends of d_kappa
    point: complex

    def distance_gains(self) -> List[float]:
        d = [s.boundary_distance for s in self.steps]
        return [b - a for a, b in zip(d, d[1:])]

    def end_distance_gains(self) -> List[Dict[str, float]]:
        return [{e: b.end_distance[e] - a.end_distance[e] for e in a.end_distance}
                for a, b in zip(self.steps, self.steps[1:])]

    def min_modulus(self) -> float:
        vals = [m for s in self.steps for m in s.moduli.values()]
        return min(vals) if vals else math.inf

    def to_dict(self) -> dict:
        return {"steps": [s.to_dict() for s in self.steps], "distance_constant": self.distance_constant,
                "distance_gains": self.distance_gains(), "end_distance_gains": self.end_distance_gains(),
                "min_modulus": self.min_modulus()}


@dataclass
class IterationConfig:
    solve: SolveConfig = field(default_factory=SolveConfig)
    n: float = 32.0
    t_grid: Tuple[float, ...] = tuple(0.4 * 2.0 ** -k for k in range(5))
    delta_grid: Tuple[float, ...] = (1.0, 0.5, 0.25, 0.1, 0.0)
    point: complex = 0j


def iterate_construction(seed: IdealDomain, steps: int = 2,
                         config: Optional[IterationConfig] = None) -> IterationResult:
    """Extend every consecutive (b, a) pair repeatedly, tracking closeness and moduli.

    Step ``n`` accepts the largest ``t`` of the grid whose normalised solution
    is within ``2**-(n-1)`` of the previous one on the previous compact set.
    The compact of each step is ``{d(p, edges) >= delta}`` with the largest
    ``delta`` of the grid whose new graph annuli reach modulus one, falling
    back to the first grid value; the moduli over the whole grid are kept.
    """
    if not 0 <= steps <= 3:
        raise ValueError("steps must lie in 0..3")
    if not seed.model.is_annulus:
        raise ValueError("the construction runs on annular domains")
    cfg = config or IterationConfig()
    sc = cfg.solve
    kappa = seed.model.end_curvature
    dbar = hg.dk_constant(kappa) if kappa else 0.0

    def solve(dom):
        m = mesh_region(dom, h=sc.h, margin=sc.t_margin)
        u, _, _ = js_solve(dom, cfg.n, sc, mesh=m)
        return u

    u = solve(seed)
    f = signed_edge_distance(seed, u.mesh.disk, cfg.point)
    hist = [IterationStep(0, seed, u, None, None, None, 1.0, {}, boundary_distance(seed, cfg.point),
                          end_boundary_distance(seed))]
    compact = u.mesh.disk[f >= 1.0]
    for k in range(1, steps + 1):
        prev = hist[-1]
        bound = 2.0 ** -(k - 1)
        ref = NormalizedField.of(prev.field, cfg.point)
        tried, chosen = [], None
        for t in cfg.t_grid:
            dom = extend_all_pairs(prev.domain, t)
            ut = solve(dom)
            sup, gsup = ref.compare(NormalizedField.of(ut, cfg.point), compact)
            tried.append((float(t), sup + gsup))
            log.info("step %d t=%g closeness %.4g = %.4g + %.4g (bound %.4g)", k, t, sup + gsup, sup, gsup, bound)
            if sup + gsup <= bound:
                chosen = (float(t), dom, ut, sup + gsup)
                break
        if chosen is None:
            raise StepRejected(f"step {k}: no t in the grid reaches closeness {bound}",
                               closeness=min(c for _, c in tried))
        t, dom, ut, close = chosen
        z = ut.mesh.disk
        f_prev = [signed_edge_distance(s.domain, z, cfg.point) for s in hist]
        f_new = signed_edge_distance(dom, z, cfg.point)
        boundary = ut.mesh.boundary_vertices(("edge", "horo"))
        # K_{k-1} on the new mesh
        inner = np.where(f_prev[-1] >= prev.delta)[0]
        # largest delta whose annuli reach modulus one, else the first of the grid
        scan, chosen_delta = {}, None
        for delta in cfg.delta_grid:
            outer = np.union1d(np.where(f_new <= delta)[0] if delta > 0 else [], boundary).astype(int)
            if np.intersect1d(inner, outer).size:
                continue
            scan[float(delta)] = graph_annulus_moduli(ut, dom, inner, outer)
            if min(scan[float(delta)].values()) >= 1.0:
                chosen_delta = float(delta)
                break
        delta = chosen_delta if chosen_delta is not None else float(cfg.delta_grid[0])
        mods = scan[delta]
        moduli = {f"{k}:{e}": v for e, v in mods.items()}
        # earlier annuli seen through the new graph
        for j in range(1, k):
            inner_j = np.where(f_prev[j - 1] >= hist[j - 1].delta)[0]
            outer_j = np.union1d(np.where(f_prev[j] < hist[j].delta)[0], boundary).astype(int)
            if np.intersect1d(inner_j, outer_j).size:
                continue
            for e, v in graph_annulus_moduli(ut, dom, inner_j, outer_j).items():
                moduli[f"{j}:{e}"] = v
        hist.append(IterationStep(k, dom, ut, t, close, bound, delta, moduli,
                                  boundary_distance(dom, cfg.point), end_boundary_distance(dom), tried,
                                  {d: min(m.values()) for d, m in scan.items()}))
        compact = z[f_new >= delta]
    return IterationResult(hist, dbar, complex(cfg.point))
