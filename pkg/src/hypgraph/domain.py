"""Ideal polygonal domains on the plane and on the hyperbolic annulus.

The annulus model is the quotient of the disk by the translation ``T`` of
length ``L`` along the real diameter.  It is described with band coordinates:
the Cayley map ``zh = i(1+z)/(1-z)`` sends the disk to the upper half plane
and ``w = log(zh) = rho + i*phi`` with ``0 < phi < pi``.  In these
coordinates ``T`` is ``rho -> rho + L``, the axis is ``phi = pi/2`` and the
two ideal boundary circles are ``phi = pi`` (upper semicircle of the disk)
and ``phi = 0`` (lower semicircle).  A vertex of the annulus is therefore
recorded by its end and its ``rho`` coordinate.

Horodisk parameters.  On the plane the base horodisk at a vertex passes
through the origin.  On the annulus it passes through the foot of the
perpendicular from the vertex to the axis, so the family is invariant under
the translations along the axis and a parameter equals the distance from the
horodisk to the axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import hypgeom as hg
from .hypgeom import Geodesic, Horodisk, IdealPoint, Isometry

PLANE = "plane"
ANNULUS = "annulus"
UPPER = "upper"
LOWER = "lower"
MARGIN_TOL = 1e-8
MAX_ENUM_VERTICES = 12


class DomainError(ValueError):
    pass


class OddVertexCount(DomainError):
    pass


class NonAlternatingLabels(DomainError):
    pass


class EdgeLeavesEnd(DomainError):
    pass


class TruncationTooSmall(DomainError):
    pass


class VertexBudgetExceeded(DomainError):
    pass


class OddL(DomainError):
    pass


class HorodiskEscapesEnd(DomainError):
    pass


class BadLabels(DomainError):
    pass


class NonConsecutiveEdges(DomainError):
    pass


class TOutOfRange(DomainError):
    pass


# ---------------------------------------------------------------------------
# band coordinates

def disk_to_band(z):
    z = np.asarray(z, dtype=complex)
    zh = 1j * (1 + z) / (1 - z)
    return np.log(zh)


def band_to_disk(w):
    zh = np.exp(np.asarray(w, dtype=complex))
    return (zh - 1j) / (zh + 1j)


def band_to_angle(end: str, rho):
    """Disk angle of the ideal point with band coordinate ``rho`` on ``end``."""
    a = 2.0 * np.arctan(np.exp(-np.asarray(rho, dtype=float)))
    return a if end == UPPER else -a


def angle_to_band(theta: float) -> Tuple[str, float]:
    t = math.remainder(theta, 2 * math.pi)
    if abs(t) < 1e-15 or abs(abs(t) - math.pi) < 1e-15:
        raise DomainError("axis endpoints are not vertices of an annulus domain")
    end = UPPER if t > 0 else LOWER
    return end, math.log(1.0 / math.tan(abs(t) / 2.0))


def axis_distance_band(w):
    """Distance to the axis of a point with band coordinate ``w``."""
    return np.arccosh(1.0 / np.sin(np.imag(w)))


# ---------------------------------------------------------------------------
# surface models

@dataclass(frozen=True)
class SurfaceModel:
    """The plane, or the annulus of core length ``translation_length``.

    ``end_distance`` is the distance from the core geodesic to the
    equidistant curves bounding the two funnel ends; the boundary curvature
    of each end is ``tanh(end_distance)``.
    """

    kind: str = PLANE
    translation_length: Optional[float] = None
    end_distance: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (PLANE, ANNULUS):
            raise DomainError(f"unknown surface model {self.kind!r}")
        if self.kind == ANNULUS:
            if self.translation_length is None or not self.translation_length > 0:
                raise DomainError("annulus needs a positive translation length")

    @classmethod
    def plane(cls) -> "SurfaceModel":
        return cls(PLANE)

    @classmethod
    def annulus(cls, length: float, end_distance: Optional[float] = None) -> "SurfaceModel":
        return cls(ANNULUS, float(length), end_distance)

    @property
    def is_annulus(self) -> bool:
        return self.kind == ANNULUS

    @property
    def axis(self) -> Geodesic:
        return hg.REAL_DIAMETER

    @property
    def translation(self) -> Isometry:
        return Isometry.real_translation(self.translation_length)

    @property
    def end_curvature(self) -> Optional[float]:
        if self.end_distance is None:
            return None
        return math.tanh(self.end_distance)

    @property
    def euler(self) -> int:
        return 0 if self.is_annulus else 1

    @property
    def closed_geodesic_bound(self) -> int:
        return 1 if self.is_annulus else 0


# ---------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class Vertex:
    index: int
    end: str          # 'plane', 'upper' or 'lower'
    coord: float      # angle on the plane, band rho on the annulus
    position: int     # position along its end chain


@dataclass(frozen=True)
class Lift:
    """Lift ``T^k`` of a domain vertex (``k`` is always 0 on the plane)."""
    vertex: int
    k: int = 0


@dataclass(frozen=True)
class DomainEdge:
    index: int
    start: Lift
    end: Lift
    label: str


@dataclass
class IdealDomain:
    model: SurfaceModel
    vertices: List[Vertex]
    edges: List[DomainEdge]
    metadata: Dict = field(default_factory=dict)
    _cache: Dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def N(self) -> int:
        return len(self.vertices)

    def chain(self, end: str) -> List[Vertex]:
        return sorted((v for v in self.vertices if v.end == end), key=lambda v: v.position)

    @property
    def ends(self) -> List[str]:
        return [PLANE] if not self.model.is_annulus else [e for e in (UPPER, LOWER) if self.chain(e)]

    # -- geometry of lifts --------------------------------------------------

    def ideal_point(self, lift: Lift) -> IdealPoint:
        key = ("pt", lift)
        if key not in self._cache:
            v = self.vertices[lift.vertex]
            if not self.model.is_annulus:
                p = IdealPoint(v.coord)
            else:
                rho = v.coord + lift.k * self.model.translation_length
                p = IdealPoint(float(band_to_angle(v.end, rho)))
            self._cache[key] = p
        return self._cache[key]

    def base_offset(self, lift: Lift) -> float:
        """Busemann value (origin normalised) at the base point of the lift."""
        if not self.model.is_annulus:
            return 0.0
        key = ("off", lift)
        if key not in self._cache:
            v = self.vertices[lift.vertex]
            rho = v.coord + lift.k * self.model.translation_length
            foot = math.tanh(rho / 2.0)
            self._cache[key] = float(hg.busemann(self.ideal_point(lift).point, foot))
        return self._cache[key]

    def horodisk(self, lift: Lift, t: float) -> Horodisk:
        return Horodisk(self.ideal_point(lift), t - self.base_offset(lift))

    def geodesic(self, a: Lift, b: Lift) -> Geodesic:
        return Geodesic(self.ideal_point(a), self.ideal_point(b))

    def chord_constant(self, a: Lift, b: Lift) -> float:
        """Truncated length of the chord at zero parameters, in the linear regime."""
        g = self.geodesic(a, b)
        return g.busemann_sum() - self.base_offset(a) - self.base_offset(b)

    def global_index(self, lift: Lift) -> int:
        v = self.vertices[lift.vertex]
        n = len(self.chain(v.end))
        return lift.k * n + v.position

    def lift_at(self, end: str, g: int) -> Lift:
        ch = self.chain(end)
        n = len(ch)
        k, pos = divmod(g, n)
        return Lift(ch[pos].index, k if self.model.is_annulus else 0)

    def edge_between(self, a: Lift, b: Lift) -> Optional[DomainEdge]:
        """The domain edge joining two lifts, if they are chain neighbours."""
        va, vb = self.vertices[a.vertex], self.vertices[b.vertex]
        if va.end != vb.end:
            return None
        n = len(self.chain(va.end))
        ga, gb = self.global_index(a), self.global_index(b)
        if not self.model.is_annulus:
            if (ga - gb) % n not in (1, n - 1) or n < 3:
                return None
            lo = ga if (gb - ga) % n == 1 else gb
        else:
            if abs(ga - gb) != 1:
                return None
            lo = min(ga, gb)
        lo_lift = self.lift_at(va.end, lo)
        for e in self.edges:
            if e.start.vertex == lo_lift.vertex:
                return e
        return None

    def edge_geodesic(self, e: DomainEdge) -> Geodesic:
        return self.geodesic(e.start, e.end)

    def lift_window(self, k_lo: int, k_hi: int) -> List[Lift]:
        if not self.model.is_annulus:
            return [Lift(v.index) for v in self.vertices]
        return [Lift(v.index, k) for k in range(k_lo, k_hi + 1) for v in self.vertices]

    def rho(self, lift: Lift) -> float:
        v = self.vertices[lift.vertex]
        return v.coord + lift.k * (self.model.translation_length or 0.0)


def _alternate(labels: Sequence[str]) -> bool:
    n = len(labels)
    return all(labels[i] != labels[(i + 1) % n] for i in range(n))


def build_ideal_domain(model: SurfaceModel, vertices, labels, metadata=None,
                       check_ends: bool = True) -> IdealDomain:
    """Validated ideal domain.

    ``vertices`` is a list of angles for the plane, or a mapping
    ``{'upper': rhos, 'lower': rhos}`` for the annulus (rhos inside one
    period).  ``labels`` matches: a sequence, or a mapping per end, listing
    the label of the edge that starts at each vertex in chain order.
    """
    verts: List[Vertex] = []
    edges: List[DomainEdge] = []
    if not model.is_annulus:
        ends = {PLANE: [hg.canonical_angle(a) for a in vertices]}
        label_map = {PLANE: list(labels)}
    else:
        ends = {e: [float(r) for r in vertices.get(e, [])] for e in (UPPER, LOWER)}
        label_map = {e: list(labels.get(e, [])) for e in (UPPER, LOWER)}
    for end, coords in ends.items():
        if not coords:
            continue
        labs = label_map[end]
        if len(coords) % 2:
            raise OddVertexCount(f"{len(coords)} vertices on {end} end")
        if len(labs) != len(coords):
            raise BadLabels("one label per edge is required")
        if any(l not in ("a", "b") for l in labs):
            raise BadLabels(f"labels must be 'a' or 'b', got {labs}")
        order = np.argsort(coords)
        coords = [coords[i] for i in order]
        labs = [labs[i] for i in order]
        if model.is_annulus:
            L = model.translation_length
            if coords[-1] - coords[0] >= L:
                raise DomainError("annulus vertices must lie within one period")
        if not _alternate(labs):
            raise NonAlternatingLabels(f"labels {labs} do not alternate on {end}")
        base = len(verts)
        n = len(coords)
        for pos, c in enumerate(coords):
            verts.append(Vertex(base + pos, end, c, pos))
        for pos in range(n):
            nxt = pos + 1
            k = 0
            if nxt == n:
                nxt = 0
                k = 1 if model.is_annulus else 0
            edges.append(DomainEdge(len(edges), Lift(base + pos), Lift(base + nxt, k), labs[pos]))
    if not model.is_annulus and len(verts) < 3:
        raise OddVertexCount("a plane domain needs at least four vertices")
    dom = IdealDomain(model, verts, edges, dict(metadata or {}))
    if check_ends and model.is_annulus and model.end_distance is not None:
        for e in edges:
            d = edge_axis_distance(dom, e)
            if d < model.end_distance - 1e-9:
                raise EdgeLeavesEnd(f"edge {e.index} comes within {d:.6g} of the axis")
    return dom


def edge_axis_distance(dom: IdealDomain, e: DomainEdge) -> float:
    """Distance from the core geodesic to a same-end edge."""
    r1, r2 = dom.rho(e.start), dom.rho(e.end)
    v = dom.vertices[e.start.vertex]
    # the common perpendicular sits at the mean band coordinate; the edge is
    # the half circle |zh - c| = r in the upper half plane with real endpoints
    x1, x2 = math.exp(r1), math.exp(r2)
    if v.end == UPPER:
        x1, x2 = -x1, -x2
    c, r = 0.5 * (x1 + x2), 0.5 * abs(x1 - x2)
    mod = math.exp(0.5 * (r1 + r2))
    # intersection with |zh| = mod: Re zh = (mod^2 + c^2 - r^2) / (2c)
    re = (mod * mod + c * c - r * r) / (2 * c)
    phi = math.acos(max(-1.0, min(1.0, re / mod)))
    return float(axis_distance_band(1j * phi))


# ---------------------------------------------------------------------------
# truncation vectors and lengths

@dataclass(frozen=True)
class TruncationVector:
    t: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(float(x) for x in self.t))

    @classmethod
    def constant(cls, n: int, value: float) -> "TruncationVector":
        return cls((value,) * n)

    def __getitem__(self, i):
        return self.t[i]

    def __len__(self):
        return len(self.t)

    def __ge__(self, other: "TruncationVector") -> bool:
        return all(a >= b for a, b in zip(self.t, other.t))

    def __le__(self, other: "TruncationVector") -> bool:
        return other >= self

    def raised(self, i: int, dt: float) -> "TruncationVector":
        t = list(self.t)
        t[i] += dt
        return TruncationVector(t)

    def shifted(self, dt: float) -> "TruncationVector":
        return TruncationVector([x + dt for x in self.t])


@dataclass(frozen=True)
class PolygonEdge:
    kind: str                   # 'a', 'b' (domain edges) or 'c'
    start: Optional[Lift]
    end: Optional[Lift]
    closed: bool = False        # the core closed geodesic


@dataclass
class InscribedPolygon:
    """Inscribed polygonal domain.

    ``topology`` is 'disk' (a finite ideal polygon in the universal cover)
    or 'annular' (invariant under the deck translation).  For annular
    polygons ``edges`` lists one period of each boundary chain.
    """

    topology: str
    edges: List[PolygonEdge]
    vertices: List[Lift]

    @property
    def euler(self) -> int:
        return 1 if self.topology == "disk" else 0

    @property
    def vertex_set(self) -> frozenset:
        return frozenset(l.vertex for l in self.vertices)

    @property
    def key(self) -> Tuple[str, frozenset]:
        return (self.topology, self.vertex_set)

    def count(self, kind: str) -> int:
        return sum(1 for e in self.edges if e.kind == kind)

    def ideal_vertex_count(self) -> int:
        return len(self.vertices)

    def gauss_bonnet_area(self) -> float:
        """Area predicted from the vertex count and the Euler characteristic."""
        return math.pi * (self.ideal_vertex_count() - 2 * self.euler)


def _edge_horodisks(dom, e: PolygonEdge, t: TruncationVector):
    return [dom.horodisk(e.start, t[e.start.vertex]), dom.horodisk(e.end, t[e.end.vertex])]


def edge_length(dom: IdealDomain, e: PolygonEdge, t: TruncationVector,
                check: bool = True) -> float:
    """Truncated length of one polygon edge."""
    if e.closed:
        return dom.model.translation_length
    key = ("len", e.start, e.end, t[e.start.vertex], t[e.end.vertex], check,
           t.t if check else None)
    if key not in dom._cache:
        dom._cache[key] = _edge_length(dom, e, t, check)
    return dom._cache[key]


def _edge_length(dom, e, t, check):
    g = dom.geodesic(e.start, e.end)
    hs = _edge_horodisks(dom, e, t)
    if check:
        gap = hs[0].disjoint_from(hs[1], tol=1e-9)
        if not gap:
            raise TruncationTooSmall("endpoint horodisks overlap")
        for lift in _nearby_lifts(dom, [e.start, e.end]):
            if lift == e.start or lift == e.end:
                continue
            if hg._horodisk_interval(g, dom.horodisk(lift, t[lift.vertex])) is not None:
                raise TruncationTooSmall(f"edge meets the horodisk at vertex {lift.vertex}")
    return hg.truncated_length(g, hs, check_disjoint=False)


def _nearby_lifts(dom, lifts):
    if not dom.model.is_annulus:
        return dom.lift_window(0, 0)
    ks = [l.k for l in lifts]
    return dom.lift_window(min(ks) - 1, max(ks) + 1)


def lengths(dom: IdealDomain, poly: InscribedPolygon, t: TruncationVector,
            check: bool = True) -> Tuple[float, float, float]:
    """``(alpha, beta, gamma)`` of an inscribed polygon at truncation ``t``."""
    alpha = beta = gamma = 0.0
    for e in poly.edges:
        ell = edge_length(dom, e, t, check)
        gamma += ell
        if e.kind == "a":
            alpha += ell
        elif e.kind == "b":
            beta += ell
    return alpha, beta, gamma


def domain_polygon(dom: IdealDomain) -> InscribedPolygon:
    """The domain itself as an inscribed polygon."""
    edges = [PolygonEdge(e.label, e.start, e.end) for e in dom.edges]
    topo = "annular" if dom.model.is_annulus else "disk"
    return InscribedPolygon(topo, edges, [Lift(v.index) for v in dom.vertices])


# ---------------------------------------------------------------------------
# enumeration of inscribed polygons

def _classify(dom: IdealDomain, a: Lift, b: Lift) -> PolygonEdge:
    e = dom.edge_between(a, b)
    return PolygonEdge(e.label if e is not None else "c", a, b)


def _disk_polygon(dom: IdealDomain, lifts: Sequence[Lift]) -> InscribedPolygon:
    pts = [(dom.ideal_point(l).theta, l) for l in lifts]
    pts.sort(key=lambda p: p[0])
    ordered = [p[1] for p in pts]
    n = len(ordered)
    edges = [_classify(dom, ordered[i], ordered[(i + 1) % n]) for i in range(n)]
    return InscribedPolygon("disk", edges, ordered)


def _chain_edges(dom: IdealDomain, end: str, residues: Sequence[int]) -> List[PolygonEdge]:
    n = len(dom.chain(end))
    res = sorted(residues)
    out = []
    for i, r in enumerate(res):
        nxt = res[i + 1] if i + 1 < len(res) else res[0] + n
        out.append(_classify(dom, dom.lift_at(end, r), dom.lift_at(end, nxt)))
    return out


def _annular_polygon(dom, upper, lower) -> InscribedPolygon:
    edges: List[PolygonEdge] = []
    verts: List[Lift] = []
    for end, res in ((UPPER, upper), (LOWER, lower)):
        if res is None:
            edges.append(PolygonEdge("c", None, None, closed=True))
        else:
            edges.extend(_chain_edges(dom, end, res))
            verts.extend(dom.lift_at(end, r) for r in sorted(res))
    return InscribedPolygon("annular", edges, verts)


def _lower_offsets(dom, upper_g: Sequence[int], n_low: int) -> range:
    """Lower chain window starts whose band span lies within a period of the upper one."""
    if not upper_g:
        return range(0, n_low)
    L = dom.model.translation_length
    rmin = min(dom.rho(dom.lift_at(UPPER, g)) for g in upper_g)
    rmax = max(dom.rho(dom.lift_at(UPPER, g)) for g in upper_g)
    lo = math.floor((rmin - L - dom.chain(LOWER)[-1].coord) / L) - 1
    hi = math.ceil((rmax + L - dom.chain(LOWER)[0].coord) / L) + 1
    return range(lo * n_low, hi * n_low + n_low)


def _window_subsets(n: int, span_units: Sequence[Tuple[int, int]], period: int):
    """Subsets of unit intervals (first, last global index) inside one period.

    The first element has its start inside ``[0, period)``; the union of the
    chosen units spans at most ``period`` chain steps.
    """
    del n
    for first in range(len(span_units)):
        s0, _ = span_units[first]
        if not 0 <= s0 < period:
            continue
        later = [u for u in span_units if u[0] > s0 and u[1] - s0 <= period]
        for r in range(len(later) + 1):
            for combo in itertools.combinations(later, r):
                yield (span_units[first],) + combo


def _annulus_units(dom, end, kind):
    """Per-end units: single vertices ('all') or lifted edges of one label."""
    ch = dom.chain(end)
    n = len(ch)
    if n == 0:
        return n, []
    if kind == "all":
        units = [(g, g) for g in range(-n, 2 * n)]
    else:
        labels = {e.start.vertex: e.label for e in dom.edges}
        units = [(g, g + 1) for g in range(-n, 2 * n) if labels[ch[g % n].index] == kind]
    return n, units


def _units_lifts(dom, end, units):
    gs = sorted({g for u in units for g in u})
    return [dom.lift_at(end, g) for g in gs], gs


def enumerate_inscribed(dom: IdealDomain, filter: str = "all") -> List[InscribedPolygon]:
    """Inscribed polygons, optionally restricted to alternating ``a`` or ``b`` edges.

    With ``filter='a_alternating'`` every vertex of a returned polygon is an
    endpoint of exactly one of its ``a`` edges; these are the only polygons
    for which the ``gamma - 2 alpha`` condition is not automatic.
    """
    if filter not in ("all", "a_alternating", "b_alternating"):
        raise ValueError(f"unknown filter {filter!r}")
    if filter == "all" and dom.N > MAX_ENUM_VERTICES:
        raise VertexBudgetExceeded(f"{dom.N} vertices exceeds {MAX_ENUM_VERTICES}")
    kind = "all" if filter == "all" else filter[0]
    out: Dict = {}
    if not dom.model.is_annulus:
        _enumerate_plane(dom, kind, out)
    else:
        _enumerate_annulus(dom, kind, out)
    return list(out.values())


def _signature(poly: InscribedPolygon):
    if poly.topology == "disk":
        # canonical up to deck translation
        if poly.vertices:
            k0 = min(l.k for l in poly.vertices)
        else:
            k0 = 0
        return ("disk", frozenset((l.vertex, l.k - k0) for l in poly.vertices))
    return ("annular", frozenset(l.vertex for l in poly.vertices),
            tuple(e.closed for e in poly.edges if e.closed))


def _accept(dom, poly, kind, out):
    if len(poly.vertices) + (1 if poly.topology == "annular" else 0) < (3 if poly.topology == "disk" else 1):
        return
    if kind != "all":
        # every vertex appearance carries exactly one edge of the chosen label
        counts: Dict[Lift, int] = {}
        for e in poly.edges:
            if e.kind == kind:
                for l in (e.start, e.end):
                    counts[l] = counts.get(l, 0) + 1
        if poly.topology == "disk":
            keys = poly.vertices
        else:
            keys = poly.vertices
            # compare residues: chain lifts at the period seam belong to k=1
            counts = {Lift(l.vertex, 0): c for l, c in counts.items()}
        if any(counts.get(Lift(l.vertex, 0) if poly.topology == "annular" else l, 0) != 1 for l in keys):
            return
    out.setdefault(_signature(poly), poly)


def _enumerate_plane(dom, kind, out):
    n = dom.N
    if kind == "all":
        for r in range(3, n + 1):
            for combo in itertools.combinations(range(n), r):
                _accept(dom, _disk_polygon(dom, [Lift(i) for i in combo]), kind, out)
        return
    chain = dom.chain(PLANE)
    units = [(v.position, (v.position + 1) % n) for v in chain
             if next(e for e in dom.edges if e.start.vertex == v.index).label == kind]
    for r in range(2, len(units) + 1):
        for combo in itertools.combinations(units, r):
            ids = sorted({chain[i].index for u in combo for i in u})
            _accept(dom, _disk_polygon(dom, [Lift(i) for i in ids]), kind, out)


def _enumerate_annulus(dom, kind, out):
    n_up, up_units = _annulus_units(dom, UPPER, kind)
    n_lo, lo_units = _annulus_units(dom, LOWER, kind)
    # disk type with one end only, or both ends
    up_choices = [()] + list(_window_subsets(n_up, up_units, n_up)) if n_up else [()]
    for uc in up_choices:
        up_lifts, up_g = _units_lifts(dom, UPPER, uc) if uc else ([], [])
        if n_lo:
            offsets = _lower_offsets(dom, up_g, n_lo) if up_g else range(0, n_lo)
            lo_choices = [()]
            for off in offsets:
                shifted = [(a - off, b - off) for a, b in lo_units]
                for sub in _window_subsets(n_lo, shifted, n_lo) if not up_g else _first_at(shifted, n_lo):
                    lo_choices.append(tuple((a + off, b + off) for a, b in sub))
        else:
            lo_choices = [()]
        for lc in lo_choices:
            lo_lifts, _ = _units_lifts(dom, LOWER, lc) if lc else ([], [])
            lifts = up_lifts + lo_lifts
            if len(lifts) < 3:
                continue
            _accept(dom, _disk_polygon(dom, lifts), kind, out)
    # annular type
    def residue_sets(n, units):
        if n == 0:
            return [None]
        base = [u for u in units if 0 <= u[0] < n]
        sets: List = [None]
        for r in range(1, len(base) + 1):
            for combo in itertools.combinations(base, r):
                res = sorted({g % n for u in combo for g in u})
                sets.append(res)
        return sets
    for U in residue_sets(n_up, up_units):
        for W in residue_sets(n_lo, lo_units):
            if U is None and W is None:
                continue
            _accept(dom, _annular_polygon(dom, U, W), kind, out)


def _first_at(units, period):
    """Windows of lower units whose first element starts at relative index 0."""
    for first in range(len(units)):
        s0, _ = units[first]
        if s0 != 0:
            continue
        later = [u for u in units if u[0] > s0 and u[1] - s0 <= period]
        for r in range(len(later) + 1):
            for combo in itertools.combinations(later, r):
                yield (units[first],) + combo


def is_whole_domain(dom: IdealDomain, poly: InscribedPolygon) -> bool:
    if poly.topology == "disk" and dom.model.is_annulus:
        return False
    if poly.topology == "annular" and any(e.closed for e in poly.edges):
        return False
    return poly.vertex_set == frozenset(v.index for v in dom.vertices) and \
        all(e.kind != "c" for e in poly.edges)


def inscribed_edge_bound(dom: IdealDomain) -> float:
    """Bound on the size of a family of disjoint inscribed geodesics."""
    chi = dom.model.euler
    N = dom.N
    return dom.model.closed_geodesic_bound + (1 + N / 2 - chi) * (N - 2 * chi)


# ---------------------------------------------------------------------------
# the Jenkins-Serrin conditions

@dataclass
class Witness:
    polygon: InscribedPolygon
    condition: str
    margin: float


@dataclass
class JSReport:
    verdict: str
    witnesses: List[Witness]
    alpha_minus_beta: float
    t: TruncationVector
    checked: int = 0

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self, dom: Optional[IdealDomain] = None) -> dict:
        def poly_dict(p):
            return {"topology": p.topology, "vertices": sorted(p.vertex_set),
                    "edges": ["".join(e.kind) for e in p.edges]}
        return {
            "verdict": self.verdict,
            "alpha_minus_beta": self.alpha_minus_beta,
            "t": list(self.t.t),
            "checked": self.checked,
            "witnesses": [{"condition": w.condition, "margin": w.margin, "polygon": poly_dict(w.polygon)}
                          for w in self.witnesses],
        }


def slopes(poly: InscribedPolygon, kind: str) -> Dict[int, int]:
    """d(gamma - 2*ell_kind)/dt_v for each domain vertex ``v`` of the polygon."""
    s: Dict[int, int] = {}
    for e in poly.edges:
        if e.closed:
            continue
        w = 1 - 2 * (e.kind == kind)
        for l in (e.start, e.end):
            s[l.vertex] = s.get(l.vertex, 0) + w
    return s


def certification_t(dom: IdealDomain) -> float:
    """Common parameter past every pairwise tangency, plus one."""
    lifts = dom.lift_window(-1, 1) if dom.model.is_annulus else dom.lift_window(0, 0)
    worst = 0.0
    for i in range(len(lifts)):
        for j in range(i + 1, len(lifts)):
            a, b = lifts[i], lifts[j]
            if dom.ideal_point(a) == dom.ideal_point(b):
                continue
            worst = max(worst, -0.5 * dom.chord_constant(a, b))
    return worst + 1.0


def js_margin(dom: IdealDomain, poly: InscribedPolygon, kind: str, t: TruncationVector) -> float:
    """``gamma - 2*ell_kind`` in the large-``t`` limit (``inf`` if it diverges)."""
    if any(v > 0 for v in slopes(poly, kind).values()):
        return math.inf
    alpha, beta, gamma = lengths(dom, poly, t)
    return gamma - 2 * (alpha if kind == "a" else beta)


def js_check(dom: IdealDomain, t_value: Optional[float] = None) -> JSReport:
    """Evaluate the Jenkins-Serrin conditions.

    The conditions on alternating polygons have zero slope in every
    truncation parameter, so one evaluation at a parameter past all
    tangencies certifies them.
    """
    t0 = certification_t(dom) if t_value is None else t_value
    for _ in range(30):
        tv = TruncationVector.constant(dom.N, t0)
        try:
            whole = domain_polygon(dom)
            alpha, beta, _ = lengths(dom, whole, tv)
            polys = {k: enumerate_inscribed(dom, f"{k}_alternating") for k in ("a", "b")}
            witnesses = []
            checked = 0
            for k, plist in polys.items():
                for p in plist:
                    if is_whole_domain(dom, p):
                        continue
                    m = js_margin(dom, p, k, tv)
                    checked += 1
                    if m < MARGIN_TOL:
                        witnesses.append(Witness(p, f"gamma-2{'alpha' if k == 'a' else 'beta'}", m))
            break
        except TruncationTooSmall:
            t0 += 1.0
    else:
        raise TruncationTooSmall("could not certify a large truncation")
    amb = alpha - beta
    if abs(amb) > MARGIN_TOL:
        witnesses.insert(0, Witness(whole, "alpha-beta", -abs(amb)))
    verdict = "pass" if not witnesses else "fail"
    return JSReport(verdict, witnesses, amb, tv, checked)


# ---------------------------------------------------------------------------
# constructions

def ideal_square(labels=("a", "b", "a", "b")) -> IdealDomain:
    return build_ideal_domain(SurfaceModel.plane(), [0.0, math.pi / 2, math.pi, 3 * math.pi / 2], labels)


def example_tangency(L: float, l: int) -> float:
    """Common parameter at which consecutive orbit horodisks touch."""
    end, rho0 = UPPER, 0.0
    dom = IdealDomain(SurfaceModel.annulus(L), [Vertex(0, end, rho0, 0)], [])
    a = Lift(0, 0)
    # the second lift is the image under the l-th root of T
    step = L / l
    g = Geodesic(IdealPoint(float(band_to_angle(end, rho0))), IdealPoint(float(band_to_angle(end, rho0 + step))))
    off_a = dom.base_offset(a)
    foot_b = math.tanh((rho0 + step) / 2)
    off_b = float(hg.busemann(g.end.point, foot_b))
    return 0.5 * (-g.busemann_sum() + off_a + off_b)


def example_horodisk_depth(L: float, l: int) -> float:
    """Minimum distance to the axis reached by the edges of the example domain."""
    step = L / l
    x1, x2 = 1.0, math.exp(step)
    c, r = -0.5 * (x1 + x2), 0.5 * (x2 - x1)
    mod = math.exp(0.5 * step)
    re = (mod * mod + c * c - r * r) / (2 * c)
    phi = math.acos(max(-1.0, min(1.0, re / mod)))
    return float(axis_distance_band(1j * phi))


def default_end_distance(L: float, l: int) -> float:
    """End boundary placed halfway between the axis and the example edges."""
    return 0.5 * min(example_horodisk_depth(L, l), example_tangency(L, l))


def build_example_domain(model: Optional[SurfaceModel] = None, l: int = 4,
                         L: float = 4.0) -> IdealDomain:
    """Orbit domain: ``l`` vertices per end, equally spaced under the ``l``-th root of ``T``.

    The horodisks with the common parameter ``t_l`` are tangent in consecutive
    pairs and each edge passes through the tangency point.
    """
    if l % 2:
        raise OddL(f"l={l} must be even")
    if l < 4:
        raise OddL(f"l={l} must be at least 4")
    if model is None:
        model = SurfaceModel.annulus(L, default_end_distance(L, l))
    L = model.translation_length
    step = L / l
    rhos = [j * step for j in range(l)]
    labels = ["a" if j % 2 == 0 else "b" for j in range(l)]
    t_l = example_tangency(L, l)
    if model.end_distance is not None and t_l < model.end_distance:
        raise HorodiskEscapesEnd(f"tangency horodisks at depth {t_l:.6g} cross the end boundary "
                                 f"at {model.end_distance:.6g}; increase l")
    dom = build_ideal_domain(model, {UPPER: rhos, LOWER: rhos}, {UPPER: labels, LOWER: labels},
                             metadata={"name": "example", "l": l, "tangency": t_l})
    return dom


def example_truncation(dom: IdealDomain) -> TruncationVector:
    return TruncationVector.constant(dom.N, dom.metadata["tangency"])


# -- extension -----------------------------------------------------------------

MODEL_SIDE = Geodesic.between(math.pi, 3 * math.pi / 2)   # from -1 to -i


def rhombus_vertices(t: float, primed: bool) -> List[complex]:
    """Ideal vertices of the model rhombi beyond the side ``(-1, -i)``."""
    if primed:
        return [complex(math.cos(t), -math.sin(t)), 1j]
    return [1.0 + 0j, 1j * complex(math.cos(t), math.sin(t))]


def _side_frame(g: Geodesic, left_point: complex) -> Geodesic:
    """Orient ``g`` so that ``left_point`` lies on its left."""
    return g if g.signed_distance(left_point) > 0 else g.reversed()


def gluing_isometry(dom: IdealDomain, edge: DomainEdge) -> Isometry:
    """Isometry from the model half-space onto the far side of ``edge``.

    It sends the side ``(-1, -i)`` onto the edge and the model ray through
    the origin onto the ray orthogonal to the edge (towards the axis on the
    annulus, towards the origin on the plane).
    """
    target = dom.edge_geodesic(edge)
    if dom.model.is_annulus:
        rho_mid = 0.5 * (dom.rho(edge.start) + dom.rho(edge.end))
        inner = math.tanh(rho_mid / 2.0)
    else:
        others = [dom.ideal_point(Lift(v.index)).point for v in dom.vertices
                  if v.index not in (edge.start.vertex, edge.end.vertex)]
        inner = 0.5 * np.mean(others)
    # P lies on the left of ``model``; its image, the far side, on the left of ``far``
    model = _side_frame(MODEL_SIDE, 0.0)
    far = _side_frame(target, inner).reversed()
    if not dom.model.is_annulus and far.signed_distance(0.0) < 0:
        inner = 0.0
    s_foot = float(far.foot(inner))
    return far.frame @ Isometry.real_translation(s_foot) @ model.frame.inverse()


def extend_domain(dom0: IdealDomain, edge_pair: Tuple[int, int], t: float) -> IdealDomain:
    """Glue the two rhombi beyond consecutive edges ``(b-edge, a-edge)``."""
    if not 0.0 <= t <= math.pi / 4 + 1e-15:
        raise TOutOfRange(f"t={t} outside [0, pi/4]")
    e1, e2 = dom0.edges[edge_pair[0]], dom0.edges[edge_pair[1]]
    if e1.label != "b" or e2.label != "a":
        raise BadLabels("the first edge must be labelled b and the second a")
    v1 = dom0.vertices[e1.start.vertex]
    if v1.end != dom0.vertices[e2.start.vertex].end or \
            {e1.start.vertex, e1.end.vertex}.isdisjoint({e2.start.vertex, e2.end.vertex}):
        raise NonConsecutiveEdges("edges must share a vertex on the same end")
    new_pts = []
    for e, primed in ((e1, False), (e2, True)):
        phi = gluing_isometry(dom0, e)
        new_pts.append([phi(z) for z in rhombus_vertices(t, primed)])
    end = v1.end
    groups = []
    for pts in new_pts:
        coords = []
        for z in pts:
            theta = math.atan2(z.imag, z.real)
            if dom0.model.is_annulus:
                e_end, rho = angle_to_band(theta)
                if e_end != end:
                    raise DomainError("rhombus vertex fell on the other end")
                coords.append(rho)
            else:
                coords.append(hg.canonical_angle(theta))
        groups.append(coords)
    return _insert_vertices(dom0, end, e1, e2, groups, t)


def _insert_vertices(dom0, end, e1, e2, groups, t):
    chain = dom0.chain(end)
    L = dom0.model.translation_length
    old = [(v.coord, v.index) for v in chain]
    new_coords = [c for g in groups for c in g]
    # anchor label: an edge that is neither of the two glued ones
    anchor = next(e for e in dom0.edges if dom0.vertices[e.start.vertex].end == end
                  and e.index not in (e1.index, e2.index))
    anchor_start = dom0.vertices[anchor.start.vertex].coord
    coords = [c for c, _ in old] + new_coords
    if dom0.model.is_annulus:
        base = min(c for c, _ in old)
        coords = [base + ((c - base) % L) for c in coords]
    else:
        coords = [hg.canonical_angle(c) for c in coords]
    order = sorted(range(len(coords)), key=lambda i: coords[i])
    coords = [coords[i] for i in order]
    pos = min(range(len(coords)), key=lambda i: abs(coords[i] - anchor_start))
    labels = [None] * len(coords)
    for j in range(len(coords)):
        labels[(pos + j) % len(coords)] = anchor.label if j % 2 == 0 else ("a" if anchor.label == "b" else "b")
    if dom0.model.is_annulus:
        other = LOWER if end == UPPER else UPPER
        verts = {end: coords, other: [v.coord for v in dom0.chain(other)]}
        labs = {end: labels,
                other: [next(e.label for e in dom0.edges if e.start.vertex == v.index) for v in dom0.chain(other)]}
        model = dom0.model
    else:
        verts, labs, model = coords, labels, dom0.model
    meta = dict(dom0.metadata)
    meta.update({"name": "extension", "t": t})
    dom = build_ideal_domain(model, verts, labs, metadata=meta)
    # locate the rhombus vertex sets in the new domain
    def find(c):
        best = None
        for v in dom.vertices:
            if v.end != end:
                continue
            d = abs(v.coord - c) if not dom.model.is_annulus else abs((v.coord - c + L / 2) % L - L / 2)
            if best is None or d < best[0]:
                best = (d, v.index)
        return best[1]
    ends1 = [dom0.vertices[e1.start.vertex].coord, dom0.vertices[e1.end.vertex].coord]
    ends2 = [dom0.vertices[e2.start.vertex].coord, dom0.vertices[e2.end.vertex].coord]
    dom.metadata["rhombus1"] = sorted({find(c) for c in ends1 + groups[0]})
    dom.metadata["rhombus2"] = sorted({find(c) for c in ends2 + groups[1]})
    dom.metadata["glued_edges"] = [sorted({find(c) for c in ends1}), sorted({find(c) for c in ends2})]
    return dom


def example_extension_pair(dom: IdealDomain, end: str = UPPER) -> Tuple[int, int]:
    """First consecutive (b, a) edge pair on ``end``."""
    es = [e for e in dom.edges if dom.vertices[e.start.vertex].end == end]
    es.sort(key=lambda e: dom.vertices[e.start.vertex].position)
    for i, e in enumerate(es):
        nxt = es[(i + 1) % len(es)]
        if e.label == "b" and nxt.label == "a":
            return e.index, nxt.index
    raise BadLabels("no consecutive (b, a) pair")


def builtin_domain(name: str, t: float = 0.0) -> IdealDomain:
    if name == "square":
        return ideal_square()
    if name == "example53":
        return build_example_domain()
    if name in ("d0", "dt"):
        base = build_example_domain()
        return extend_domain(base, example_extension_pair(base), 0.0 if name == "d0" else t)
    raise DomainError(f"unknown builtin domain {name!r}")


def expected_witness_keys(dom: IdealDomain):
    """Vertex-set keys of the four critical polygons of an extended domain."""
    all_v = frozenset(v.index for v in dom.vertices)
    r1 = frozenset(dom.metadata["rhombus1"])
    r2 = frozenset(dom.metadata["rhombus2"])
    new1 = r1 - frozenset(dom.metadata["glued_edges"][0])
    new2 = r2 - frozenset(dom.metadata["glued_edges"][1])
    return {
        "R1": ("disk", r1), "R2": ("disk", r2),
        "Omega-R1": ("annular" if dom.model.is_annulus else "disk", all_v - new1),
        "Omega-R2": ("annular" if dom.model.is_annulus else "disk", all_v - new2),
    }
