"""SVG figures in the disk model: domains, field heatmaps and growth plots."""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.tri import Triangulation  # noqa: E402

from . import hypgeom as hg  # noqa: E402
from .domain import IdealDomain, Lift  # noqa: E402

plt.rcParams["svg.hashsalt"] = "hypgraph"
LABEL_COLOURS = {"a": "#c0392b", "b": "#2466a8"}


class MissingArtifact(FileNotFoundError):
    pass


def _disk_axes(title: str = ""):
    fig, ax = plt.subplots(figsize=(6, 6))
    t = np.linspace(0, 2 * np.pi, 400)
    ax.plot(np.cos(t), np.sin(t), color="0.3", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.axis("off")
    if title:
        ax.set_title(title)
    return fig, ax


def _geodesic_xy(g: hg.Geodesic, span: float = 12.0):
    z = np.asarray(g.point(np.linspace(-span, span, 400)))
    return z.real, z.imag


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def draw_domain(ax, dom: IdealDomain, lifts: Sequence[int] = (-1, 0, 1), t: Optional[float] = None):
    from .mesh import mesh_truncation
    ks = lifts if dom.model.is_annulus else (0,)
    for e in dom.edges:
        for k in ks:
            a = Lift(e.start.vertex, e.start.k + k)
            b = Lift(e.end.vertex, e.end.k + k)
            x, y = _geodesic_xy(dom.geodesic(a, b))
            ax.plot(x, y, color=LABEL_COLOURS[e.label], lw=1.6 if k == 0 else 0.7,
                    alpha=1.0 if k == 0 else 0.5)
    if dom.model.is_annulus:
        ax.plot([-1, 1], [0, 0], color="0.5", lw=0.6, ls="--")
    tv = mesh_truncation(dom) if t is None else None
    for v in dom.vertices:
        lift = Lift(v.index, 0)
        hd = dom.horodisk(lift, t if t is not None else tv[v.index])
        c, r = hd.euclidean_center, hd.euclidean_radius
        ax.add_patch(plt.Circle((c.real, c.imag), r, fill=False, color="0.4", lw=0.5))
        p = dom.ideal_point(lift).point
        ax.annotate(str(v.index), (1.07 * p.real, 1.07 * p.imag), ha="center", va="center", fontsize=7)


def render_domain(dom: IdealDomain, path, title: str = "") -> Path:
    """Edges coloured by label, truncation horodisks and vertex numbers."""
    fig, ax = _disk_axes(title or str(dom.metadata.get("name", "")))
    draw_domain(ax, dom)
    return _save(fig, path)


def render_field(disk: np.ndarray, triangles: np.ndarray, values: np.ndarray, path, title: str = "",
                 lines: Sequence[hg.Geodesic] = (), dom: Optional[IdealDomain] = None,
                 cmap: str = "viridis") -> Path:
    """Heatmap of per-vertex or per-triangle values on mesh triangles in the disk."""
    fig, ax = _disk_axes(title)
    tri = Triangulation(disk.real, disk.imag, triangles)
    values = np.asarray(values)
    if len(values) == len(triangles):
        pc = ax.tripcolor(tri, facecolors=values, cmap=cmap)
    else:
        pc = ax.tripcolor(tri, values, shading="gouraud", cmap=cmap)
    fig.colorbar(pc, ax=ax, shrink=0.7)
    if dom is not None:
        draw_domain(ax, dom, lifts=(0,))
    for g in lines:
        x, y = _geodesic_xy(g)
        ax.plot(x, y, color="white", lw=2.0)
        ax.plot(x, y, color="black", lw=0.8, ls="--")
    return _save(fig, path)


def render_growth(r: np.ndarray, area: np.ndarray, path, slope: Optional[float] = None,
                  title: str = "area growth") -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    ok = (np.asarray(r) > 0) & (np.asarray(area) > 0)
    ax.loglog(np.asarray(r)[ok], np.asarray(area)[ok], "o-", ms=3)
    ax.set_xlabel("r")
    ax.set_ylabel("area")
    ax.set_title(title)
    if slope is not None:
        ax.text(0.05, 0.9, f"fitted slope {slope:.3f}", transform=ax.transAxes)
    return _save(fig, path)


def render_directory(outdir) -> list:
    """Regenerate the figures of a scenario directory from its artifacts."""
    from . import io
    outdir = Path(outdir)
    summary = outdir / "summary.json"
    if not summary.exists():
        raise MissingArtifact(f"{summary} not found")
    made = []
    dom_file = outdir / "domain.txt"
    if dom_file.exists():
        dom = io.read_domain(dom_file)
        made.append(render_domain(dom, outdir / "domain.svg"))
    mesh_file, sol_file = outdir / "mesh.txt", outdir / "solution.csv"
    if mesh_file.exists() and sol_file.exists():
        arr = io.read_mesh_arrays(mesh_file)
        data = np.loadtxt(sol_file, delimiter=",", skiprows=1)
        disk = data[:, 1] + 1j * data[:, 2]
        made.append(render_field(disk, arr["triangles"], data[:, 3], outdir / "solution.svg", "u"))
    growth = outdir / "growth.csv"
    if growth.exists():
        g = np.loadtxt(growth, delimiter=",", skiprows=1, ndmin=2)
        made.append(render_growth(g[:, 0], g[:, 1], outdir / "growth.svg"))
    return made
