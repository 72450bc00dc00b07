"""Plain-text formats: domain descriptions, key-value configs, meshes,
solution CSVs and deterministic JSON."""
from __future__ import annotations

import ast
import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .domain import (LOWER, UPPER, DomainError, IdealDomain, SurfaceModel, build_example_domain,
                     build_ideal_domain)
from .mesh import Mesh

PathLike = Union[str, Path]


class FormatError(DomainError):
    pass


# ---------------------------------------------------------------------------
# key-value files

def parse_key_values(text: str) -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; later keys win."""
    out: Dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {no}: expected 'key = value', got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip().lower().replace("-", "_")] = v.strip()
    return out


def read_key_values(path: PathLike) -> Dict[str, str]:
    return parse_key_values(Path(path).read_text())


def parse_floats(value: str) -> List[float]:
    return [parse_float(x) for x in value.replace(",", " ").split()]


def parse_float(x: str) -> float:
    """Float with ``pi`` and ``e`` products allowed (``pi/2``, ``3*pi/2``, ``e2pi``)."""
    s = x.strip().lower()
    if s.startswith("e") and s[1:].replace("pi", "").replace(".", "").isdigit():
        k = s[1:-2] or "1"
        return math.exp(float(k) * math.pi)
    if s.startswith("e^"):
        return math.exp(parse_float(s[2:]))
    try:
        return float(s)
    except ValueError:
        pass
    try:
        return _eval(ast.parse(s, mode="eval").body)
    except (SyntaxError, FormatError):
        raise FormatError(f"not a number: {x!r}") from None


_OPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
        ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b}


def _eval(node) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in ("pi", "e"):
        return math.pi if node.id == "pi" else math.e
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left), _eval(node.right))
    raise FormatError("unsupported expression")


# ---------------------------------------------------------------------------
# domain descriptions

def domain_from_keys(kv: Dict[str, str]) -> IdealDomain:
    """Build a domain from a parsed description.

    Plane: ``model = plane``, ``vertices`` (angles) and ``labels``.
    Annulus: ``model = annulus``, ``length``, optional ``end_distance``, then
    ``upper``/``lower`` band coordinates with ``upper_labels``/``lower_labels``,
    or ``orbit = <l>`` for the equally spaced orbit domain.
    """
    model = kv.get("model", "plane")
    try:
        if model == "plane":
            verts = parse_floats(kv["vertices"])
            labels = kv["labels"].replace(",", " ").split()
            return build_ideal_domain(SurfaceModel.plane(), verts, labels, metadata={"name": kv.get("name", "file")})
        if model == "annulus":
            L = parse_float(kv["length"])
            dE = parse_float(kv["end_distance"]) if "end_distance" in kv else None
            if "orbit" in kv:
                m = SurfaceModel.annulus(L, dE) if dE is not None else None
                return build_example_domain(m, l=int(kv["orbit"]), L=L)
            verts = {e: parse_floats(kv[e]) for e in (UPPER, LOWER) if e in kv}
            labels = {e: kv[f"{e}_labels"].replace(",", " ").split() for e in verts}
            return build_ideal_domain(SurfaceModel.annulus(L, dE), verts, labels,
                                      metadata={"name": kv.get("name", "file")})
    except KeyError as exc:
        raise FormatError(f"missing key {exc.args[0]!r}") from None
    raise FormatError(f"unknown model {model!r}")


def read_domain(path: PathLike) -> IdealDomain:
    return domain_from_keys(read_key_values(path))


def domain_to_text(dom: IdealDomain) -> str:
    lines = [f"name = {dom.metadata.get('name', 'domain')}"]
    if not dom.model.is_annulus:
        ch = dom.chain("plane")
        lines += ["model = plane", "vertices = " + ", ".join(f"{float(v.coord)!r}" for v in ch),
                  "labels = " + ", ".join(_labels(dom, "plane"))]
    else:
        lines += ["model = annulus", f"length = {float(dom.model.translation_length)!r}"]
        if dom.model.end_distance is not None:
            lines.append(f"end_distance = {float(dom.model.end_distance)!r}")
        for end in dom.ends:
            lines.append(f"{end} = " + ", ".join(f"{float(v.coord)!r}" for v in dom.chain(end)))
            lines.append(f"{end}_labels = " + ", ".join(_labels(dom, end)))
    return "\n".join(lines) + "\n"


def _labels(dom: IdealDomain, end: str) -> List[str]:
    first = {e.start.vertex: e.label for e in dom.edges}
    return [first[v.index] for v in dom.chain(end)]


def domain_summary(dom: IdealDomain) -> dict:
    return {"model": dom.model.kind, "vertices": dom.N,
            "ends": {end: [{"coord": v.coord, "label": _labels(dom, end)[i]}
                           for i, v in enumerate(dom.chain(end))] for end in dom.ends},
            "metadata": {k: v for k, v in dom.metadata.items() if isinstance(v, (int, float, str, list))}}


# ---------------------------------------------------------------------------
# JSON

def _clean(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        f = float(x)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return float(f"{f:.12g}")
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    return x


def dumps(obj: Any) -> str:
    """JSON with sorted keys and floats rounded to 12 significant digits."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: PathLike, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


# ---------------------------------------------------------------------------
# meshes and fields

def write_mesh(path: PathLike, mesh: Mesh) -> None:
    """Vertices, triangles and boundary edges with arc markers."""
    with open(path, "w") as fh:
        fh.write(f"chart {mesh.chart}\n")
        fh.write(f"vertices {mesh.n_vertices}\n")
        for i, (x, y) in enumerate(mesh.coords):
            fh.write(f"{i} {float(x)!r} {float(y)!r} {int(mesh.dof[i])}\n")
        fh.write(f"triangles {len(mesh.triangles)}\n")
        for t in mesh.triangles:
            fh.write(f"{t[0]} {t[1]} {t[2]}\n")
        fh.write(f"markers {len(mesh.boundary_edges)}\n")
        for (a, b), m in zip(mesh.boundary_edges, mesh.edge_marker):
            fh.write(f"{a} {b} {mesh.arcs[m].name}\n")


def read_mesh_arrays(path: PathLike) -> dict:
    """The raw arrays of :func:`write_mesh`."""
    lines = Path(path).read_text().splitlines()
    out: dict = {}
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if head[0] == "chart":
            out["chart"] = head[1]
            i += 1
            continue
        n = int(head[1])
        rows = [l.split() for l in lines[i + 1:i + 1 + n]]
        if head[0] == "vertices":
            out["coords"] = np.array([[float(r[1]), float(r[2])] for r in rows])
            out["dof"] = np.array([int(r[3]) for r in rows])
        elif head[0] == "triangles":
            out["triangles"] = np.array(rows, dtype=int).reshape(-1, 3)
        elif head[0] == "markers":
            out["boundary_edges"] = np.array([[int(r[0]), int(r[1])] for r in rows]).reshape(-1, 2)
            out["markers"] = [r[2] for r in rows]
        else:
            raise FormatError(f"unknown section {head[0]!r}")
        i += 1 + n
    return out


def write_solution_csv(path: PathLike, mesh: Mesh, values: np.ndarray) -> None:
    z = mesh.disk
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex", "x", "y", "u"])
        for i in range(mesh.n_vertices):
            w.writerow([i, f"{z[i].real:.12g}", f"{z[i].imag:.12g}", f"{values[i]:.12g}"])


def write_metric_csv(path: PathLike, metric) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vertex", "x", "y", "area", "K"])
        for i, (p, a, k) in enumerate(zip(metric.coords, metric.area, metric.curvature)):
            w.writerow([i, f"{p[0]:.12g}", f"{p[1]:.12g}", f"{a:.12g}", f"{k:.12g}"])


def write_growth_csv(path: PathLike, report) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "area", "curvature", "curvature_minus"])
        for row in zip(report.r, report.area, report.curvature, report.curvature_minus):
            w.writerow([f"{x:.12g}" for x in row])
