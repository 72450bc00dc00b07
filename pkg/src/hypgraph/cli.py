"""Command-line scenario runner.

Each verb loads a domain (builtin or file), runs one experiment and writes a
JSON summary, plus CSV/SVG artifacts when an output directory is given.
Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 ambiguous
detection.
"""
from __future__ import annotations

import os

_threads = os.environ.get("HYPGRAPH_THREADS")
if _threads and _threads.isdigit():
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import logging  # noqa: E402
import math  # noqa: E402
import re  # noqa: E402
import sys  # noqa: E402
from dataclasses import dataclass, field  # noqa: E402
from pathlib import Path  # noqa: E402
from typing import Dict, List, Optional, Tuple  # noqa: E402

import numpy as np  # noqa: E402

from . import domain as D  # noqa: E402
from . import io  # noqa: E402

VERBS = ("check", "solve", "sequence", "divergence", "extend", "iterate", "parabolicity", "modulus", "render")
EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_AMBIGUOUS = 0, 2, 3, 4

log = logging.getLogger("hypgraph")


@dataclass
class Scenario:
    operation: str
    builtin: Optional[str] = None
    domain_file: Optional[str] = None
    name: str = ""
    n_list: List[float] = field(default_factory=lambda: [8.0])
    t_list: List[float] = field(default_factory=lambda: [0.4, 0.2, 0.1])
    h: float = 0.1
    eps: float = 0.05
    r_grid: Optional[List[float]] = None
    out: Optional[str] = None
    seed: Optional[int] = None
    steps: int = 2
    pair: Optional[Tuple[int, int]] = None
    metric: Optional[str] = None
    length: float = 8.0
    circumference: float = 1.0
    round_annulus: Optional[float] = None
    end: str = D.UPPER
    source: Optional[str] = None

    def validate(self) -> None:
        if self.operation not in VERBS:
            raise ValueError(f"unknown operation {self.operation!r}")
        if self.builtin and self.domain_file:
            raise ValueError("give either a builtin or a domain file")
        if self.domain_file and not Path(self.domain_file).exists():
            raise FileNotFoundError(f"domain file {self.domain_file} not found")
        if not 0 < self.h <= 1:
            raise ValueError(f"h={self.h} outside (0, 1]")
        if not 0 < self.eps < 1:
            raise ValueError(f"eps={self.eps} outside (0, 1)")
        if any(n <= 0 for n in self.n_list):
            raise ValueError("n values must be positive")
        if any(not 0 <= t <= math.pi / 4 for t in self.t_list):
            raise ValueError("t values must lie in [0, pi/4]")
        if not 0 <= self.steps <= 3:
            raise ValueError("steps must lie in 0..3")

    def load_domain(self) -> D.IdealDomain:
        if self.domain_file:
            return io.read_domain(self.domain_file)
        name = self.builtin or "square"
        m = re.fullmatch(r"dt\(([^)]+)\)", name)
        if m:
            return D.builtin_domain("dt", io.parse_float(m.group(1)))
        return D.builtin_domain(name)


# ---------------------------------------------------------------------------
# operations

def _solve_config(sc: Scenario):
    from .solver import SolveConfig
    return SolveConfig(h=sc.h, seed=sc.seed)


def op_check(sc: Scenario, dom, out: Optional[Path]) -> dict:
    rep = D.js_check(dom)
    if out:
        from .render import render_domain
        render_domain(dom, out / "domain.svg")
    return {"js": rep.to_dict()}


def op_solve(sc: Scenario, dom, out: Optional[Path]) -> dict:
    from .solver import js_solve
    u, X, rep = js_solve(dom, sc.n_list[-1], _solve_config(sc))
    lo, hi = u.data_bounds
    res = {"n": sc.n_list[-1], "flux": rep.to_dict(), "iterations": u.iterations,
           "gradient_residual": u.residual, "energy": u.energy,
           "range": [float(u.values.min()), float(u.values.max())], "data_bounds": [lo, hi],
           "max_norm_X": float(X.norm.max()), "mesh": u.mesh.summary()}
    res["mesh"].pop("arcs", None)
    if out:
        from .render import render_field
        io.write_mesh(out / "mesh.txt", u.mesh)
        io.write_solution_csv(out / "solution.csv", u.mesh, u.values)
        render_field(u.mesh.disk, u.mesh.triangles, u.values, out / "solution.svg", "u", dom=dom)
        render_field(u.mesh.disk, u.mesh.triangles, X.norm, out / "xnorm.svg", "|X|", dom=dom)
    return res


def op_sequence(sc: Scenario, dom, out: Optional[Path]) -> dict:
    from .limits import run_sequence
    from .solver import flux_report
    seq, limit = run_sequence(dom, sc.n_list, _solve_config(sc))
    rows = []
    for n, (u, X) in zip(sc.n_list, seq):
        fr = flux_report(u, X)
        rows.append({"n": n, "residual": fr.residual, "ratio": fr.ratio, "max_norm_X": float(X.norm.max())})
    return {"n_list": sc.n_list, "solves": rows, "max_norm_X": float(limit.norm.max()),
            "cauchy_max": float(limit.cauchy.max()) if len(limit.cauchy) else 0.0}


def op_divergence(sc: Scenario, dom, out: Optional[Path]) -> dict:
    from .limits import component_graph, detect_divergence_lines, run_sequence
    _, limit = run_sequence(dom, sc.n_list, _solve_config(sc))
    rep = detect_divergence_lines(limit, eps=sc.eps)
    graph = component_graph(rep, limit)
    if out:
        from .render import render_field
        render_field(limit.mesh.disk, limit.mesh.triangles, limit.norm, out / "divergence.svg", "|X|",
                     lines=[l.candidate.geodesic for l in rep.lines], dom=dom, cmap="magma")
    return {"divergence": rep.to_dict(), "graph": graph.to_dict(),
            "drift_increasing": {f"{a}->{b}": v for (a, b), v in graph.drift_increasing().items()}}


def op_extend(sc: Scenario, dom, out: Optional[Path]) -> dict:
    from .limits import extension_experiment
    pair = sc.pair or D.example_extension_pair(dom)
    table = extension_experiment(dom, pair, sc.t_list, config=_solve_config(sc), n=sc.n_list[-1])
    return {"pair": list(pair), "table": table.to_dict(), "monotone": table.monotone()}


def op_iterate(sc: Scenario, dom, out: Optional[Path]) -> dict:
    from .limits import IterationConfig, iterate_construction
    cfg = IterationConfig(solve=_solve_config(sc), n=sc.n_list[-1])
    res = iterate_construction(dom, sc.steps, cfg)
    return {"iteration": res.to_dict()}


def op_parabolicity(sc: Scenario, dom, out: Optional[Path]) -> dict:
    from . import parabolicity as P
    if sc.metric:
        makers = {"flat": P.flat_cylinder, "funnel": P.funnel_collar, "cusp": P.cusp_collar}
        if sc.metric not in makers:
            raise ValueError(f"metric must be one of {sorted(makers)}")
        metric = makers[sc.metric](sc.circumference, sc.length)
        r = np.asarray(sc.r_grid) if sc.r_grid else np.linspace(sc.length / 40, sc.length / 2, 20)
        growth = P.distance_spheres(metric, r)
        verdict = P.huber_check(growth)
        if out:
            from .render import render_growth
            io.write_metric_csv(out / "metric.csv", metric)
            io.write_growth_csv(out / "growth.csv", growth)
            render_growth(growth.r, growth.area, out / "growth.svg")
        return {"metric": sc.metric, "growth": growth.to_dict(), "huber": verdict.to_dict()}
    from .solver import js_solve
    u, _, _ = js_solve(dom, sc.n_list[-1], _solve_config(sc))
    g = P.graph_end_area_growth(u, dom, sc.end, r_grid=sc.r_grid)
    if out:
        from .render import render_growth
        render_growth(g.r, g.area, out / "growth.svg", slope=g.exponent, title="graph area over the end")
    return {"end": sc.end, "n": sc.n_list[-1], "growth": g.to_dict()}


def op_modulus(sc: Scenario, dom, out: Optional[Path]) -> dict:
    from . import parabolicity as P
    c = sc.round_annulus if sc.round_annulus is not None else math.exp(2 * math.pi)
    if c <= 1:
        raise ValueError("the round annulus needs c > 1")
    est = P.conformal_modulus(P.round_annulus(c))
    return {"c": c, "modulus": est.modulus, "energy": est.energy, "expected": math.log(c) / (2 * math.pi)}


def op_render(sc: Scenario, dom, out: Optional[Path]) -> dict:
    from .render import render_directory
    src = Path(sc.source or sc.out or ".")
    made = render_directory(src)
    return {"rendered": [p.name for p in made]}


OPERATIONS = {"check": op_check, "solve": op_solve, "sequence": op_sequence, "divergence": op_divergence,
              "extend": op_extend, "iterate": op_iterate, "parabolicity": op_parabolicity,
              "modulus": op_modulus, "render": op_render}


# ---------------------------------------------------------------------------
# error mapping and the runner

def exit_code_for(exc: BaseException) -> int:
    from .limits import AmbiguousFit, StepRejected
    from .mesh import MeshingFailed
    from .parabolicity import ParabolicityError
    from .render import MissingArtifact
    from .solver import SolverError
    if isinstance(exc, AmbiguousFit):
        return EXIT_AMBIGUOUS
    if isinstance(exc, (SolverError, MeshingFailed, StepRejected, np.linalg.LinAlgError)):
        return EXIT_SOLVER
    if isinstance(exc, (D.DomainError, ParabolicityError, MissingArtifact, ValueError,
                        FileNotFoundError, KeyError)):
        return EXIT_INVALID
    return EXIT_SOLVER


def run_scenario(sc: Scenario) -> Tuple[int, dict]:
    out = Path(sc.out) if sc.out else None
    try:
        sc.validate()
        if out:
            out.mkdir(parents=True, exist_ok=True)
        dom = None
        if sc.operation not in ("modulus", "render") and not (sc.operation == "parabolicity" and sc.metric):
            dom = sc.load_domain()
            if out:
                (out / "domain.txt").write_text(io.domain_to_text(dom))
        result = OPERATIONS[sc.operation](sc, dom, out)
        summary = {"operation": sc.operation, "name": sc.name or sc.builtin or sc.domain_file or "",
                   "status": "ok", "result": result}
        if dom is not None:
            summary["domain"] = io.domain_summary(dom)
        code = EXIT_OK
    except Exception as exc:  # every module error becomes a machine-readable report
        code = exit_code_for(exc)
        summary = {"operation": sc.operation, "status": "error", "exit_code": code,
                   "error": {"type": type(exc).__name__, "message": str(exc)}}
        closeness = getattr(exc, "closeness", None)
        if closeness is not None:
            summary["error"]["closeness"] = closeness
    if out:
        io.write_json(out / "summary.json", summary)
    return code, summary


def _floats(s: str) -> List[float]:
    return io.parse_floats(s)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypgraph", description=__doc__.splitlines()[0])
    p.add_argument("operation", choices=VERBS)
    p.add_argument("--builtin", help="square | example53 | d0 | dt(<t>)")
    p.add_argument("--domain", dest="domain_file", help="domain description file")
    p.add_argument("--name")
    p.add_argument("--n", dest="n_list", help="boundary data value(s), comma separated")
    p.add_argument("--t", dest="t_list", help="extension parameters, comma separated")
    p.add_argument("--h", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--r-grid", dest="r_grid", help="radii, comma separated")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--pair", help="edge indices b,a for extend")
    p.add_argument("--metric", choices=("flat", "funnel", "cusp"))
    p.add_argument("--length", type=float)
    p.add_argument("--circumference", type=float)
    p.add_argument("--round-annulus", dest="round_annulus", help="outer radius c, e.g. e2pi")
    p.add_argument("--end", choices=(D.UPPER, D.LOWER))
    p.add_argument("--from", dest="source", help="scenario directory to render")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_CONVERT = {
    "n_list": _floats, "t_list": _floats, "r_grid": _floats, "h": float, "eps": float, "seed": int,
    "steps": int, "length": float, "circumference": float, "round_annulus": io.parse_float,
    "pair": lambda s: tuple(int(x) for x in s.replace(",", " ").split()),
}


def scenario_from_args(argv: Optional[List[str]] = None) -> Scenario:
    args = build_parser().parse_args(argv)
    values: Dict[str, object] = {}
    if args.config:
        kv = io.read_key_values(args.config)
        known = set(Scenario.__dataclass_fields__)
        for k, v in kv.items():
            key = {"n": "n_list", "t": "t_list", "domain": "domain_file"}.get(k, k)
            if key not in known or key == "operation":
                raise ValueError(f"unknown config key {k!r}")
            values[key] = v
    for k, v in vars(args).items():
        if k in ("operation", "config", "verbose") or v is None:
            continue
        values[k] = v
    for k, v in list(values.items()):
        if isinstance(v, str) and k in _CONVERT:
            values[k] = _CONVERT[k](v)
    return Scenario(operation=args.operation, **values)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    verbose = "-v" in argv or "--verbose" in argv
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(name)s: %(message)s")
    if _threads is not None and not (_threads.isdigit() and int(_threads) >= 1):
        sys.stdout.write(io.dumps({"status": "error", "exit_code": EXIT_INVALID,
                                   "error": {"type": "ValueError",
                                             "message": "HYPGRAPH_THREADS must be a positive integer"}}))
        return EXIT_INVALID
    try:
        sc = scenario_from_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    except Exception as exc:
        sys.stdout.write(io.dumps({"status": "error", "exit_code": EXIT_INVALID,
                                   "error": {"type": type(exc).__name__, "message": str(exc)}}))
        return EXIT_INVALID
    code, summary = run_scenario(sc)
    sys.stdout.write(io.dumps(summary))
    return code


if __name__ == "__main__":
    sys.exit(main())
