"""Detect the divergence lines of the +-n sequence on the degenerate extension
and draw the near-unit set with the fitted geodesics."""
import argparse
import json
from pathlib import Path

from hypgraph import io
from hypgraph.domain import builtin_domain
from hypgraph.limits import component_graph, detect_divergence_lines, run_sequence
from hypgraph.render import render_field
from hypgraph.solver import SolveConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--domain", default="d0", help="builtin domain name")
    ap.add_argument("--n", default="1,2,4,8")
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--out", default="out/divergence")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dom = builtin_domain(args.domain)
    _, limit = run_sequence(dom, [float(x) for x in args.n.split(",")], SolveConfig(h=args.h))
    rep = detect_divergence_lines(limit)
    graph = component_graph(rep, limit)
    result = {"divergence": rep.to_dict(), "graph": graph.to_dict()}
    io.write_json(out / "divergence.json", result)
    render_field(limit.mesh.disk, limit.mesh.triangles, limit.norm, out / "xnorm.svg", "|X|",
                 lines=[l.candidate.geodesic for l in rep.lines], dom=dom, cmap="magma")
    print(json.dumps({"lines": [l.vertices for l in rep.lines], "arrows": graph.arrows(),
                      "acyclic": graph.acyclic}))


if __name__ == "__main__":
    main()
