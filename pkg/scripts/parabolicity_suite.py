"""Conformal-type diagnostics: the logarithmic curvature criterion on model
collars, round annulus moduli, and the graph area growth over a funnel end."""
import argparse
import math

import numpy as np

from hypgraph import parabolicity as P
from hypgraph.domain import builtin_domain
from hypgraph.solver import SolveConfig, js_solve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="8,32,128", help="boundary values for the end growth")
    ap.add_argument("--h", type=float, default=0.1)
    args = ap.parse_args()
    r = np.linspace(0.0, 6.0, 61)[1:]
    for name, m in (("flat", P.flat_cylinder(3.0, 12.0, 240)), ("funnel", P.funnel_collar(1.0, 6.0, 240)),
                    ("cusp", P.cusp_collar(1.0, 12.0, 240))):
        v = P.huber_check(P.distance_spheres(m, r))
        print(f"{name:7s} {v.verdict:24s} C={v.C:.4g} ratio={v.ratio:.3g} corroborated={v.corroborated}")
    for k in (1, 2):
        est = P.conformal_modulus(P.round_annulus(math.exp(2 * math.pi * k)))
        print(f"round annulus c=e^{2 * k}pi: modulus {est.modulus:.5f}")
    ex = builtin_domain("example53")
    for n in (float(x) for x in args.n.split(",")):
        u, _, _ = js_solve(ex, n, SolveConfig(h=args.h))
        g = P.graph_end_area_growth(u, ex, "upper")
        print(f"end growth n={n:g}: exponent {g.exponent:.3f}, octave ratio {g.octave_ratio:.3f}")


if __name__ == "__main__":
    main()
