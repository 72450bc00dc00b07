"""Flux of the +-n solutions on the ideal square across its a-edges, for a few
mesh sizes; the ratio to the truncated length should approach one."""
import argparse

from hypgraph.domain import builtin_domain
from hypgraph.limits import run_sequence
from hypgraph.solver import SolveConfig, flux_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", default="1,2,4,8,16")
    ap.add_argument("--h", default="0.2,0.1,0.05")
    args = ap.parse_args()
    n_list = [float(x) for x in args.n.split(",")]
    print(f"{'h':>6} {'n':>6} {'flux/length':>12} {'residual':>10} {'max|X|':>8}")
    for h in (float(x) for x in args.h.split(",")):
        seq, _ = run_sequence(builtin_domain("square"), n_list, SolveConfig(h=h))
        for n, (u, X) in zip(n_list, seq):
            rep = flux_report(u, X)
            names = [k for k in rep.flux if rep.labels.get(k) == "a"]
            ratio = sum(rep.flux[k] for k in names) / sum(rep.length[k] for k in names)
            print(f"{h:6.3f} {n:6g} {ratio:12.5f} {rep.residual:10.2e} {X.norm.max():8.5f}")


if __name__ == "__main__":
    main()
