"""Normalised differences between the +-n solution on the orbit example and on
its extensions by one rhombus, as the extension parameter shrinks."""
import argparse

from hypgraph.domain import builtin_domain, example_extension_pair
from hypgraph.limits import extension_experiment
from hypgraph.solver import SolveConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", default="0.4,0.2,0.1,0.05")
    ap.add_argument("--n", type=float, default=32.0)
    ap.add_argument("--h", type=float, default=0.1)
    args = ap.parse_args()
    dom = builtin_domain("example53")
    tab = extension_experiment(dom, example_extension_pair(dom), [float(x) for x in args.t.split(",")],
                               config=SolveConfig(h=args.h), n=args.n)
    print(f"compact set: {tab.compact_size} mesh vertices")
    print(f"{'t':>6} {'sup |u-u_t|':>12} {'sup |grad|':>12}")
    for r in tab.rows:
        print(f"{r.t:6.3f} {r.sup:12.5f} {r.grad_sup:12.5f}")
    print("monotone:", tab.monotone())


if __name__ == "__main__":
    main()
