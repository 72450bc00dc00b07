"""Two steps of the exhaustion: extend every consecutive pair of edges, pick the
extension parameter by closeness, and measure graph annulus moduli and
boundary distances."""
import argparse
import logging

from hypgraph import io
from hypgraph.domain import builtin_domain
from hypgraph.limits import IterationConfig, iterate_construction
from hypgraph.solver import SolveConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=2)
    ap.add_argument("--n", type=float, default=32.0)
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--out", default="out/iteration.json")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    res = iterate_construction(builtin_domain("example53"), args.steps,
                               IterationConfig(solve=SolveConfig(h=args.h), n=args.n))
    io.write_json(args.out, res.to_dict())
    for s in res.steps:
        print(f"step {s.index}: vertices {s.domain.N}, t {s.t}, closeness {s.closeness}, "
              f"delta {s.delta}, boundary distance {s.boundary_distance:.4f}, moduli {s.moduli}")
    print("distance gains", res.distance_gains(), "constant", res.distance_constant)


if __name__ == "__main__":
    main()
