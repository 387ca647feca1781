#!/usr/bin/env python3
"""Run the full-scale benchmark: four topologies at n=64, five averaging
periods, three seeds, one shared stepsize, and write one CSV per topology.

The defaults match the acceptance protocol (n=64, d=20, m=500, lambda=0.01,
additive noise sigma=1, 2000 iterations). Expect roughly half a minute per
topology. Plot the results with the frontend tool:

    node frontend/dist/cli.js --in results/ring.csv --out results/ring.png
"""

import argparse
import sys
import time
from pathlib import Path

from gtpga.harness import main as gtpga_main

TOPOLOGIES = ("ring", "meshgrid2d", "star", "hypercube")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--iters", type=int, default=2000)
    parser.add_argument("--seeds", default="1,2,3")
    parser.add_argument("--taus", default="20,50,100,200,inf")
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--cadence", type=int, default=5)
    parser.add_argument("--topologies", default=",".join(TOPOLOGIES))
    args = parser.parse_args()

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for topo in args.topologies.split(","):
        out = out_dir / f"{topo}.csv"
        started = time.perf_counter()
        code = gtpga_main([
            "sweep",
            "--topology", topo,
            "--tau", args.taus,
            "--seeds", args.seeds,
            "--iters", str(args.iters),
            "--sigma", str(args.sigma),
            "--cadence", str(args.cadence),
            "--out", str(out),
        ])
        if code != 0:
            print(f"{topo}: sweep failed with exit code {code}", file=sys.stderr)
            return code
        print(f"{topo}: wrote {out} in {time.perf_counter() - started:.0f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
