"""Euclidean vs parabolic estimates on shared clouds, checked against the a priori interval."""
import argparse

import numpy as np

from parafrac.config import ExperimentConfig, TimeSetConfig
from parafrac.experiment import paired_estimates
from parafrac.formulas import apriori_bounds
from parafrac.stable_sim import StableParams

CASES = [
    ("graph_dim", 2.0, 1, "interval"),
    ("graph_dim", 1.2, 1, "interval"),
    ("graph_dim", 1.5, 1, "interval"),
    ("graph_dim", 1.8, 1, "interval"),
    ("range_dim", 0.7, 1, "interval"),
    ("range_dim", 1.5, 1, "interval"),
    ("range_dim", 1.5, 2, "interval"),
    ("graph_dim", 2.0, 1, "cantor"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replicas", type=int, default=4)
    ap.add_argument("--n-points", type=int, default=2**18)
    ap.add_argument("--tol", type=float, default=0.15)
    args = ap.parse_args()
    for kind, alpha, d, tset in CASES:
        cfg = ExperimentConfig(kind, StableParams(alpha, d), TimeSetConfig(kind=tset, level=14),
                               n_points=args.n_points, seed=2024)
        dim, phi = np.mean([paired_estimates(cfg, i) for i in range(args.replicas)], axis=0)
        b = apriori_bounds(alpha, d, float(np.clip(phi, 0.0, d + 1.0)))
        ok = b.lo - args.tol <= dim <= b.hi + args.tol
        print(f"{kind:10s} alpha={alpha:<4} d={d} {tset:8s} dim={dim:.3f} phi={phi:.3f} "
              f"interval=[{b.lo:.3f}, {b.hi:.3f}] {'ok' if ok else 'VIOLATED'}")


if __name__ == "__main__":
    main()
