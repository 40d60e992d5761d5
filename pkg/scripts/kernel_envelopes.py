"""Fitted log-log slopes of the difference kernels against their envelope exponents."""
import argparse
import time

from parafrac.energy import envelope_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-mc", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=8)
    ap.add_argument("--slack", type=float, default=0.1)
    args = ap.parse_args()
    t0 = time.perf_counter()
    rows = envelope_suite(args.n_mc, args.seed)
    print(f"{'kernel':6s} {'alpha':>5s} {'d':>2s} {'beta':>5s} {'sweep':14s} {'scales':>8s} "
          f"{'slope':>8s} {'envelope':>8s} {'margin':>7s}")
    for (kernel, alpha, d, beta, sweep, scales, _), sw in rows:
        margin = sw.slope - sw.exponent + args.slack
        print(f"{kernel:6s} {alpha:5.2f} {d:2d} {beta:5.2f} {sweep:14s} {scales[0]:>3d}..{scales[-1]:<3d} "
              f"{sw.slope:8.3f} {sw.exponent:8.3f} {margin:7.3f}{'' if margin >= 0 else '  FAIL'}")
    print(f"{len(rows)} sweeps in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
