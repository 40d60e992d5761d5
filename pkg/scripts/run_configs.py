"""Run experiment configs and render their detail CSVs as SVG.

    python scripts/run_configs.py                       # every config in scripts/configs
    python scripts/run_configs.py scripts/configs/cantor_graph.ini --threads 4
"""
import argparse
import sys
import time
from pathlib import Path

from parafrac.config import load_config
from parafrac.errors import ParameterError
from parafrac.experiment import run_experiment
from parafrac.plot import emit_plot

HERE = Path(__file__).resolve().parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", type=Path)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--no-plots", action="store_true")
    args = ap.parse_args(argv)
    paths = args.configs or sorted((HERE / "configs").glob("*.ini"))
    worst = 0
    for path in paths:
        cfg = load_config(path)
        t0 = time.perf_counter()
        rec = run_experiment(cfg, threads=args.threads)
        oracle = "-" if rec.oracle is None else f"{rec.oracle.lo:.4f}"
        verdict = {None: "n/a", True: "pass", False: "FAIL"}[rec.passed]
        done = f"{rec.n_ok}/{len(rec.replicas)}" if rec.replicas else "-"
        print(f"{path.stem:24s} {rec.kind:16s} mean {rec.mean:9.4f}  oracle {oracle:>8s}  "
              f"{verdict:4s}  {done:>5s} ok  {time.perf_counter() - t0:6.1f}s")
        if not args.no_plots:
            try:
                emit_plot(rec, Path(rec.outputs["detail"]).with_suffix(".svg"))
            except ParameterError:
                pass  # kinds without a figure
        worst = max(worst, rec.exit_code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
