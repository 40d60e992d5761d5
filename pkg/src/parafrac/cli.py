"""Command line entry point: ``parafrac <subcommand> [options]``.

Exit codes: 0 all pass, 1 tolerance failure, 2 validation error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .errors import ParameterError, PreconditionError
from .experiment import (EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, CsvSink, RunRecord,
                         check_preconditions, run_experiment, time_grid)
from .plot import emit_plot
from .rng import mix_seed, resolve_seed
from .stable_sim import simulate_path

log = logging.getLogger("parafrac")

BOX_KINDS = ("graph_dim", "range_dim", "parabolic_dim", "hitcount")
SUBCOMMAND_KINDS = {
    "boxcount": BOX_KINDS,
    "formula": ("formula_table",),
    "kernel-probe": ("kernel_sweep",),
    "energy": ("energy_threshold",),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="experiment config file")
    p.add_argument("--seed", help="master seed (decimal or 0x-hex); PARAFRAC_SEED overrides")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--replicas", type=int, help="number of replicas")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--format", choices=("csv", "table"), default="table", help="stdout format")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="parafrac", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "sample stable paths and write them as CSV",
        "boxcount": "box-count dimension of graphs or ranges",
        "formula": "closed-form table with the branch self-check",
        "kernel-probe": "Monte Carlo kernel sweep and envelope slope",
        "energy": "energy convergence and capacity threshold",
        "experiment": "run any configured experiment",
        "plot": "render a detail CSV as SVG",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        if name == "plot":
            p.add_argument("input", type=Path, help="detail CSV written by an experiment")
            p.add_argument("--out", type=Path, help="output directory (default: next to input)")
            continue
        _common(p)
        if name == "simulate":
            p.add_argument("--alpha", type=float)
            p.add_argument("--d", type=int)
            p.add_argument("--n-points", type=int)
    return ap


def make_config(args, kind_choices=None) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else None
    if cfg is None:
        if kind_choices is None:
            raise ConfigError("--config is required for this subcommand")
        cfg = ExperimentConfig(kind=kind_choices[0])
    if kind_choices is not None and cfg.kind not in kind_choices:
        raise ConfigError(f"config kind {cfg.kind!r} does not fit this subcommand (expected one of {kind_choices})")
    try:
        seed = resolve_seed(args.seed, cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.with_overrides(seed=seed, n_replicas=args.replicas, threads=args.threads,
                              out=str(args.out) if args.out else None)


def print_record(rec: RunRecord, fmt: str, stream=None) -> None:
    stream = stream or sys.stdout
    if fmt == "csv":
        stream.write(Path(rec.outputs["runs"]).read_text(encoding="utf-8"))
        return
    print(f"{rec.kind}  config {rec.config_hash}", file=stream)
    for r in rec.replicas:
        val = f"{r.estimate:.4f}" if r.status == "ok" else r.message
        print(f"  replica {r.replica:3d}  {r.status:6s}  {val}", file=stream)
    print(f"  mean {rec.mean:.4f}  stderr {rec.stderr:.4f}", file=stream)
    if rec.oracle is not None:
        o = rec.oracle
        span = f"{o.lo:.4f}" if o.lo == o.hi else f"[{o.lo:.4f}, {o.hi:.4f}]"
        print(f"  oracle {span} ({o.theorem_tag})  tol {rec.tolerance}  "
              f"{'pass' if rec.passed else 'FAIL'}", file=stream)
    for key, path in rec.outputs.items():
        print(f"  {key}: {path}", file=stream)


def cmd_simulate(args) -> int:
    cfg = make_config(args, ("graph_dim", "range_dim", "parabolic_dim", "hitcount"))
    params = cfg.params
    if args.alpha is not None or args.d is not None:
        params = dataclasses.replace(params, alpha=args.alpha or params.alpha, d=args.d or params.d)
    cfg = cfg.with_overrides(params=params, n_points=args.n_points)
    check_preconditions(cfg)
    grid = time_grid(cfg)
    out = Path(cfg.out) / "paths"
    cols = ["t"] + [f"x{j + 1}" for j in range(params.d)]
    for i in range(cfg.n_replicas):
        path = simulate_path(params, grid, mix_seed(cfg.seed, i))
        target = out / f"replica_{i:03d}.csv"
        with CsvSink(target, cols) as sink:
            for row in np.column_stack([path.times, path.positions]):
                sink.write(tuple(float(v) for v in row))
        if args.format == "table":
            inc = np.diff(path.positions, axis=0)
            print(f"replica {i}: {len(grid)} points, max |increment| {np.abs(inc).max():.4g} -> {target}")
        else:
            sys.stdout.write(target.read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_run(args, kinds=None) -> int:
    cfg = make_config(args, kinds)
    rec = run_experiment(cfg)
    print_record(rec, args.format)
    return rec.exit_code


def cmd_plot(args) -> int:
    out = args.out or args.input.parent
    out.mkdir(parents=True, exist_ok=True)
    target = out / (args.input.stem + ".svg")
    emit_plot(args.input, target)
    print(target)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "plot":
            return cmd_plot(args)
        if args.command == "experiment":
            return cmd_run(args)
        return cmd_run(args, SUBCOMMAND_KINDS[args.command])
    except (ConfigError, ParameterError, PreconditionError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
