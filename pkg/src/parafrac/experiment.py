"""Replicated experiments with deterministic CSV output.

Replica ``i`` draws from ``make_rng(mix_seed(master, i))``, so results do not
depend on how many worker threads run them. Rows are written by a single
writer in replica order as soon as each replica (and all earlier ones) finish.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import formulas
from .config import ExperimentConfig
from .cover import (adaptive_occupancy, check_scale_coupling, coupled_k_max,
                    estimate_dimension, graph_cloud, hit_count_statistic, range_cloud)
from .domains import DriftSpec, build_time_set
from .energy import (MAX_CLIP_RATE, EnergyProfile, KernelQuery, capacity_threshold,
                     envelope_exponents, frostman_candidate, graph_measure_levels, kernel_sweep)
from .errors import PreconditionError
from .rng import make_rng, mix_seed
from .stable_sim import TimeGrid, simulate_path

MIN_SUCCESS = 0.8

EXIT_OK, EXIT_TOLERANCE, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3

RUN_COLUMNS = ("config_hash", "kind", "row", "seed", "status", "estimate", "stderr", "window",
               "oracle_lo", "oracle_hi", "tolerance", "verdict", "message")
BOX_COLUMNS = ("config_hash", "replica", "alpha", "k", "time_side", "space_side", "N_k", "in_window")
DETAIL_COLUMNS = {
    "graph_dim": BOX_COLUMNS,
    "range_dim": BOX_COLUMNS,
    "parabolic_dim": BOX_COLUMNS,
    "kernel_sweep": ("config_hash", "replica", "alpha", "d", "beta", "tau", "delta_norm",
                     "estimate", "stderr", "clip_rate"),
    "energy_threshold": ("config_hash", "replica", "beta", "level", "partial_sum", "verdict"),
    "hitcount": ("config_hash", "replica", "level", "windows", "mean_hits", "max_hits"),
    "formula_table": ("config_hash", "formula", "alpha", "d", "dim_T", "phi_alpha", "holder_beta",
                      "value", "lo", "hi", "theorem_tag"),
}


def fmt(v) -> str:
    """Locale-free, round-trip exact cell text."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


class CsvSink:
    """Comma-separated, header row, UTF-8, LF line endings."""

    def __init__(self, path: Path, columns):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", encoding="utf-8", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(columns)
        self.columns = tuple(columns)

    def write(self, row) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(self.columns)}")
        self._w.writerow([fmt(v) for v in row])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass(frozen=True)
class ReplicaResult:
    replica: int
    seed: int
    status: str  # "ok" or "failed"
    estimate: float = math.nan
    stderr: float = math.nan
    details: tuple = ()
    window: str = ""
    message: str = ""


@dataclass(frozen=True)
class RunRecord:
    config_hash: str
    kind: str
    replicas: tuple
    mean: float
    stderr: float
    oracle: formulas.FormulaResult | None
    tolerance: float
    passed: bool | None
    outputs: dict = field(default_factory=dict)

    @property
    def n_ok(self) -> int:
        return sum(r.status == "ok" for r in self.replicas)

    @property
    def success_fraction(self) -> float:
        return self.n_ok / len(self.replicas) if self.replicas else 1.0

    @property
    def exit_code(self) -> int:
        if self.success_fraction < MIN_SUCCESS:
            return EXIT_RUNTIME
        return EXIT_TOLERANCE if self.passed is False else EXIT_OK


def aggregate(replicas) -> tuple[float, float]:
    """Mean and standard error over successful replicas."""
    vals = np.array([r.estimate for r in replicas if r.status == "ok"], dtype=float)
    if vals.size == 0:
        return math.nan, math.nan
    se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return float(vals.mean()), se


def judge(mean: float, oracle: formulas.FormulaResult | None, tol: float) -> bool | None:
    if oracle is None:
        return None
    if math.isnan(mean):
        return False
    return oracle.lo - tol <= mean <= oracle.hi + tol


# ---------------------------------------------------------------- setup


def drift_of(cfg: ExperimentConfig) -> DriftSpec:
    dc = cfg.drift
    return DriftSpec(dc.kind, cfg.params.d, cfg.time_set.T_max, tuple(dc.constant), dc.beta, dc.base, scale=dc.scale)


def time_grid(cfg: ExperimentConfig) -> TimeGrid:
    ts = cfg.time_set
    if ts.kind == "cantor":
        return build_time_set("cantor", ts.level, ts.ratio, ts.T_max).grid()
    return TimeGrid.uniform(cfg.n_points, ts.T_max)


def dim_T(cfg: ExperimentConfig) -> float:
    ts = cfg.time_set
    return 1.0 if ts.kind == "interval" else math.log(2) / math.log(1 / ts.ratio)


def _cells_alpha(cfg: ExperimentConfig) -> float:
    return cfg.params.alpha if cfg.levels.cells == "parabolic" else 1.0


def check_preconditions(cfg: ExperimentConfig) -> None:
    """Raise PreconditionError for configs that cannot run (grid/scale coupling etc)."""
    drift_of(cfg)
    if cfg.kind in ("graph_dim", "range_dim", "parabolic_dim", "hitcount") and cfg.levels.k_max is not None:
        grid = time_grid(cfg)
        spacing = grid.min_spacing / max(1.0, grid.T_max)
        if 2.0**-cfg.levels.k_max < 4.0 * spacing:
            raise PreconditionError(
                f"levels.k_max = {cfg.levels.k_max} is finer than 4x the grid spacing {spacing:.3g}")
    if cfg.kind == "parabolic_dim" and cfg.levels.cells != "parabolic":
        raise PreconditionError("parabolic_dim needs levels.cells = parabolic")
    if cfg.kind == "kernel_sweep":
        k = cfg.kernel
        for j in k.scales:
            x = 2.0**-j
            tau, delta = ((x, k.delta) if k.sweep == "tau" else
                          (k.tau, x) if k.sweep == "delta" else (x ** max(cfg.params.alpha, 1.0), x))
            KernelQuery(cfg.params.alpha, cfg.params.d, k.beta, tau, delta, k.n_mc)
    if cfg.kind == "energy_threshold" and cfg.energy.measure == "graph" and cfg.time_set.kind != "interval":
        raise PreconditionError("graph energy measures need an interval time set")


def oracle_for(cfg: ExperimentConfig) -> formulas.FormulaResult | None:
    a, d, dt = cfg.params.alpha, cfg.params.d, dim_T(cfg)
    plain = cfg.drift.kind in ("zero", "constant")

    def point(v, tag):
        return formulas.FormulaResult(v, v, v, tag, {"alpha": a, "d": d, "dim_T": dt})

    if cfg.kind == "graph_dim" and plain and cfg.levels.cells == "euclidean":
        return point(formulas.process_graph_dim(a, d, dt), "graph_dim")
    if cfg.kind == "parabolic_dim" and plain:
        return point(formulas.process_graph_phi(a, dt), "constant_drift_phi")
    if cfg.kind == "range_dim" and plain and cfg.levels.cells == "euclidean":
        return point(formulas.process_range_dim(a, d, dt), "range_dim")
    if cfg.kind == "kernel_sweep":
        k = cfg.kernel
        e = max(envelope_exponents(k.kernel, a, d, k.beta, "tau" if k.sweep == "tau" else "delta"))
        return formulas.FormulaResult(None, e, math.inf, f"{k.kernel}_envelope_{k.sweep}", {"beta": k.beta})
    if cfg.kind == "energy_threshold" and cfg.drift.kind == "zero":
        if cfg.energy.measure == "graph":
            return point(formulas.process_graph_dim(a, d, dt), "graph_dim")
        return point(dt, "dim_T")
    return None


# ---------------------------------------------------------------- replicas


def _box_replica(cfg, seed, workers):
    grid = time_grid(cfg)
    path = simulate_path(cfg.params, grid, seed)
    drift = drift_of(cfg)
    k_max = coupled_k_max(path) if cfg.levels.k_max is None else cfg.levels.k_max
    check_scale_coupling(path, k_max)
    if cfg.kind == "range_dim":
        cloud, time_axis = range_cloud(path, drift), False
    else:
        cloud, time_axis = graph_cloud(path, drift), True
    ledger = adaptive_occupancy(cloud, _cells_alpha(cfg), k_max, time_axis,
                                cfg.levels.k_min, cfg.levels.saturation, workers)
    est = estimate_dimension(ledger)
    win = set(est.window)
    details = []
    for k, c in zip(ledger.levels, ledger.counts):
        t_side, x_side = ledger.side_lengths(k)
        details.append((ledger.alpha, k, t_side, x_side, c, k in win))
    return est.value, est.stderr, tuple(details), f"{est.window[0]}:{est.window[-1]}"


def _kernel_fixed(k) -> float:
    return k.delta if k.sweep == "tau" else k.tau


def _kernel_replica(cfg, seed, workers):
    k, p = cfg.kernel, cfg.params
    sw = kernel_sweep(k.kernel, p.alpha, p.d, k.beta, k.sweep, k.scales, _kernel_fixed(k),
                      k.n_mc, rng=make_rng(seed))
    if sw.clip_rate >= MAX_CLIP_RATE:
        raise RuntimeError(f"kernel clip rate {sw.clip_rate:.2g} above {MAX_CLIP_RATE}")
    details = []
    for x, r in zip(sw.scales, sw.estimates):
        tau, delta = ((x, k.delta) if k.sweep == "tau" else
                      (k.tau, x) if k.sweep == "delta" else (x ** max(p.alpha, 1.0), x))
        details.append((p.alpha, p.d, k.beta, tau, delta, r.estimate, r.stderr, r.clip_rate))
    return sw.slope, math.nan, tuple(details), ""


def _energy_measures(cfg, seed):
    e = cfg.energy
    if e.measure == "graph":
        grid = TimeGrid.uniform(2 ** max(e.refinement) + 1, cfg.time_set.T_max)
        path = simulate_path(cfg.params, grid, seed)
        return graph_measure_levels(path, e.refinement, drift_of(cfg))
    ts = cfg.time_set
    drift = drift_of(cfg)
    return [frostman_candidate(build_time_set(ts.kind, n, ts.ratio, ts.T_max), drift, clip=True)
            for n in e.refinement]


def _energy_replica(cfg, seed, workers):
    e = cfg.energy
    profile = EnergyProfile(_energy_measures(cfg, seed), levels=e.refinement)
    res = capacity_threshold(profile, e.beta_grid)
    details = []
    for b in e.beta_grid:
        rep = profile.report(b)
        details.extend((b, lvl, s, rep.verdict) for lvl, s in zip(rep.levels, rep.partial_sums))
    if res.status != "ok":
        raise RuntimeError(res.message)
    return res.beta_star, math.nan, tuple(details), ""


def _hit_replica(cfg, seed, workers):
    grid = time_grid(cfg)
    path = simulate_path(cfg.params, grid, seed)
    k_max = coupled_k_max(path) if cfg.levels.k_max is None else cfg.levels.k_max
    details = []
    for k in range(cfg.levels.k_min, k_max + 1):
        m = hit_count_statistic(path, k)
        details.append((k, m.size, float(m.mean()), int(m.max())))
    return details[-1][2], math.nan, tuple(details), ""


def paired_estimates(cfg: ExperimentConfig, replica: int) -> tuple[float, float]:
    """Euclidean and alpha-parabolic estimates on the same cloud.

    Ranges are embedded as (0, x) in R^(1+d) so both covers use a time axis.
    """
    path = simulate_path(cfg.params, time_grid(cfg), mix_seed(cfg.seed, replica))
    drift = drift_of(cfg)
    if cfg.kind == "range_dim":
        spatial = range_cloud(path, drift)
        cloud = np.column_stack([np.zeros(spatial.shape[0]), spatial])
    else:
        cloud = graph_cloud(path, drift)
    k_max = coupled_k_max(path) if cfg.levels.k_max is None else cfg.levels.k_max
    out = []
    for alpha in (1.0, cfg.params.alpha):
        ledger = adaptive_occupancy(cloud, alpha, k_max, True, cfg.levels.k_min, cfg.levels.saturation)
        out.append(estimate_dimension(ledger).value)
    return out[0], out[1]


RUNNERS = {
    "graph_dim": _box_replica,
    "range_dim": _box_replica,
    "parabolic_dim": _box_replica,
    "kernel_sweep": _kernel_replica,
    "energy_threshold": _energy_replica,
    "hitcount": _hit_replica,
}


def run_replica(cfg: ExperimentConfig, i: int, workers: int = 1) -> ReplicaResult:
    seed = mix_seed(cfg.seed, i)
    try:
        est, se, details, window = RUNNERS[cfg.kind](cfg, seed, workers)
    except Exception as exc:  # a failed replica becomes a failed row
        return ReplicaResult(i, seed, "failed", message=f"{type(exc).__name__}: {exc}")
    return ReplicaResult(i, seed, "ok", float(est), float(se), details, window)


# ---------------------------------------------------------------- driver


def formula_table_rows(steps: int = 5):
    """Deterministic table of every closed form over a coarse parameter lattice."""
    formulas.self_check()
    for x in formulas.sweep_lattice(steps):
        for name in formulas.FORMULAS:
            if name.startswith("brownian") and x.alpha != 2.0:
                continue
            v, tag = formulas.evaluate(name, x)
            lo, hi = (v if isinstance(v, tuple) else (v, v))
            value = None if isinstance(v, tuple) else v
            yield (name, x.alpha, x.d, x.dim_T, x.phi_alpha, x.holder_beta, value, lo, hi, tag)


def output_paths(cfg: ExperimentConfig, out_dir=None) -> dict:
    base = Path(out_dir if out_dir is not None else cfg.out)
    return {"runs": base / f"{cfg.kind}_runs.csv", "detail": base / f"{cfg.kind}_detail.csv"}


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int | None = None) -> RunRecord:
    """Run all replicas and write ``<kind>_runs.csv`` and ``<kind>_detail.csv``."""
    check_preconditions(cfg)
    threads = threads or cfg.threads
    paths = output_paths(cfg, out_dir)
    h = cfg.config_hash
    oracle = oracle_for(cfg)
    o_lo = oracle.lo if oracle else None
    o_hi = oracle.hi if oracle else None

    if cfg.kind == "formula_table":
        with CsvSink(paths["detail"], DETAIL_COLUMNS["formula_table"]) as det:
            n = 0
            for row in formula_table_rows():
                det.write((h,) + row)
                n += 1
        with CsvSink(paths["runs"], RUN_COLUMNS) as runs:
            runs.write((h, cfg.kind, "aggregate", cfg.seed, "ok", float(n), None, "", None, None,
                        cfg.tolerance, "pass", "branch self-check clean"))
        return RunRecord(h, cfg.kind, (), float(n), 0.0, None, cfg.tolerance, True, paths)

    # replicas run concurrently; inner box counting gets the spare threads
    outer = min(threads, cfg.n_replicas)
    inner = max(1, threads // outer)
    results = []
    with CsvSink(paths["runs"], RUN_COLUMNS) as runs, \
            CsvSink(paths["detail"], DETAIL_COLUMNS[cfg.kind]) as det, \
            ThreadPoolExecutor(outer) as pool:
        futures = [pool.submit(run_replica, cfg, i, inner) for i in range(cfg.n_replicas)]
        for fut in futures:  # in replica order, whatever the completion order
            r = fut.result()
            results.append(r)
            runs.write((h, cfg.kind, r.replica, r.seed, r.status, r.estimate if r.status == "ok" else None,
                        r.stderr if r.status == "ok" else None, r.window, o_lo, o_hi, cfg.tolerance, "", r.message))
            for row in r.details:
                det.write((h, r.replica) + tuple(row))
        mean, se = aggregate(results)
        passed = judge(mean, oracle, cfg.tolerance)
        n_ok = sum(r.status == "ok" for r in results)
        verdict = "" if passed is None else ("pass" if passed else "fail")
        runs.write((h, cfg.kind, "aggregate", cfg.seed, f"{n_ok}/{len(results)}", mean, se, "",
                    o_lo, o_hi, cfg.tolerance, verdict, oracle.theorem_tag if oracle else ""))
    return RunRecord(h, cfg.kind, tuple(results), mean, se, oracle, cfg.tolerance, passed, paths)
