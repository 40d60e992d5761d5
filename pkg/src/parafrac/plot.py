"""Byte-stable SVG figures: box-count ledgers and energy partial sums."""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .cover import LN2, MIN_LEVELS, ScalingLedger, default_window, estimate_dimension  # noqa: E402
from .errors import ParameterError  # noqa: E402

WIDTH, HEIGHT = 800, 600
_RC = {
    "svg.hashsalt": "parafrac",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "path.simplify": False,
}


def _figure():
    return plt.figure(figsize=(WIDTH / 72, HEIGHT / 72), dpi=72)


def _svg_bytes(fig) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def ledger_svg(ledger: ScalingLedger, window=None) -> bytes:
    """log N_k against log 2^k with the fitted regression line over the window."""
    if not ledger.levels:
        raise ParameterError("empty ledger")
    k = np.array(ledger.levels, dtype=float)
    n = np.array(ledger.counts, dtype=float)
    if window is None:
        window = default_window(ledger.levels)
        if len(window) < MIN_LEVELS:
            window = ledger.levels
    est = estimate_dimension(ledger, window=window) if len(window) >= MIN_LEVELS else None
    with plt.rc_context(_RC):
        fig = _figure()
        ax = fig.add_subplot(1, 1, 1)
        ax.plot(k * LN2, np.log(n), "o", color="black", label="occupied cells")
        if est is not None:
            w = np.array(est.window, dtype=float) * LN2
            slope = est.value / ledger.gauge_factor
            ax.plot(w, est.intercept + slope * w, "-", color="tab:red", label="least-squares fit")
            ax.annotate(f"slope {slope:.2f}", xy=(0.05, 0.92),
                        xycoords="axes fraction")
        ax.set_xlabel("log 2^k")
        ax.set_ylabel("log N_k")
        ax.legend(loc="lower right")
        return _svg_bytes(fig)


def energy_svg(betas, levels, partial_sums) -> bytes:
    """One curve per beta: partial sum against refinement level (log scale)."""
    if len(betas) == 0:
        raise ParameterError("no energy data")
    sums = np.asarray(partial_sums, dtype=float)
    if sums.shape != (len(betas), len(levels)):
        raise ParameterError("partial_sums must have shape (len(betas), len(levels))")
    with plt.rc_context(_RC):
        fig = _figure()
        ax = fig.add_subplot(1, 1, 1)
        cmap = plt.get_cmap("viridis")
        for i, b in enumerate(betas):
            ax.plot(levels, sums[i], "o-", color=cmap(i / max(1, len(betas) - 1)), label=f"beta {b:.2f}")
        ax.set_yscale("log")
        ax.set_xlabel("refinement level")
        ax.set_ylabel("discrete energy")
        ax.legend(loc="upper left", fontsize=8, ncol=2)
        return _svg_bytes(fig)


def emit_plot(data, path=None) -> bytes:
    """Render a ScalingLedger, a RunRecord or a detail CSV path to SVG bytes
    (also written to ``path`` when given)."""
    from .experiment import RunRecord

    if isinstance(data, ScalingLedger):
        svg = ledger_svg(data)
    elif isinstance(data, RunRecord):
        svg = _record_svg(data)
    elif isinstance(data, (str, Path)):
        svg = csv_svg(data)
    else:
        raise ParameterError(f"cannot plot {type(data).__name__}")
    if path is not None:
        Path(path).write_bytes(svg)
    return svg


def _first_ok(record):
    for r in record.replicas:
        if r.status == "ok" and r.details:
            return r
    raise ParameterError("run has no successful replica to plot")


def _ledger_from_rows(rows, time_axis=True):
    """Rows of (alpha, k, time_side, space_side, N_k, in_window)."""
    alpha = float(rows[0][0])
    levels = tuple(int(r[1]) for r in rows)
    counts = tuple(int(r[4]) for r in rows)
    window = tuple(int(r[1]) for r in rows if r[5] in (True, "true"))
    return ScalingLedger(alpha, levels, counts, 0, time_axis), window


def _energy_from_rows(rows):
    by_beta = defaultdict(dict)
    for b, lvl, s, *_ in rows:
        by_beta[float(b)][int(lvl)] = float(s)
    betas = sorted(by_beta)
    levels = sorted(by_beta[betas[0]])
    return betas, levels, [[by_beta[b][l] for l in levels] for b in betas]


def _record_svg(record) -> bytes:
    r = _first_ok(record)
    if record.kind == "energy_threshold":
        return energy_svg(*_energy_from_rows(r.details))
    if record.kind in ("graph_dim", "range_dim", "parabolic_dim"):
        ledger, window = _ledger_from_rows(r.details, record.kind != "range_dim")
        return ledger_svg(ledger, window)
    raise ParameterError(f"no plot for experiment kind {record.kind!r}")


def csv_svg(path) -> bytes:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ParameterError(f"{path}: no data rows")
    first = min(r["replica"] for r in rows) if "replica" in rows[0] else None
    rows = [r for r in rows if first is None or r["replica"] == first]
    if "partial_sum" in rows[0]:
        return energy_svg(*_energy_from_rows([(r["beta"], r["level"], r["partial_sum"]) for r in rows]))
    if "N_k" in rows[0]:
        keys = ("alpha", "k", "time_side", "space_side", "N_k", "in_window")
        ledger, window = _ledger_from_rows([tuple(r[c] for c in keys) for r in rows],
                                           rows[0]["time_side"] != "nan")
        return ledger_svg(ledger, window or None)
    raise ParameterError(f"{path}: unrecognised columns")
