"""Occupancy counts of alpha-parabolic cylinder lattices and box dimensions.

At level ``k`` a cylinder has time side ``2**-k`` and space side
``2**(-k/alpha)``. Cells are half-open and anchored at the origin, so every
point of a cloud falls in exactly one cell. Counts of occupied cells across
levels give a box-counting (Minkowski) estimate, used as a computable proxy
for the Hausdorff-type dimension; in general it is an upper bound.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .domains import DriftSpec, eval_drift
from .errors import InsufficientDataError, ParameterError, PreconditionError
from .stable_sim import PathSample

LN2 = math.log(2.0)
TRIM_COARSE = 2
TRIM_FINE = 2
MIN_LEVELS = 4
K_MIN = 2
SATURATION = 0.25


def cell_sides(alpha: float, k: int, ndim: int, time_axis: bool = True) -> np.ndarray:
    space = 2.0 ** (-k / alpha)
    sides = np.full(ndim, space)
    if time_axis:
        sides[0] = 2.0**-k
    return sides


def cell_index(alpha: float, k: int, point, time_axis: bool = True) -> tuple:
    """Lattice coordinate of the cell containing ``point`` = (t, x_1, ..., x_d)."""
    if k < 0:
        raise ParameterError("level must be >= 0")
    p = np.asarray(point, dtype=float)
    sides = cell_sides(alpha, k, p.size, time_axis)
    return tuple(int(v) for v in np.floor(p / sides))


def _cell_keys(points: np.ndarray, alpha: float, k: int, time_axis: bool) -> np.ndarray:
    idx = np.floor(points / cell_sides(alpha, k, points.shape[1], time_axis)).astype(np.int64)
    return idx


def _distinct_rows(idx: np.ndarray) -> np.ndarray:
    """Unique rows of an integer index array (packed into one int64 when it fits)."""
    if idx.shape[1] == 1:
        return np.unique(idx[:, 0])[:, None]
    lo = idx.min(axis=0)
    span = idx.max(axis=0) - lo + 1
    if float(np.prod(span.astype(float))) < 2.0**62:
        shifted = idx - lo
        key = shifted[:, 0].copy()
        for j in range(1, idx.shape[1]):
            key *= span[j]
            key += shifted[:, j]
        key = np.unique(key)
        out = np.empty((key.size, idx.shape[1]), dtype=np.int64)
        for j in range(idx.shape[1] - 1, 0, -1):
            out[:, j] = key % span[j]
            key //= span[j]
        out[:, 0] = key
        return out + lo
    return np.unique(idx, axis=0)


def occupied_cells(points, alpha: float, k: int, time_axis: bool = True, workers: int = 1) -> np.ndarray:
    """Distinct occupied cell indices; chunks are counted separately and merged by union."""
    pts = np.asarray(points, dtype=float)
    if workers <= 1 or pts.shape[0] < 2 * workers:
        return _distinct_rows(_cell_keys(pts, alpha, k, time_axis))
    chunks = np.array_split(pts, workers)
    with ThreadPoolExecutor(workers) as pool:
        parts = list(pool.map(lambda c: _distinct_rows(_cell_keys(c, alpha, k, time_axis)), chunks))
    return _distinct_rows(np.concatenate(parts))


@dataclass(frozen=True)
class ScalingLedger:
    alpha: float
    levels: tuple
    counts: tuple
    n_points: int
    time_axis: bool = True
    diameter_convention: str = "diam_gauge"

    def side_lengths(self, k: int) -> tuple[float, float]:
        time_side = 2.0**-k if self.time_axis else float("nan")
        return time_side, 2.0 ** (-k / self.alpha)

    @property
    def gauge_factor(self) -> float:
        """Ratio log(1/|P_k|) / log(2^k) inverted: |P_k| ~ 2^(-k / gauge_factor)."""
        return max(1.0, self.alpha) if self.time_axis else self.alpha


def occupancy(points, alpha: float, levels, time_axis: bool = True, workers: int = 1) -> ScalingLedger:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] == 0:
        raise ParameterError("empty point cloud")
    levels = tuple(int(k) for k in levels)
    if not levels:
        raise ParameterError("no levels given")
    counts = tuple(int(occupied_cells(pts, alpha, k, time_axis, workers).shape[0]) for k in levels)
    return ScalingLedger(float(alpha), levels, counts, pts.shape[0], time_axis)


def adaptive_occupancy(points, alpha: float, k_max: int, time_axis: bool = True,
                       k_min: int = K_MIN, saturation: float = SATURATION, workers: int = 1) -> ScalingLedger:
    """Count levels k_min, k_min + 1, ... up to k_max, stopping once the cloud saturates.

    A level is kept while N_k <= saturation * n: past that point most occupied
    cells hold a single sample and the count tracks n, not the set.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if not 0 < saturation <= 1:
        raise ParameterError("saturation must lie in (0, 1]")
    limit = saturation * pts.shape[0]
    levels, counts = [], []
    for k in range(k_min, k_max + 1):
        c = int(occupied_cells(pts, alpha, k, time_axis, workers).shape[0])
        if c > limit:
            break
        levels.append(k)
        counts.append(c)
    if not levels:
        raise InsufficientDataError("cloud saturates at the coarsest level")
    return ScalingLedger(float(alpha), tuple(levels), tuple(counts), pts.shape[0], time_axis)


def coupled_k_max(path: PathSample) -> int:
    """Finest level whose time side is at least 4 grid spacings."""
    spacing = path.grid.min_spacing / max(1.0, path.grid.T_max)
    return int(math.floor(-math.log2(4.0 * spacing) + 1e-9))


def union_ledger(a: ScalingLedger, b: ScalingLedger, points_a, points_b) -> ScalingLedger:
    """Ledger of the union cloud (recounted, not summed)."""
    if a.levels != b.levels or a.alpha != b.alpha:
        raise ParameterError("ledgers must share alpha and levels")
    return occupancy(np.concatenate([points_a, points_b]), a.alpha, a.levels, a.time_axis)


@dataclass(frozen=True)
class DimEstimate:
    value: float
    stderr: float
    window: tuple
    convention: str
    intercept: float = 0.0


def default_window(levels) -> tuple:
    levels = tuple(levels)
    return levels[TRIM_COARSE: len(levels) - TRIM_FINE]


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    dof = x.size - 2
    se = math.sqrt(float((resid**2).sum()) / dof / sxx) if dof > 0 else 0.0
    return slope, intercept, se


def estimate_dimension(ledger: ScalingLedger, convention: str | None = None, window=None) -> DimEstimate:
    """Least-squares slope of log N_k against the log inverse cell size.

    ``time_gauge`` regresses on ``log 2^k`` and multiplies by ``alpha v 1``;
    ``diam_gauge`` regresses on ``log 1/|P_k|`` with ``|P_k| ~ 2^(-k min(1, 1/alpha))``.
    Both go through the same integer-level fit, so they agree exactly.
    """
    convention = convention or ledger.diameter_convention
    if convention not in ("time_gauge", "diam_gauge"):
        raise ParameterError(f"unknown convention {convention!r}")
    win = default_window(ledger.levels) if window is None else tuple(window)
    if len(win) < MIN_LEVELS:
        raise InsufficientDataError(f"need >= {MIN_LEVELS} levels in the window, got {len(win)}")
    lookup = dict(zip(ledger.levels, ledger.counts))
    try:
        n = np.array([lookup[k] for k in win], dtype=float)
    except KeyError as exc:
        raise ParameterError(f"window level {exc} not in ledger") from None
    x = np.array(win, dtype=float) * LN2
    slope, intercept, se = _fit(x, np.log(n))
    g = ledger.gauge_factor
    return DimEstimate(slope * g, se * g, win, convention, intercept)


def graph_cloud(path: PathSample, drift: DriftSpec | None = None) -> np.ndarray:
    """Points (t, X_t + f(t)); times beyond 1 are rescaled into [0, 1]."""
    t = path.times
    pos = path.positions
    if drift is not None and drift.kind != "zero":
        pos = pos + eval_drift(drift, t)
    T = path.grid.T_max
    tt = t / T if T > 1.0 else t
    return np.column_stack([tt, pos])


def range_cloud(path: PathSample, drift: DriftSpec | None = None) -> np.ndarray:
    return graph_cloud(path, drift)[:, 1:]


def check_scale_coupling(path: PathSample, k_max: int) -> None:
    spacing = path.grid.min_spacing / max(1.0, path.grid.T_max)
    if 2.0**-k_max < 4.0 * spacing:
        raise PreconditionError(
            f"level {k_max} is finer than 4x the grid spacing {spacing:.3g}"
        )


def hit_count_statistic(path: PathSample, k: int) -> np.ndarray:
    """Per time window of length 2**-k: number of distinct space cells of side
    ``2**(-k/alpha)`` visited by the sampled path (windows with no samples are skipped)."""
    check_scale_coupling(path, k)
    alpha = path.params.alpha
    cloud = graph_cloud(path)
    idx = _cell_keys(cloud, alpha, k, True)
    cells = _distinct_rows(idx)
    _, m = np.unique(cells[:, 0], return_counts=True)
    return m
