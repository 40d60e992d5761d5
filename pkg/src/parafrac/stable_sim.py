"""Isotropic alpha-stable Levy paths in R^d.

The increment over a gap ``dt`` is drawn by Gaussian subordination,
``X_dt = sqrt(2 S) Z`` with ``Z ~ N(0, I_d)`` and ``S`` a positive
``alpha/2``-stable variable with ``E exp(-lam S) = exp(-dt lam^(alpha/2))``.
This reproduces the characteristic function ``exp(-dt |xi|^alpha)`` exactly in
every dimension (the Levy exponent constant is fixed to 1) and collapses to
Brownian motion with variance ``2 dt`` per coordinate at ``alpha = 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import NotApplicableError, ParameterError
from .rng import make_rng


@dataclass(frozen=True)
class StableParams:
    alpha: float
    d: int = 1
    scale_c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ParameterError(f"alpha must lie in (0, 2], got {self.alpha}")
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"d must be a positive integer, got {self.d}")
        if self.scale_c != 1.0:
            raise ParameterError("only the normalisation scale_c = 1 is supported")


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray
    T_max: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ParameterError("time grid must be a non-empty 1-d array")
        if pts[0] != 0.0:
            raise ParameterError("time grid must start at 0")
        if np.any(np.diff(pts) <= 0):
            raise ParameterError("time grid must be strictly increasing")
        if pts[-1] > self.T_max:
            raise ParameterError("time grid exceeds T_max")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, n_points: int, T_max: float = 1.0) -> "TimeGrid":
        """``n_points`` equi-spaced times from 0 to ``T_max`` inclusive."""
        if n_points < 1:
            raise ParameterError("need at least one grid point")
        if n_points == 1:
            return cls(np.zeros(1), T_max)
        return cls(np.linspace(0.0, T_max, n_points), T_max)

    @property
    def min_spacing(self) -> float:
        if self.points.size < 2:
            return float("inf")
        return float(np.diff(self.points).min())

    def __len__(self):
        return self.points.size


@dataclass(frozen=True)
class PathSample:
    params: StableParams
    grid: TimeGrid
    positions: np.ndarray  # shape (n, d)
    seed: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def times(self) -> np.ndarray:
        return self.grid.points

    def __len__(self):
        return self.grid.points.size


def sample_positive_stable(beta: float, rng: np.random.Generator, size=None):
    """Positive ``beta``-stable draw(s) with ``E exp(-lam S) = exp(-lam^beta)``.

    Uses Kanter's representation with ``U ~ U(0, pi)`` and ``E ~ Exp(1)``::

        S = sin(beta U) / sin(U)^(1/beta) * (sin((1 - beta) U) / E)^((1 - beta) / beta)
    """
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    u = np.pi * (1.0 - rng.random(size))  # (0, pi]
    e = rng.standard_exponential(size)
    a = np.sin(beta * u) / np.sin(u) ** (1.0 / beta)
    b = (np.sin((1.0 - beta) * u) / e) ** ((1.0 - beta) / beta)
    return a * b


def _subordinator_scale(params: StableParams, dt, rng, size):
    # variance multiplier 2*S for the Gaussian part
    if params.alpha == 2.0:
        return 2.0 * np.broadcast_to(np.asarray(dt, dtype=float), size if size is not None else ())
    s1 = sample_positive_stable(params.alpha / 2.0, rng, size)
    return 2.0 * np.asarray(dt, dtype=float) ** (2.0 / params.alpha) * s1


def sample_stable_increment(params: StableParams, dt, rng: np.random.Generator, size=None):
    """Draw ``X_dt``; returns shape ``(d,)`` or ``(size, d)``.

    ``dt`` may be an array broadcastable to ``size``.
    """
    dt_arr = np.asarray(dt, dtype=float)
    if np.any(dt_arr <= 0):
        raise ParameterError("dt must be positive")
    var = _subordinator_scale(params, dt_arr, rng, size)
    shape = (params.d,) if size is None else (int(size), params.d)
    z = rng.standard_normal(shape)
    return np.sqrt(var)[..., None] * z if size is not None else np.sqrt(var) * z


def simulate_path(params: StableParams, grid: TimeGrid, seed: int) -> PathSample:
    """Cumulative sums of independent increments over the grid gaps.

    Deterministic in ``(params, grid, seed)``; the stream is Philox keyed by ``seed``.
    """
    gaps = np.diff(grid.points)
    pos = np.zeros((grid.points.size, params.d))
    if gaps.size:
        rng = make_rng(seed)
        inc = sample_stable_increment(params, gaps, rng, size=gaps.size)
        np.cumsum(inc, axis=0, out=pos[1:])
    return PathSample(params, grid, pos, seed)


@dataclass(frozen=True)
class IsotropyReport:
    statistic: float  # smallest per-coordinate p-value
    p_value: float  # Bonferroni-adjusted
    threshold: float
    passed: bool
    per_coordinate: tuple


def isotropy_check(samples, threshold: float = 0.01, n_bins: int = 50) -> IsotropyReport:
    """Chi-square test that directions ``X/|X|`` are uniform on the sphere.

    Each coordinate ``u_j`` of a uniform unit vector satisfies
    ``u_j^2 ~ Beta(1/2, (d-1)/2)`` with a symmetric sign, so its exact CDF maps
    it to U(0,1); the mapped values are binned and chi-square tested.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise NotApplicableError("isotropy check needs d >= 2")
    if x.shape[0] < 10_000:
        raise ParameterError("isotropy check needs at least 1e4 samples")
    norms = np.linalg.norm(x, axis=1)
    x = x[norms > 0]
    u = x / np.linalg.norm(x, axis=1, keepdims=True)
    d = u.shape[1]
    pvals = []
    for j in range(d):
        c = u[:, j]
        cdf = 0.5 + 0.5 * np.sign(c) * stats.beta.cdf(c * c, 0.5, (d - 1) / 2.0)
        counts, _ = np.histogram(cdf, bins=n_bins, range=(0.0, 1.0))
        pvals.append(float(stats.chisquare(counts).pvalue))
    pmin = min(pvals)
    adj = min(1.0, pmin * d)
    return IsotropyReport(pmin, adj, threshold, adj > threshold, tuple(pvals))
