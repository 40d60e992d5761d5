"""Time sets with known Hausdorff dimension and a small catalog of drifts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .rng import make_rng
from .stable_sim import PathSample, TimeGrid

WEIERSTRASS_TOL = 1e-12


@dataclass(frozen=True)
class TimeSet:
    kind: str
    level: int
    T_max: float
    points: np.ndarray
    ratio: float | None = None
    known_dim: float | None = None

    def grid(self) -> TimeGrid:
        return TimeGrid(self.points, self.T_max)

    def __len__(self):
        return self.points.size


def cantor_left_endpoints(level: int, ratio: float) -> np.ndarray:
    """Sorted left endpoints of the 2**level surviving intervals in [0, 1]."""
    pts = np.zeros(1)
    step = 1.0 - ratio  # offset of the right child at the first level
    scale = 1.0
    for _ in range(level):
        pts = np.concatenate([pts, pts + step * scale])
        scale *= ratio
    return np.sort(pts)


def build_time_set(kind: str, level: int, ratio: float = 1 / 3, T_max: float = 1.0) -> TimeSet:
    if level < 0:
        raise ParameterError("level must be >= 0")
    if T_max <= 0:
        raise ParameterError("T_max must be positive")
    if kind == "interval":
        pts = np.linspace(0.0, T_max, 2**level + 1)
        return TimeSet("interval", level, T_max, pts, None, 1.0)
    if kind == "cantor":
        if not 0.0 < ratio <= 0.5:
            raise ParameterError(f"cantor ratio must lie in (0, 1/2], got {ratio}")
        pts = T_max * cantor_left_endpoints(level, ratio)
        return TimeSet("cantor", level, T_max, pts, ratio, math.log(2) / math.log(1 / ratio))
    raise ParameterError(f"unknown time set kind {kind!r}")


@dataclass(frozen=True)
class DriftSpec:
    kind: str = "zero"
    d: int = 1
    T_max: float = 1.0
    constant: tuple = ()
    beta: float | None = None  # power exponent or Weierstrass exponent
    base: float = 2.0  # Weierstrass base a > 1
    path: PathSample | None = field(default=None, compare=False)
    scale: float = 1.0  # sampled_path multiplier (-1 gives the negated path)

    def __post_init__(self):
        k = self.kind
        if k not in ("zero", "constant", "power", "weierstrass", "sampled_path"):
            raise ParameterError(f"unknown drift kind {k!r}")
        if k == "constant" and len(self.constant) != self.d:
            raise ParameterError("constant drift needs a vector of length d")
        if k in ("power", "weierstrass") and (self.beta is None or not 0 < self.beta <= 1):
            raise ParameterError("power/weierstrass drift needs beta in (0, 1]")
        if k == "weierstrass" and (self.base <= 1 or self.beta >= 1):
            raise ParameterError("weierstrass drift needs base > 1 and beta in (0, 1)")
        if k == "sampled_path":
            if self.path is None:
                raise ParameterError("sampled_path drift needs a frozen path")
            object.__setattr__(self, "d", self.path.params.d)
            object.__setattr__(self, "T_max", self.path.grid.T_max)

    @property
    def holder_beta(self) -> float | None:
        if self.kind in ("zero", "constant"):
            return 1.0
        if self.kind in ("power", "weierstrass"):
            return self.beta
        return None

    @property
    def n_terms(self) -> int:
        """Weierstrass truncation: smallest K with base**(-K beta) < 1e-12."""
        return int(math.floor(-math.log(WEIERSTRASS_TOL) / (self.beta * math.log(self.base)))) + 1


def eval_drift(f: DriftSpec, t) -> np.ndarray:
    """f(t) with shape ``(d,)`` for scalar t, ``(n, d)`` for an array of times."""
    tt = np.asarray(t, dtype=float)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    if np.any(tt < 0) or np.any(tt > f.T_max):
        raise ParameterError(f"drift evaluated outside [0, {f.T_max}]")
    if f.kind == "zero":
        out = np.zeros((tt.size, f.d))
    elif f.kind == "constant":
        out = np.broadcast_to(np.asarray(f.constant, dtype=float), (tt.size, f.d)).copy()
    elif f.kind == "power":
        out = np.repeat((tt**f.beta)[:, None], f.d, axis=1)
    elif f.kind == "weierstrass":
        w = np.zeros_like(tt)
        for k in range(f.n_terms):
            w += f.base ** (-k * f.beta) * np.cos(f.base**k * tt)
        out = np.repeat(w[:, None], f.d, axis=1)
    else:
        times = f.path.grid.points
        idx = np.searchsorted(times, tt, side="right") - 1
        out = f.scale * f.path.positions[idx]
    return out[0] if scalar else out


def confine(values: np.ndarray, radius: float = 0.5) -> np.ndarray:
    """Center drift values on their mean and clip radially to ``radius``."""
    v = np.asarray(values, dtype=float)
    v = v - v.mean(axis=0)
    n = np.linalg.norm(v, axis=1, keepdims=True)
    factor = np.minimum(1.0, radius / np.where(n > 0, n, 1.0))
    return v * factor


@dataclass(frozen=True)
class HolderCertificate:
    constant: float
    constant_refined: float
    passed: bool


HOLDER_SPAN = 1e-3  # each refinement band spans three decades of separation


def _pairs(rng, n, h_lo, h_hi, T):
    h = np.exp(rng.uniform(math.log(h_lo), math.log(h_hi), n))
    s = rng.uniform(0.0, 1.0, n) * (T - h)
    s[::10] = 0.0  # endpoint singularities (t^beta at 0) need anchored pairs
    return s, s + h


def holder_certificate(f: DriftSpec, beta: float, n_pairs: int = 1000, seed: int = 0) -> HolderCertificate:
    """Empirical Holder constant over ``n_pairs`` random pairs, and the constant
    after refining to ``10 * n_pairs`` pairs.

    Coarse pairs have separations log-uniform in ``[1e-3 T, T]``; the 9 n_pairs
    refinement pairs sit strictly below, in ``[1e-6 T, 1e-3 T]``. Because every
    added pair is closer than every coarse pair, passing at ``beta`` implies
    passing at any smaller exponent.
    """
    if not 0 < beta <= 1:
        raise ParameterError("holder exponent must lie in (0, 1]")
    T = f.T_max
    rng = make_rng(seed)
    s0, t0 = _pairs(rng, n_pairs, HOLDER_SPAN * T, T, T)
    s1, t1 = _pairs(rng, 9 * n_pairs, HOLDER_SPAN**2 * T, HOLDER_SPAN * T, T)

    def ratios(s, t):
        return np.linalg.norm(eval_drift(f, t) - eval_drift(f, s), axis=1) / (t - s) ** beta

    c_coarse = float(ratios(s0, t0).max())
    c_fine = max(c_coarse, float(ratios(s1, t1).max()))
    ok = np.isfinite(c_fine) and c_fine <= 1.1 * c_coarse
    return HolderCertificate(c_coarse, c_fine, bool(ok))
