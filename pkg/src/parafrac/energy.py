"""Monte Carlo difference kernels, discrete Riesz energies and a capacity probe.

The kernels absorb the stable process into the energy integrand::

    K^beta(tau, delta)     = E |(tau, sign(tau) X_|tau| + delta)|^-beta
    kappa^beta(tau, delta) = E |sign(tau) X_|tau| + delta|^-beta

Both are estimated from one shared batch of X_1 draws rescaled by
``|tau|^(1/alpha)``, so sweeps over tau, delta and beta use common random
numbers and their per-sample orderings are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domains import DriftSpec, TimeSet, confine, eval_drift
from .errors import InsufficientDataError, NotApplicableError, ParameterError
from .rng import make_rng, mix_seed
from .stable_sim import PathSample, StableParams, sample_stable_increment

CLIP_NORM = 1e-9
MAX_CLIP_RATE = 1e-4
CONVERGING_RATIO = 1.1
DIVERGING_RATIO = 2.0
THRESHOLD_RESOLUTION = 0.05


@dataclass(frozen=True)
class KernelQuery:
    alpha: float
    d: int
    beta: float
    tau: float
    delta: tuple | np.ndarray = 0.0
    n_mc: int = 100_000

    def __post_init__(self):
        StableParams(self.alpha, self.d)
        if self.beta < 0:
            raise ParameterError("beta must be >= 0")
        if not 0 < abs(self.tau) <= 1:
            raise ParameterError("|tau| must lie in (0, 1]")
        delta = np.broadcast_to(np.asarray(self.delta, dtype=float), (self.d,)).copy()
        if np.linalg.norm(delta) > 1:
            raise ParameterError("|delta| must lie in [0, 1]")
        object.__setattr__(self, "delta", delta)
        if self.n_mc < 1000:
            raise ParameterError("n_mc must be >= 1e3")


@dataclass(frozen=True)
class KernelEstimate:
    estimate: float
    stderr: float
    clip_rate: float

    @property
    def valid(self) -> bool:
        return self.clip_rate < MAX_CLIP_RATE


def unit_samples(alpha: float, d: int, n_mc: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of X_1, shape (n_mc, d); reuse across queries for common random numbers."""
    return sample_stable_increment(StableParams(alpha, d), 1.0, rng, size=n_mc)


def _samples_for(q: KernelQuery, rng, samples):
    if samples is None:
        rng = rng if rng is not None else make_rng(0)
        samples = unit_samples(q.alpha, q.d, q.n_mc, rng)
    return np.asarray(samples)


def _moment(norms: np.ndarray, beta: float) -> KernelEstimate:
    clipped = norms < CLIP_NORM
    vals = np.maximum(norms, CLIP_NORM) ** (-beta)
    n = vals.size
    return KernelEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n)), float(clipped.mean()))


def _spatial(q: KernelQuery, y: np.ndarray) -> np.ndarray:
    return math.copysign(1.0, q.tau) * abs(q.tau) ** (1.0 / q.alpha) * y + q.delta


def kernel_K(q: KernelQuery, rng=None, samples=None) -> KernelEstimate:
    if q.beta == 0:
        return KernelEstimate(1.0, 0.0, 0.0)
    x = _spatial(q, _samples_for(q, rng, samples))
    norms = np.sqrt(q.tau**2 + np.einsum("ij,ij->i", x, x))
    return _moment(norms, q.beta)


def kernel_kappa(q: KernelQuery, rng=None, samples=None) -> KernelEstimate:
    if q.beta >= q.d:
        raise ParameterError("kappa kernel needs beta < d")
    if q.beta == 0:
        return KernelEstimate(1.0, 0.0, 0.0)
    x = _spatial(q, _samples_for(q, rng, samples))
    return _moment(np.sqrt(np.einsum("ij,ij->i", x, x)), q.beta)


def envelope_exponents(kernel: str, alpha: float, d: int, beta: float, sweep: str) -> list[float]:
    """Exponents e of the upper envelopes |tau|^e or |delta|^e that apply."""
    out = []
    if kernel == "K" and sweep == "tau":
        out.append(-beta)
        if beta < d:
            out.append(-beta / alpha)
        elif beta > d:
            out.append((1 - 1 / alpha) * d - beta)
    elif kernel == "K" and sweep == "delta":
        if alpha <= 1:
            out.append(-beta)
        if alpha >= 1 and beta < d:
            out.append(-beta)
        if alpha >= 1 and beta > d:
            out.append((alpha - 1) * d - alpha * beta)
    elif kernel == "kappa":
        out.append(-beta / alpha if sweep == "tau" else -beta)
    else:
        raise ParameterError(f"unknown kernel/sweep {kernel}/{sweep}")
    return out


SWEEPS = ("tau", "delta", "delta_coupled")


@dataclass(frozen=True)
class KernelSweep:
    kernel: str
    sweep: str
    scales: np.ndarray  # the swept |tau| or |delta|
    estimates: tuple  # KernelEstimate per scale
    slope: float
    intercept: float
    exponent: float  # best applicable envelope exponent

    @property
    def clip_rate(self) -> float:
        return max(e.clip_rate for e in self.estimates)


def kernel_sweep(kernel: str, alpha: float, d: int, beta: float, sweep: str, exponents,
                 fixed: float = 0.0, n_mc: int = 100_000, rng=None, samples=None) -> KernelSweep:
    """Evaluate K or kappa on the scales ``2**-j`` with one shared sample batch.

    ``tau`` sweeps |tau| with delta = ``fixed``; ``delta`` sweeps |delta| with
    tau = ``fixed``; ``delta_coupled`` sweeps |delta| along the regime edge
    tau = |delta|^(alpha v 1), where the delta envelopes are attained.
    """
    if sweep not in SWEEPS:
        raise ParameterError(f"sweep must be one of {SWEEPS}")
    exponents = list(exponents)
    if len(exponents) < 2:
        raise ParameterError("a slope needs at least two scales")
    if samples is None:
        samples = unit_samples(alpha, d, n_mc, rng if rng is not None else make_rng(0))
    fn = kernel_K if kernel == "K" else kernel_kappa
    xs = np.array([2.0**-j for j in exponents])
    ests = []
    for x in xs:
        if sweep == "tau":
            tau, delta = x, fixed
        elif sweep == "delta":
            tau, delta = fixed, x
        else:
            tau, delta = x ** max(alpha, 1.0), x
        ests.append(fn(KernelQuery(alpha, d, beta, tau, delta, len(samples)), samples=samples))
    slope, intercept = fit_loglog(xs, [e.estimate for e in ests])
    env = envelope_exponents(kernel, alpha, d, beta, "tau" if sweep == "tau" else "delta")
    return KernelSweep(kernel, sweep, xs, tuple(ests), slope, intercept, max(env))


TAU_SCALES = tuple(range(10, 27, 2))
DELTA_SCALES = tuple(range(2, 11))
COUPLED_SCALES = tuple(range(4, 13))


def envelope_cases(alphas=(0.7, 1.5, 1.9), dims=(1, 2)):
    """Standard sweep cases ``(kernel, alpha, d, beta, sweep, scales, fixed)``.

    One beta below and one above d per dimension. K tau sweeps use fine scales
    because the beta > d correction decays only like |tau|^((1 - 1/alpha)(beta - d));
    kappa scales exactly in tau, and its fine scales would only hit the clip.
    For alpha > 1 and beta > d the delta envelope is attained only along
    tau = |delta|^alpha, which the coupled sweep follows; in d >= 2 that
    estimate is dominated by rare near-zero draws, so it is left out there.
    """
    out = []
    for alpha in alphas:
        for d in dims:
            for beta in (d - 0.5, d + 0.5):
                tau_fixed = 2.0**-12 if alpha < 1 else 2.0**-16
                out.append(("K", alpha, d, beta, "tau", TAU_SCALES, 0.0))
                if beta < d:
                    out.append(("kappa", alpha, d, beta, "tau", DELTA_SCALES, 0.0))
                    out.append(("K", alpha, d, beta, "delta", DELTA_SCALES, tau_fixed))
                    out.append(("kappa", alpha, d, beta, "delta", DELTA_SCALES, tau_fixed))
                elif alpha < 1:
                    out.append(("K", alpha, d, beta, "delta", DELTA_SCALES, tau_fixed))
                elif d == 1:
                    out.append(("K", alpha, d, beta, "delta_coupled", COUPLED_SCALES, 0.0))
    return out


def envelope_suite(n_mc: int = 100_000, seed: int = 0, cases=None) -> list[tuple]:
    """Run ``envelope_cases`` with one shared sample batch per (alpha, d); returns (case, sweep) pairs."""
    batches = {}
    out = []
    for case in cases if cases is not None else envelope_cases():
        kernel, alpha, d, beta, sweep, scales, fixed = case
        if (alpha, d) not in batches:
            batches[alpha, d] = unit_samples(alpha, d, n_mc, make_rng(mix_seed(seed, len(batches))))
        out.append((case, kernel_sweep(kernel, alpha, d, beta, sweep, scales, fixed, samples=batches[alpha, d])))
    return out


def fit_loglog(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept of log y against log x."""
    slope, intercept = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope), float(intercept)


# ---------------------------------------------------------------- measures


@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray  # (n, 1 + d) or (n, m)
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float)
        if pts.shape[0] == 0:
            raise ParameterError("empty measure")
        if w.shape != (pts.shape[0],) or np.any(w < 0):
            raise ParameterError("weights must be nonnegative, one per atom")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=float)
        n = pts.shape[0]
        return cls(pts, np.full(n, 1.0 / n) if n else np.zeros(0))

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return self.points.shape[0]


def frostman_candidate(time_set: TimeSet, drift: DriftSpec | None = None, clip: bool = False) -> DiscreteMeasure:
    """Uniform probability on the graph points (t, f(t)) over the level-n time set."""
    if len(time_set) == 0:
        raise ParameterError("empty time set")
    t = time_set.points
    d = drift.d if drift is not None else 1
    vals = eval_drift(drift, t) if drift is not None else np.zeros((t.size, d))
    if clip:
        vals = confine(vals)
    return DiscreteMeasure.uniform(np.column_stack([t, vals]))


def cylinder_mass(mu: DiscreteMeasure, lower, sides) -> float:
    """mu of the half-open box [lower, lower + sides)."""
    lo = np.asarray(lower, dtype=float)
    hi = lo + np.asarray(sides, dtype=float)
    inside = np.all((mu.points >= lo) & (mu.points < hi), axis=1)
    return float(mu.weights[inside].sum())


# ---------------------------------------------------------------- energies

_BLOCK = 512


def _pair_blocks(mu: DiscreteMeasure):
    """Yield (pairwise differences, weight products) over all pairs i < j, block by block."""
    p, w = mu.points, mu.weights
    n = p.shape[0]
    for i0 in range(0, n - 1, _BLOCK):
        i1 = min(i0 + _BLOCK, n)
        iu, ju = np.triu_indices(i1 - i0, k=1)
        yield p[i0 + iu] - p[i0 + ju], w[i0 + iu] * w[i0 + ju]
        if i1 < n:
            diff = (p[i0:i1, None, :] - p[None, i1:, :]).reshape(-1, p.shape[1])
            yield diff, np.outer(w[i0:i1], w[i1:]).ravel()


def energy_value(mu: DiscreteMeasure, beta: float, kernel: str = "euclidean_beta",
                 alpha: float | None = None, samples: np.ndarray | None = None) -> float:
    """Off-diagonal double sum sum_{i != j} mu_i mu_j K(p_i - p_j).

    For ``K_beta`` / ``kappa_beta`` the points are (t, x) and the kernel is the
    Monte Carlo mean over the shared ``samples`` of X_1.
    """
    if len(mu) < 2:
        raise InsufficientDataError("energy needs at least two atoms")
    total = 0.0
    if kernel == "euclidean_beta":
        for diff, ww in _pair_blocks(mu):
            r = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            total += float(np.dot(ww, np.maximum(r, CLIP_NORM) ** (-beta)))
        return 2.0 * total
    if kernel not in ("K_beta", "kappa_beta"):
        raise ParameterError(f"unknown kernel {kernel!r}")
    if alpha is None or samples is None:
        raise ParameterError("process kernels need alpha and shared samples")
    d = mu.points.shape[1] - 1
    if kernel == "kappa_beta" and beta >= d:
        raise ParameterError("kappa kernel needs beta < d")
    y = np.asarray(samples)
    for diff, ww in _pair_blocks(mu):
        tau = diff[:, 0]
        scale = np.sign(tau) * np.abs(tau) ** (1.0 / alpha)
        for k in range(diff.shape[0]):
            x = scale[k] * y + diff[k, 1:]
            sq = np.einsum("ij,ij->i", x, x)
            if kernel == "K_beta":
                sq = sq + tau[k] ** 2
            total += ww[k] * float(np.mean(np.maximum(np.sqrt(sq), CLIP_NORM) ** (-beta)))
    return 2.0 * total


@dataclass(frozen=True)
class EnergyReport:
    beta: float
    levels: tuple
    partial_sums: tuple
    verdict: str
    growth_ratio: float | None = None
    threshold_estimate: float | None = None


def growth_verdict(partial_sums, converging: float = CONVERGING_RATIO, diverging: float = DIVERGING_RATIO):
    """Compare the last two increments of the partial sums across refinements.

    A convergent energy adds geometrically shrinking amounts per refinement, a
    divergent one growing amounts; the ratio of the last two increments decides.
    """
    s = np.asarray(partial_sums, dtype=float)
    if s.size < 3:
        return "inconclusive", None
    inc = np.diff(s)
    if inc[-1] <= 0:
        return "converging", 0.0
    if inc[-2] <= 0:
        return "diverging", math.inf
    g = float(inc[-1] / inc[-2])
    if g < converging:
        return "converging", g
    if g > diverging:
        return "diverging", g
    return "inconclusive", g


def energy_integral(measures, kernel: str = "euclidean_beta", beta: float = 1.0, rng=None,
                    alpha: float | None = None, n_mc: int = 2000, levels=None) -> EnergyReport:
    """Energies of a refinement family of measures, with a convergence verdict."""
    if isinstance(measures, DiscreteMeasure):
        measures = [measures]
    samples = None
    if kernel != "euclidean_beta":
        if alpha is None:
            raise ParameterError("process kernels need alpha")
        d = measures[0].points.shape[1] - 1
        rng = rng if rng is not None else make_rng(0)
        samples = unit_samples(alpha, d, n_mc, rng)
    sums = tuple(energy_value(m, beta, kernel, alpha, samples) for m in measures)
    verdict, g = growth_verdict(sums)
    levels = tuple(levels) if levels is not None else tuple(len(m) for m in measures)
    return EnergyReport(beta, levels, sums, verdict, g)


class EnergyProfile:
    """Weighted histograms of log pair distances, one per refinement level.

    Riesz energies for any beta are then ``sum_b w_b exp(-beta l_b)``; the bin
    width keeps the relative error below ``beta * bin_width / 2``.
    """

    def __init__(self, measures, levels=None, bin_width: float = 1e-3,
                 log_min: float = math.log(CLIP_NORM), log_max: float = math.log(1e4)):
        self.levels = tuple(levels) if levels is not None else tuple(len(m) for m in measures)
        self.log_min, self.bin_width = log_min, bin_width
        nb = int(math.ceil((log_max - log_min) / bin_width))
        self.centers = log_min + (np.arange(nb) + 0.5) * bin_width
        self.hists = [self._hist(m, nb) for m in measures]

    def _hist(self, mu, nb):
        h = np.zeros(nb)
        w = mu.weights
        uniform = bool(np.all(w == w[0]))
        for diff, ww in _pair_blocks(mu):
            # float32 logs are ample for 1e-3 bins and roughly halve the cost
            sq = np.maximum(np.einsum("ij,ij->i", diff, diff), CLIP_NORM**2).astype(np.float32)
            idx = ((0.5 * np.log(sq) - self.log_min) / self.bin_width).astype(np.int64)
            np.clip(idx, 0, nb - 1, out=idx)
            if uniform:
                h += np.bincount(idx, minlength=nb)
            else:
                h += np.bincount(idx, weights=ww, minlength=nb)
        return 2.0 * (h * w[0] ** 2 if uniform else h)

    def partial_sums(self, beta: float) -> tuple:
        f = np.exp(-beta * self.centers)
        return tuple(float(np.dot(h, f)) for h in self.hists)

    def report(self, beta: float) -> EnergyReport:
        s = self.partial_sums(beta)
        v, g = growth_verdict(s)
        return EnergyReport(beta, self.levels, s, v, g)


@dataclass(frozen=True)
class ThresholdResult:
    beta_star: float | None
    status: str  # "ok" or "inconclusive"
    reports: tuple = field(default=(), repr=False)
    message: str = ""


def capacity_threshold(profile: EnergyProfile, beta_grid, resolution: float = THRESHOLD_RESOLUTION) -> ThresholdResult:
    """Largest beta with a converging energy verdict, refined by bisection."""
    grid = sorted(float(b) for b in beta_grid)
    if len(grid) < 5:
        raise ParameterError("beta grid needs at least 5 values")
    reports = [profile.report(b) for b in grid]
    conv = [r.verdict == "converging" for r in reports]
    if all(conv) or not any(conv):
        which = "converging" if all(conv) else "non-converging"
        return ThresholdResult(None, "inconclusive", tuple(reports),
                               f"all grid values {which}; widen the beta grid")
    i = max(k for k, c in enumerate(conv) if c)
    if i == len(grid) - 1:
        return ThresholdResult(None, "inconclusive", tuple(reports),
                               "largest grid value converges; widen the beta grid upward")
    lo, hi = grid[i], grid[i + 1]
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        rep = profile.report(mid)
        reports.append(rep)
        if rep.verdict == "converging":
            lo = mid
        else:
            hi = mid
    return ThresholdResult(lo, "ok", tuple(reports))


def graph_measure_levels(path: PathSample, exponents, drift: DriftSpec | None = None):
    """Nested uniform measures on the sampled graph, subsampled to 2**m + 1 atoms."""
    from .cover import graph_cloud

    cloud = graph_cloud(path, drift)
    n = cloud.shape[0] - 1
    out = []
    for m in exponents:
        step = n // 2**m
        if step < 1 or step * 2**m != n:
            raise ParameterError(f"path with {n + 1} points cannot be subsampled to 2^{m}+1")
        out.append(DiscreteMeasure.uniform(cloud[::step]))
    return out
