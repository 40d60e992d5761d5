"""Closed-form dimension values and bounds for stable processes with drift.

Every piecewise formula is a list of branches with explicit predicates.
``evaluate`` fires all branches whose predicate holds; at shared boundaries
several may fire and their values must coincide (checked to 1e-12).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import NotApplicableError, ParameterError

AGREE_TOL = 1e-12


@dataclass(frozen=True)
class FormulaInputs:
    alpha: float
    d: int = 1
    dim_T: float = 1.0
    phi_alpha: float | None = None
    holder_beta: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ParameterError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.d < 1:
            raise ParameterError("d must be >= 1")
        if not 0 <= self.dim_T <= 1:
            raise ParameterError("dim_T must lie in [0, 1]")
        if self.phi_alpha is not None and not 0 <= self.phi_alpha <= self.d + 1:
            raise ParameterError("phi_alpha must lie in [0, d + 1]")
        if self.holder_beta is not None and not 0 < self.holder_beta <= 1:
            raise ParameterError("holder_beta must lie in (0, 1]")


@dataclass(frozen=True)
class FormulaResult:
    value: float | None
    lo: float
    hi: float
    theorem_tag: str
    assumptions: dict = field(default_factory=dict)

    @property
    def is_interval(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class Branch:
    tag: str
    when: Callable[[FormulaInputs], bool]
    value: Callable[[FormulaInputs], float | tuple]


class BranchConflict(AssertionError):
    pass


def _need_phi(x: FormulaInputs) -> float:
    if x.phi_alpha is None:
        raise ParameterError("phi_alpha is required")
    return x.phi_alpha


def _need_beta(x: FormulaInputs) -> float:
    if x.holder_beta is None:
        raise ParameterError("holder_beta is required")
    return x.holder_beta


# dim of the graph of X + f; below alpha = 1 phi_alpha is read as phi_1
GRAPH_DIM = [
    Branch("alpha<=1", lambda x: x.alpha <= 1, lambda x: _need_phi(x)),
    Branch("alpha>=1", lambda x: x.alpha >= 1,
           lambda x: min(_need_phi(x), _need_phi(x) / x.alpha + (1 - 1 / x.alpha) * x.d)),
]

RANGE_DIM = [
    Branch("alpha<=1", lambda x: x.alpha <= 1, lambda x: min(x.alpha * _need_phi(x), x.d)),
    Branch("alpha>=1", lambda x: x.alpha >= 1, lambda x: min(_need_phi(x), x.d)),
]

# (lower, upper) for the Euclidean dimension of a set with parabolic dimension phi
APRIORI = [
    Branch("alpha<=1", lambda x: x.alpha <= 1,
           lambda x: (_need_phi(x) + (1 - 1 / x.alpha) * x.d,
                      min(_need_phi(x), x.alpha * _need_phi(x) + 1 - x.alpha))),
    Branch("alpha>=1", lambda x: x.alpha >= 1,
           lambda x: (_need_phi(x) + 1 - x.alpha,
                      min(_need_phi(x), _need_phi(x) / x.alpha + (1 - 1 / x.alpha) * x.d))),
]

# (lower, upper) for phi_alpha of a set whose Euclidean dimension is phi_alpha (read as phi_1)
REVERSE = [
    Branch("alpha<=1", lambda x: x.alpha <= 1,
           lambda x: (max(_need_phi(x), _need_phi(x) / x.alpha + 1 - 1 / x.alpha),
                      min(_need_phi(x) + (1 / x.alpha - 1) * x.d, x.d + 1))),
    Branch("alpha>=1", lambda x: x.alpha >= 1,
           lambda x: (max(_need_phi(x), x.alpha * _need_phi(x) + (1 - x.alpha) * x.d),
                      min(_need_phi(x) + x.alpha - 1, x.d + 1))),
]

CONSTANT_PHI = [
    Branch("alpha<=1", lambda x: x.alpha <= 1, lambda x: x.dim_T),
    Branch("alpha>=1", lambda x: x.alpha >= 1, lambda x: x.alpha * x.dim_T),
]


def _holder_b2(x):
    b = _need_beta(x)
    return min(x.alpha * x.dim_T + x.d * (1 - x.alpha * b), x.dim_T / b, x.d + 1)


HOLDER_PHI = [
    Branch("alpha<=1", lambda x: x.alpha <= 1,
           lambda x: min(x.dim_T + x.d * (1 / x.alpha - _need_beta(x)),
                         x.dim_T / (x.alpha * _need_beta(x)), x.d + 1)),
    Branch("1<=alpha<=1/beta", lambda x: 1 <= x.alpha and x.alpha * _need_beta(x) <= 1, _holder_b2),
    Branch("alpha>=1/beta", lambda x: x.alpha * _need_beta(x) >= 1,
           lambda x: min(x.alpha * x.dim_T, x.d + 1)),
]

# Brownian motion plus a beta-Holder drift; inputs use alpha = 2
BROWNIAN_GRAPH = [
    Branch("beta<=(dimT-1/2)/d", lambda x: _need_beta(x) <= (x.dim_T - 0.5) / x.d,
           lambda x: x.d + 0.5),
    Branch("(dimT-1/2)/d<=beta<=dimT/d^1/2",
           lambda x: (x.dim_T - 0.5) / x.d <= _need_beta(x) <= min(x.dim_T / x.d, 0.5),
           lambda x: x.dim_T + x.d * (1 - _need_beta(x))),
    Branch("dimT/d<=beta<=1/2", lambda x: x.dim_T / x.d <= _need_beta(x) <= 0.5,
           lambda x: x.dim_T / _need_beta(x) if _need_beta(x) > 0 else math.inf),
    Branch("beta>=1/2", lambda x: _need_beta(x) >= 0.5,
           lambda x: min(2 * x.dim_T, x.dim_T + x.d / 2)),
]

BROWNIAN_RANGE = [
    Branch("dimT/d<=beta<=1/2", lambda x: x.dim_T / x.d <= _need_beta(x) <= 0.5,
           lambda x: x.dim_T / _need_beta(x)),
    Branch("beta>=1/2", lambda x: _need_beta(x) >= 0.5, lambda x: min(2 * x.dim_T, x.d)),
    Branch("beta<=dimT/d^1/2", lambda x: _need_beta(x) <= min(x.dim_T / x.d, 0.5), lambda x: float(x.d)),
]

FORMULAS = {
    "graph_dim_with_drift": GRAPH_DIM,
    "range_dim_with_drift": RANGE_DIM,
    "apriori_bounds": APRIORI,
    "reverse_bounds": REVERSE,
    "constant_drift_phi": CONSTANT_PHI,
    "holder_phi_upper": HOLDER_PHI,
    "brownian_holder_graph": BROWNIAN_GRAPH,
    "brownian_holder_range": BROWNIAN_RANGE,
}


def active_branches(name: str, x: FormulaInputs) -> list[Branch]:
    return [b for b in FORMULAS[name] if b.when(x)]


def _agree(a, b) -> bool:
    a, b = (a if isinstance(a, tuple) else (a,)), (b if isinstance(b, tuple) else (b,))
    return all(abs(u - v) <= AGREE_TOL * max(1.0, abs(u), abs(v)) for u, v in zip(a, b))


def evaluate(name: str, x: FormulaInputs):
    """Value of formula ``name``; raises BranchConflict if firing branches disagree."""
    fired = active_branches(name, x)
    if not fired:
        raise BranchConflict(f"{name}: no branch covers {x}")
    vals = [b.value(x) for b in fired]
    for b, v in zip(fired[1:], vals[1:]):
        if not _agree(vals[0], v):
            raise BranchConflict(f"{name}: branches {fired[0].tag} and {b.tag} disagree at {x}")
    return vals[0], fired[0].tag


def _result(name, x, tag_prefix):
    v, tag = evaluate(name, x)
    assumptions = {k: getattr(x, k) for k in ("alpha", "d", "dim_T", "phi_alpha", "holder_beta")}
    if isinstance(v, tuple):
        lo, hi = max(0.0, v[0]), v[1]
        return FormulaResult(None, lo, hi, f"{tag_prefix}[{tag}]", assumptions)
    return FormulaResult(v, v, v, f"{tag_prefix}[{tag}]", assumptions)


def graph_dim_with_drift(x: FormulaInputs) -> FormulaResult:
    """Hausdorff dimension of the graph of X + f from phi_alpha of the drift graph
    (phi_1 when alpha <= 1)."""
    _need_phi(x)
    return _result("graph_dim_with_drift", x, "graph_dim")


def range_dim_with_drift(x: FormulaInputs) -> FormulaResult:
    _need_phi(x)
    return _result("range_dim_with_drift", x, "range_dim")


def apriori_bounds(alpha: float, d: int, phi_alpha: float) -> FormulaResult:
    """Interval for the Euclidean dimension of any set with parabolic dimension ``phi_alpha``."""
    return _result("apriori_bounds", FormulaInputs(alpha, d, phi_alpha=phi_alpha), "apriori")


def reverse_bounds(alpha: float, d: int, phi_1: float) -> FormulaResult:
    """Interval for phi_alpha of a set whose Euclidean dimension is ``phi_1``."""
    return _result("reverse_bounds", FormulaInputs(alpha, d, phi_alpha=phi_1), "apriori_reverse")


def improvement_bound(alpha: float, d: int, phi_alpha: float) -> FormulaResult:
    """Lower bound on phi_1 of a drift graph given its phi_alpha, alpha <= 1."""
    if alpha > 1:
        raise NotApplicableError("improvement bound needs alpha <= 1")
    x = FormulaInputs(alpha, d, phi_alpha=phi_alpha)
    v = max(alpha * phi_alpha, phi_alpha + (1 - 1 / alpha) * d)
    return FormulaResult(None, v, d + 1.0, "improvement", {"alpha": alpha, "d": d, "phi_alpha": x.phi_alpha})


def constant_drift_phi(alpha: float, dim_T: float) -> float:
    return evaluate("constant_drift_phi", FormulaInputs(alpha, 1, dim_T))[0]


def process_graph_phi(alpha: float, dim_T: float) -> float:
    """Parabolic dimension of the graph of X itself: (alpha v 1) dim T."""
    return constant_drift_phi(alpha, dim_T)


def process_range_dim(alpha: float, d: int, dim_T: float) -> float:
    return min(alpha * dim_T, float(d))


def process_graph_dim(alpha: float, d: int, dim_T: float) -> float:
    """Graph dimension of X (zero drift): the graph formula fed with the constant-drift phi."""
    phi = constant_drift_phi(alpha, dim_T)
    return graph_dim_with_drift(FormulaInputs(alpha, d, dim_T, phi_alpha=phi)).value


def holder_phi_upper(alpha: float, d: int, dim_T: float, holder_beta: float) -> FormulaResult:
    if not 0 < holder_beta <= 1:
        raise ParameterError("holder_beta must lie in (0, 1]")
    return _result("holder_phi_upper", FormulaInputs(alpha, d, dim_T, holder_beta=holder_beta), "holder_phi")


def brownian_holder_bounds(d: int, dim_T: float, holder_beta: float) -> tuple[FormulaResult, FormulaResult]:
    """Upper bounds (graph, range) for Brownian motion plus a beta-Holder drift."""
    x = FormulaInputs(2.0, d, dim_T, holder_beta=holder_beta)
    return _result("brownian_holder_graph", x, "bm_holder_graph"), _result("brownian_holder_range", x, "bm_holder_range")


def fbm_graph_phi(H: float, dim_T: float) -> float:
    """(1/H)-parabolic dimension of a fractional Brownian graph: dim T / H."""
    if not 0 < H <= 1:
        raise ParameterError("H must lie in (0, 1]")
    return dim_T / H


def sweep_lattice(steps: int = 9):
    """Parameter lattice over alpha, d, dim_T, phi, beta used by the branch self-check."""
    alphas = sorted({round(0.25 * i, 10) for i in range(1, 9)} | {1 / 3, 0.7, 1.2, 1.5, 1.9})
    betas = sorted({round(i / steps, 10) for i in range(1, steps + 1)} | {0.25, 0.3, 0.5, 0.75})
    dims = sorted({round(i / steps, 10) for i in range(0, steps + 1)} | {0.5, math.log(2) / math.log(3)})
    for alpha, d, dim_T, beta in itertools.product(alphas, (1, 2, 3), dims, betas):
        for phi in (0.0, 0.5, 1.0, dim_T * max(1.0, alpha), 1.5, float(d), d + 1.0):
            if phi <= d + 1:
                yield FormulaInputs(alpha, d, dim_T, phi_alpha=phi, holder_beta=beta)


# zero sets of these expressions are the only places two branches may both fire
BOUNDARIES = {
    "graph_dim_with_drift": (lambda x: x.alpha - 1,),
    "range_dim_with_drift": (lambda x: x.alpha - 1,),
    "apriori_bounds": (lambda x: x.alpha - 1,),
    "reverse_bounds": (lambda x: x.alpha - 1,),
    "constant_drift_phi": (lambda x: x.alpha - 1,),
    "holder_phi_upper": (lambda x: x.alpha - 1, lambda x: x.alpha * x.holder_beta - 1),
    "brownian_holder_graph": (lambda x: x.holder_beta - (x.dim_T - 0.5) / x.d,
                              lambda x: x.holder_beta - x.dim_T / x.d,
                              lambda x: x.holder_beta - 0.5),
    "brownian_holder_range": (lambda x: x.holder_beta - x.dim_T / x.d, lambda x: x.holder_beta - 0.5),
}


def on_boundary(name: str, x: FormulaInputs, tol: float = AGREE_TOL) -> bool:
    return any(abs(b(x)) <= tol for b in BOUNDARIES[name])


@dataclass(frozen=True)
class SweepReport:
    evaluations: int
    boundary_points: int
    max_disagreement: float
    violations: tuple  # (formula, inputs, reason)


def _spread(values) -> float:
    parts = [v if isinstance(v, tuple) else (v,) for v in values]
    return max((abs(a - b) for p in parts for q in parts for a, b in zip(p, q)), default=0.0)


def branch_sweep(steps: int = 9) -> SweepReport:
    """Check every formula on the lattice: one branch off boundaries, agreement on them."""
    n = n_bd = 0
    worst = 0.0
    bad = []
    for x in sweep_lattice(steps):
        for name in FORMULAS:
            if name.startswith("brownian") and x.alpha != 2.0:
                continue
            n += 1
            fired = active_branches(name, x)
            if not fired:
                bad.append((name, x, "no branch"))
                continue
            if len(fired) > 1:
                if not on_boundary(name, x):
                    bad.append((name, x, "overlap off boundary: " + ",".join(b.tag for b in fired)))
                n_bd += 1
                gap = _spread([b.value(x) for b in fired])
                worst = max(worst, gap)
                if gap > AGREE_TOL:
                    bad.append((name, x, f"branches differ by {gap:.3g}"))
    return SweepReport(n, n_bd, worst, tuple(bad))


def self_check(steps: int = 9) -> int:
    """Run ``branch_sweep``; raises BranchConflict on any violation, else returns the count."""
    rep = branch_sweep(steps)
    if rep.violations:
        name, x, why = rep.violations[0]
        raise BranchConflict(f"{name} at {x}: {why} ({len(rep.violations)} violations)")
    return rep.evaluations
