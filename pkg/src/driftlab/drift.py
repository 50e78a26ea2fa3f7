"""Distance functions, drift-theorem bound checks and Monte Carlo drift.

Distances are level based (``d_k`` for strings with k zeros) except CUSTOM
tables, which may also give one value per state. Bound checks compare a
drift bound against the exact hitting time of an oracle model:

* upper bound: every drift >= c > 0 implies G <= d / c;
* lower bound: every drift <= c implies G >= d / c.

The average variants take c over the conditional distribution of the parent
at each generation, from uniform initialisation. The point-wise variants take
c over single states and check the bound state by state.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .core import as_bitstring, state_levels, state_sides
from .engine import make_rng
from .errors import DomainError, LengthMismatch, NotLinearLike
from .fitness import FitnessFunction, Kind, check_linear_like, kernel_fitness
from .oracle import (
    StateDistribution,
    TransitionModel,
    build_model,
    drift_table,
    exact_hitting_time,
)

E_E = math.exp(math.e)
SLACK_TOL = 1e-9
MASS_TOL = 1e-12
LEFT_DRIFT_CLAIM = 1.0 / (4 * math.e + 4 * math.e ** 2)
NEGATIVE_RATIO_CLAIM = 0.75
ONEMAX_DRIFT_CLAIM = 1.0 / math.e
LINEARLIKE_CONSTANT = 8 * (math.e + math.e ** 2)


class DistanceKind(str, enum.Enum):
    UNIT = "unit"
    HARMONIC = "harmonic"
    UPPER = "upper"
    PIECEWISE = "piecewise"
    CUSTOM = "custom"


@dataclass(frozen=True)
class DistanceFunction:
    kind: DistanceKind
    n: int
    N: int = 1
    levels: Optional[Tuple[float, ...]] = None
    states: Optional[Tuple[float, ...]] = field(default=None, repr=False)

    def __post_init__(self):
        if (self.levels is None) == (self.states is None):
            raise ValueError("give exactly one of level values or state values")
        vals = self.levels if self.levels is not None else self.states
        want = self.n + 1 if self.levels is not None else 1 << self.n
        if len(vals) != want:
            raise LengthMismatch(f"expected {want} distance values, got {len(vals)}")
        if min(vals) < 0:
            raise ValueError("distances must be nonnegative")

    @property
    def level_based(self) -> bool:
        return self.levels is not None

    def level_values(self) -> np.ndarray:
        if self.levels is None:
            raise ValueError("per-state distance has no level table")
        return np.array(self.levels, dtype=np.float64)

    def state_values(self, n: Optional[int] = None) -> np.ndarray:
        if n is not None and n != self.n:
            raise LengthMismatch(f"distance built for n={self.n}, asked for n={n}")
        if self.states is not None:
            return np.array(self.states, dtype=np.float64)
        return self.level_values()[state_levels(self.n)]

    def __call__(self, x) -> float:
        x = as_bitstring(x)
        if x.n != self.n:
            raise LengthMismatch(f"x has length {x.n}, distance has n={self.n}")
        if self.levels is not None:
            return float(self.levels[x.n - sum(x.bits)])
        return float(self.states[x.index])

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "n": self.n, "N": self.N}
        if self.levels is not None:
            d["levels"] = list(self.levels)
        else:
            d["states"] = list(self.states)
        return d


def piecewise_parameters(n: int, N: int) -> Tuple[float, float]:
    """(L, K) of the piecewise distance; L = 1 and K = n unless N > e**e."""
    if N <= E_E:
        return 1.0, float(n)
    L = math.log(N) / math.log(math.log(N))
    return L, n / L


def _upper_step(n, N, k):
    return n / (k * N) + 1.0


def make_distance(kind, n: int, N: int = 1, table: Optional[Sequence[float]] = None) -> DistanceFunction:
    kind = DistanceKind(kind)
    if n < 1 or N < 1:
        raise ValueError("need n >= 1 and N >= 1")
    if kind is DistanceKind.CUSTOM:
        if table is None:
            raise ValueError("CUSTOM distance needs a table")
        vals = tuple(float(v) for v in table)
        if len(vals) == n + 1:
            return DistanceFunction(kind, n, N, levels=vals)
        return DistanceFunction(kind, n, N, states=vals)
    d = [0.0] * (n + 1)
    if kind is DistanceKind.UNIT:
        d = [float(k) for k in range(n + 1)]
    elif kind is DistanceKind.HARMONIC:
        h = 0.0
        for k in range(1, n + 1):
            h += 1.0 / k
            d[k] = n / N * h
    elif kind is DistanceKind.UPPER:
        for k in range(1, n + 1):
            d[k] = d[k - 1] + _upper_step(n, N, k)
    elif kind is DistanceKind.PIECEWISE:
        _, K = piecewise_parameters(n, N)
        tail = math.log(math.log(N)) / math.log(N) if N > E_E else None
        for k in range(1, n + 1):
            d[k] = d[k - 1] + (_upper_step(n, N, k) if k <= K else tail)
    return DistanceFunction(kind, n, N, levels=tuple(d))


def distance_from_hitting_times(model: TransitionModel) -> DistanceFunction:
    """Per-state CUSTOM distance equal to the exact hitting time."""
    g = exact_hitting_time(model).g
    return DistanceFunction(DistanceKind.CUSTOM, model.n, model.N, states=tuple(g.tolist()))


def expected_initial_distance(d: DistanceFunction, n: Optional[int] = None) -> float:
    """Mean distance of a uniformly random string."""
    n = d.n if n is None else n
    if n != d.n:
        raise LengthMismatch(f"distance built for n={d.n}, asked for n={n}")
    if d.level_based:
        # correctly rounded binomial weights; int / int never overflows
        w = np.array([math.comb(n, k) / (1 << n) for k in range(n + 1)])
        return float(w @ d.level_values())
    return float(np.mean(d.state_values()))


# ---------------------------------------------------------------------------
# bound reports


@dataclass
class BoundReport:
    theorem: str
    variant: str
    c: float
    d_init: float
    bound: float
    exact_G: float
    slack: float
    applicable: bool = True
    state: Optional[str] = None

    @property
    def satisfied(self) -> bool:
        return self.slack >= -SLACK_TOL

    def to_dict(self) -> dict:
        d = asdict(self)
        d["satisfied"] = self.satisfied
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class AverageDriftSeries:
    """Average drift and non-optimal mass for t = 0..T from uniform start."""
    average: np.ndarray
    non_optimal: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.average) - 1


def average_drift_series(model: TransitionModel, d, horizon: Optional[int] = None,
                         init: Optional[StateDistribution] = None,
                         mass_tol: float = MASS_TOL, max_steps: int = 1_000_000,
                         table=None) -> AverageDriftSeries:
    """Average drift for every t with non-optimal mass >= ``mass_tol``."""
    table = table or drift_table(model, _as_distance(d, model))
    non = model.non_optimal
    delta = table.delta[non]
    p = (init or StateDistribution.uniform(model.n)).probs
    limit = max_steps if horizon is None else horizon
    avg, mass = [], []
    for t in range(limit + 1):
        w = p[non]
        m = w.sum()
        if m < mass_tol:
            break
        avg.append(float(delta @ w / m))
        mass.append(float(m))
        p = p @ model.P
    return AverageDriftSeries(np.array(avg), np.array(mass))


def _vacuous(theorem, variant, c, d_init, exact_G):
    return BoundReport(theorem, variant, c, d_init, math.nan, exact_G, math.inf, applicable=False)


def verify_upper_bound_theorem(model: TransitionModel, d, horizon: Optional[int] = None,
                               variant: str = "average", series=None) -> BoundReport:
    """Check G <= d / c with c the smallest drift.

    A non-positive c makes the bound inapplicable; the report is then vacuous
    (``applicable`` is False) rather than an error.
    """
    d = _as_distance(d, model)
    ht = exact_hitting_time(model)
    if variant == "pointwise":
        table = drift_table(model, d)
        non = model.non_optimal
        c = float(np.min(table.delta[non]))
        if c <= 0:
            return _vacuous("upper", variant, c, math.nan, math.nan)
        return _pointwise_report("upper", c, d.state_values(), ht.g, non, model.n)
    if variant != "average":
        raise ValueError(f"unknown variant {variant!r}")
    series = series or average_drift_series(model, d, horizon)
    c = float(series.average.min())
    d0 = expected_initial_distance(d)
    if c <= 0:
        return _vacuous("upper", variant, c, d0, ht.g_uniform)
    bound = d0 / c
    return BoundReport("upper", variant, c, d0, bound, ht.g_uniform, bound - ht.g_uniform)


def verify_lower_bound_theorem(model: TransitionModel, d, horizon: Optional[int] = None,
                               variant: str = "average", series=None) -> BoundReport:
    """Check G >= d / c with c the largest drift."""
    d = _as_distance(d, model)
    ht = exact_hitting_time(model)
    if variant == "pointwise":
        table = drift_table(model, d)
        non = model.non_optimal
        c = float(np.max(table.delta[non]))
        if c <= 0:
            return _vacuous("lower", variant, c, math.nan, math.nan)
        return _pointwise_report("lower", c, d.state_values(), ht.g, non, model.n)
    if variant != "average":
        raise ValueError(f"unknown variant {variant!r}")
    series = series or average_drift_series(model, d, horizon)
    c = float(series.average.max())
    d0 = expected_initial_distance(d)
    if c <= 0:
        return _vacuous("lower", variant, c, d0, ht.g_uniform)
    bound = d0 / c
    return BoundReport("lower", variant, c, d0, bound, ht.g_uniform, ht.g_uniform - bound)


def _pointwise_report(side, c, dvals, g, non, n):
    from .core import BitString
    idx = np.flatnonzero(non)
    bounds = dvals[idx] / c
    slack = bounds - g[idx] if side == "upper" else g[idx] - bounds
    j = int(np.argmin(slack))
    x = int(idx[j])
    return BoundReport(side, "pointwise", c, float(dvals[x]), float(bounds[j]), float(g[x]),
                       float(slack[j]), state=str(BitString.from_index(x, n)))


def _as_distance(d, model) -> DistanceFunction:
    if isinstance(d, DistanceFunction):
        if d.n != model.n:
            raise LengthMismatch(f"distance built for n={d.n}, model has n={model.n}")
        return d
    if isinstance(d, (str, DistanceKind)):
        return make_distance(d, model.n, model.N)
    return make_distance(DistanceKind.CUSTOM, model.n, model.N, table=list(d))


def linearlike_constant_check(model: TransitionModel) -> BoundReport:
    """G <= 8 (e + e**2) d(Phi_0) with the UPPER distance."""
    d0 = expected_initial_distance(make_distance(DistanceKind.UPPER, model.n, model.N))
    g = exact_hitting_time(model).g_uniform
    bound = LINEARLIKE_CONSTANT * d0
    return BoundReport("linear-like", "explicit-constant", 1.0 / LINEARLIKE_CONSTANT, d0,
                       bound, g, bound - g)


# ---------------------------------------------------------------------------
# lemma inequalities on linear-like functions


@dataclass
class LemmaReport:
    fitness: str
    n: int
    N: int
    min_drift: float
    nonnegative: bool
    min_drift_left: float
    left_positive: bool
    left_drift_claim: float
    max_negative_ratio_left: float
    negative_ratio_claim: float
    min_drift_piecewise: Optional[float] = None
    piecewise_claim: Optional[float] = None

    @property
    def holds(self) -> bool:
        """Only the sign conditions are hard requirements."""
        return self.nonnegative and self.left_positive

    def to_dict(self) -> dict:
        d = asdict(self)
        d["holds"] = self.holds
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def verify_lemma_inequalities(f: FitnessFunction, N: int, n: Optional[int] = None,
                              model: Optional[TransitionModel] = None) -> LemmaReport:
    if n is not None and n != f.n:
        raise LengthMismatch(f"n={n} does not match f.n={f.n}")
    rep = check_linear_like(f)
    if not rep.holds:
        raise NotLinearLike(rep.describe())
    model = model or build_model(f, N)
    n = f.n
    table = drift_table(model, make_distance(DistanceKind.UPPER, n, N))
    non = model.non_optimal
    left = state_sides(n) == 1
    delta = table.delta
    min_drift = float(np.min(delta[non]))
    if left.any():
        dl = delta[left]
        min_left = float(dl.min())
        left_pos = bool((dl > 0).all())
        pos, neg = table.positive[left], table.negative[left]
        ratio = np.divide(-neg, pos, out=np.full_like(pos, np.inf), where=pos > 0)
        ratio[(pos == 0) & (neg == 0)] = 0.0
        max_ratio = float(ratio.max()) + 0.0
    else:
        min_left, left_pos, max_ratio = math.nan, True, math.nan
    out = LemmaReport(f.label, n, N, min_drift, min_drift >= -1e-12, min_left, left_pos,
                      LEFT_DRIFT_CLAIM, max_ratio, NEGATIVE_RATIO_CLAIM)
    if f.kind == Kind.ONEMAX:
        pw = drift_table(model, make_distance(DistanceKind.PIECEWISE, n, N))
        out.min_drift_piecewise = float(np.min(pw.delta[non]))
        out.piecewise_claim = ONEMAX_DRIFT_CLAIM
    return out


# ---------------------------------------------------------------------------
# Monte Carlo drift


@dataclass
class DriftEstimate:
    mean: float
    stderr: float
    samples: int


def estimate_drift_mc(x, d: DistanceFunction, f: FitnessFunction, N: int, samples: int,
                      seed: int) -> DriftEstimate:
    """Average of d(x) - d(next parent) over independent one-generation steps."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x = as_bitstring(x)
    if x.n != f.n or d.n != f.n:
        raise LengthMismatch("x, d and f must share n")
    if not d.level_based:
        raise ValueError("Monte Carlo drift needs a level-based distance")
    mode, weights, table, _ = kernel_fitness(f)
    zeros = kernels.next_levels(make_rng(seed), x.to_array(), N, mode, weights, table, samples)
    dl = d.level_values()
    gain = dl[x.n - sum(x.bits)] - dl[zeros]
    se = float(gain.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return DriftEstimate(float(gain.mean()), se, samples)


# ---------------------------------------------------------------------------
# closed-form running-time bounds (implied constants set to 1)


class BoundKind(str, enum.Enum):
    MONOTONIC_LOWER = "monotonic_lower"
    ONEMAX_LOWER = "onemax_lower"
    LARGE_N_LOWER = "large_n_lower"
    LINEARLIKE_UPPER = "linearlike_upper"
    ONEMAX_UPPER = "onemax_upper"
    BINVAL_LOWER = "binval_lower"
    ONEMAX_CUTOFF = "onemax_cutoff"
    BINVAL_CUTOFF = "binval_cutoff"


def _large_n_term(n, N):
    if N <= E_E:
        raise DomainError(f"N={N} must exceed e**e ~ {E_E:.3f}")
    return n * N * math.log(math.log(N)) / math.log(N)


def bound_formula(kind, n: int, N: int = 1) -> float:
    """Evaluations (generations times N) implied by each asymptotic bound.

    MONOTONIC/ONEMAX_LOWER and ONEMAX_UPPER add the large-N term only when
    N > e**e; LARGE_N_LOWER is that term alone and needs N > e**e.
    """
    kind = BoundKind(kind)
    if n < 2:
        raise DomainError("bound formulas need n >= 2")
    if N < 1:
        raise DomainError("N must be >= 1")
    nlogn = n * math.log(n)
    if kind in (BoundKind.MONOTONIC_LOWER, BoundKind.ONEMAX_LOWER, BoundKind.ONEMAX_UPPER):
        return nlogn + (_large_n_term(n, N) if N > E_E else 0.0)
    if kind is BoundKind.LARGE_N_LOWER:
        return _large_n_term(n, N)
    if kind is BoundKind.LINEARLIKE_UPPER:
        return n * N + nlogn
    if kind is BoundKind.BINVAL_LOWER:
        return float(N * n)
    if kind is BoundKind.ONEMAX_CUTOFF:
        if n <= E_E:
            raise DomainError(f"n={n} must exceed e**e so that ln ln ln n > 0")
        ll = math.log(math.log(n))
        return math.log(n) * ll / math.log(ll)
    return math.log(n)
