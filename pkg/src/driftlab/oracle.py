"""Exact analysis of the (1+N) EA as an absorbing Markov chain.

The full-space model enumerates all 2**n strings and stores a dense transition
matrix (n <= ORACLE_CAP). For OneMax a lumped chain over the n+1 levels is
available for much larger n.

Best-of-N law used for a child level F strictly above the parent: with
p_F the single-child mass on level F and p_<F the mass strictly below it,

    P(y | x) = q(y | x) / p_F * ((p_<F + p_F)**N - p_<F**N),

i.e. the best child lands on level F and ties inside F are broken uniformly.
Powers are evaluated from the upper tail with log1p/expm1 so that rows far
from the optimum keep full relative precision.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
from scipy import stats

from . import kernels
from .core import BitString, as_bitstring, check_cap, state_levels
from .errors import CapExceeded, LengthMismatch, OptimalState, SingularSystem
from .fitness import FitnessFunction, Kind, evaluate, fitness_ranks

ORACLE_CAP = 12
LUMPED_CAP = 10_000
ROW_TOL = 1e-12


def _check_oracle_cap(n: int):
    check_cap(n, ORACLE_CAP, "full-space oracle")


# ---------------------------------------------------------------------------
# single-child law and best-of-N rows


def child_distribution(x, f: FitnessFunction) -> Dict[object, Tuple[float, Dict[BitString, float]]]:
    """Single-child mutation law from x grouped by exact fitness value.

    Maps each fitness value to ``(mass, {child: probability conditional on
    the level})``.
    """
    x = as_bitstring(x)
    if x.n != f.n:
        raise LengthMismatch(f"x has length {x.n}, f expects {f.n}")
    _check_oracle_cap(f.n)
    n = f.n
    ranks, n_ranks = fitness_ranks(f)
    values = _rank_values(f, ranks, n_ranks)
    qpow = kernels._mutation_powers(n)
    states = np.arange(1 << n)
    q = qpow[np.bitwise_count((x.index ^ states).astype(np.uint64)).astype(np.int64)]
    out = {}
    for r in np.unique(ranks):
        members = states[ranks == r]
        mass = float(q[members].sum())
        if mass == 0.0:
            continue
        cond = {BitString.from_index(int(y), n): float(q[y] / mass) for y in members if q[y] > 0}
        out[values[r]] = (mass, cond)
    return out


def _rank_values(f, ranks, n_ranks):
    values = [None] * n_ranks
    for i, r in enumerate(ranks):
        if values[r] is None:
            values[r] = evaluate(f, BitString.from_index(i, f.n))
    return values


def transition_row(x, f: FitnessFunction, N: int) -> Dict[BitString, float]:
    """Next-parent distribution from x (only non-zero entries)."""
    x = as_bitstring(x)
    model = build_model(f, N)
    return model.row(x)


def transition_row_exact(x, f: FitnessFunction, N: int) -> Dict[BitString, Fraction]:
    """Rational-arithmetic row, for cross-validating the float closed form."""
    x = as_bitstring(x)
    n = f.n
    check_cap(n, 8, "rational oracle")
    ranks, n_ranks = fitness_ranks(f)
    p = Fraction(1, n)
    q = {}
    for y in range(1 << n):
        h = bin(x.index ^ y).count("1")
        q[y] = p ** h * (1 - p) ** (n - h)
    mass = [Fraction(0)] * n_ranks
    for y, v in q.items():
        mass[ranks[y]] += v
    below = [Fraction(0)] * n_ranks
    acc = Fraction(0)
    for r in range(n_ranks):
        below[r] = acc
        acc += mass[r]
    rx = ranks[x.index]
    row = {}
    stay = (below[rx] + mass[rx]) ** N
    for y, v in q.items():
        F = ranks[y]
        if F > rx and v:
            row[BitString.from_index(y, n)] = v / mass[F] * ((below[F] + mass[F]) ** N - below[F] ** N)
    row[x] = row.get(x, Fraction(0)) + stay
    return row


# ---------------------------------------------------------------------------
# full-space model


@dataclass
class TransitionModel:
    f: FitnessFunction
    N: int
    ranks: np.ndarray
    n_ranks: int
    P: np.ndarray
    escape: np.ndarray

    @property
    def n(self) -> int:
        return self.f.n

    @property
    def size(self) -> int:
        return self.P.shape[0]

    @property
    def optimal(self) -> np.ndarray:
        return self.ranks == self.n_ranks - 1

    @property
    def non_optimal(self) -> np.ndarray:
        return ~self.optimal

    def row(self, x) -> Dict[BitString, float]:
        x = as_bitstring(x)
        if x.n != self.n:
            raise LengthMismatch(f"x has length {x.n}, model has n={self.n}")
        r = self.P[x.index]
        return {BitString.from_index(int(j), self.n): float(r[j]) for j in np.flatnonzero(r)}

    def to_triplets_csv(self) -> str:
        """Sparse export: one ``from_state,to_state,prob`` line per non-zero entry."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["from_state", "to_state", "prob"])
        for i, j in zip(*np.nonzero(self.P)):
            w.writerow([BitString.from_index(int(i), self.n), BitString.from_index(int(j), self.n),
                        repr(float(self.P[i, j]))])
        return buf.getvalue()


def build_model(f: FitnessFunction, N: int, lumped: bool = False):
    """Full-space model, or with ``lumped=True`` the level chain (OneMax only)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if lumped:
        if f.kind != Kind.ONEMAX:
            raise ValueError("only OneMax is lumpable over levels")
        return build_lumped_onemax(f.n, N)
    _check_oracle_cap(f.n)
    ranks, n_ranks = fitness_ranks(f)
    P, esc = kernels.transition_matrix(ranks, n_ranks, f.n, N)
    return TransitionModel(f, N, np.asarray(ranks), n_ranks, P, esc)


# ---------------------------------------------------------------------------
# lumped OneMax chain over levels k = number of zeros


@dataclass
class LumpedModel:
    """OneMax (1+N) EA on levels 0..n; ``step[k, l] = P(k -> k - l)``."""
    n: int
    N: int
    step: np.ndarray
    escape: np.ndarray

    def level_row(self, k: int) -> Dict[int, float]:
        return {k - l: float(p) for l, p in enumerate(self.step[k]) if p > 0 and l <= k}


def build_lumped_onemax(n: int, N: int, max_jump: Optional[int] = None) -> LumpedModel:
    """Level chain of OneMax; mutations flipping more than ``max_jump`` bits of
    one kind are dropped (their mass is below 1e-40 at the default)."""
    if n > LUMPED_CAP:
        raise CapExceeded(f"n={n} exceeds the lumped-chain cap of {LUMPED_CAP}")
    if N < 1:
        raise ValueError("N must be >= 1")
    M = n if max_jump is None and n <= 64 else (max_jump or 48)
    p = 1.0 / n
    step = np.zeros((n + 1, M + 1))
    esc = np.zeros(n + 1)
    step[0, 0] = 1.0
    ks = np.arange(n + 1)
    js = np.arange(M + 1)
    pmf = stats.binom.pmf(js[None, :], ks[:, None], p)  # pmf[m, j] = P(Bin(m, p) = j)
    for k in range(1, n + 1):
        a = pmf[k, :min(k, M) + 1]          # zeros -> ones
        b = pmf[n - k, :min(n - k, M) + 1]  # ones -> zeros
        # net gain D = a - b; tail[l] = P(D >= l) for l = 0..M
        dist = np.convolve(a, b[::-1])  # index i <-> D = i - (len(b) - 1)
        offset = len(b) - 1
        tail = np.zeros(M + 2)
        upper = np.cumsum(dist[::-1])[::-1]  # upper[i] = P(D >= i - offset)
        top = min(k, M, len(dist) - 1 - offset)
        tail[1:top + 1] = upper[offset + 1:offset + top + 1]
        # child is strictly fitter iff D >= 1; best child lands on k - l
        esc[k] = kernels._escape(tail[1], N)
        step[k, 0] = kernels._pow_complement(tail[1], N)
        for l in range(1, top + 1):
            step[k, l] = kernels._best_of(tail[l + 1], dist[offset + l], N)
    return LumpedModel(n, N, step, esc)


def lumped_hitting_times(model: LumpedModel) -> np.ndarray:
    n, M = model.n, model.step.shape[1] - 1
    g = np.zeros(n + 1)
    for k in range(1, n + 1):
        ls = np.arange(1, min(k, M) + 1)
        g[k] = (1.0 + model.step[k, ls] @ g[k - ls]) / model.escape[k]
    return g


def lumped_uniform_hitting_time(model: LumpedModel) -> float:
    g = lumped_hitting_times(model)
    w = stats.binom.pmf(np.arange(model.n + 1), model.n, 0.5)
    return float(w @ g)


# ---------------------------------------------------------------------------
# hitting times and distribution evolution


@dataclass
class HittingTimeTable:
    n: int
    g: np.ndarray
    g_uniform: float

    def __getitem__(self, x) -> float:
        return float(self.g[as_bitstring(x).index])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["state", "g"])
        for i, v in enumerate(self.g):
            w.writerow([BitString.from_index(i, self.n), repr(float(v))])
        return buf.getvalue()


def exact_hitting_time(model: TransitionModel) -> HittingTimeTable:
    g, bad = kernels.hitting_times(model.P, model.escape, model.ranks)
    if bad >= 0:
        raise SingularSystem(
            f"state {BitString.from_index(int(bad), model.n)} has no escape probability"
        )
    return HittingTimeTable(model.n, g, float(g.mean()))


@dataclass
class StateDistribution:
    probs: np.ndarray
    generation: int = 0

    @classmethod
    def uniform(cls, n: int) -> "StateDistribution":
        return cls(np.full(1 << n, 1.0 / (1 << n)), 0)

    @classmethod
    def point(cls, x) -> "StateDistribution":
        x = as_bitstring(x)
        p = np.zeros(1 << x.n)
        p[x.index] = 1.0
        return cls(p, 0)

    def mass_on(self, mask: np.ndarray) -> float:
        return float(self.probs[mask].sum())

    def __getitem__(self, x) -> float:
        return float(self.probs[as_bitstring(x).index])


def evolve_distribution(model: TransitionModel, init: StateDistribution, t: int) -> StateDistribution:
    if t < 0:
        raise ValueError("t must be >= 0")
    p = init.probs
    for _ in range(t):
        p = p @ model.P
    return StateDistribution(p, init.generation + t)


def iter_distributions(model: TransitionModel, init: StateDistribution,
                       horizon: Optional[int] = None, tol: float = 0.0) -> Iterator[StateDistribution]:
    """Yield the distributions at t = 0, 1, ... up to ``horizon`` or until the
    non-optimal mass drops below ``tol``."""
    p = init.probs
    t = init.generation
    non = model.non_optimal
    while True:
        yield StateDistribution(p, t)
        if horizon is not None and t - init.generation >= horizon:
            return
        if tol > 0 and p[non].sum() < tol:
            return
        p = p @ model.P
        t += 1


def non_optimal_mass_series(model: TransitionModel, init: StateDistribution,
                            tol: float = 1e-16, max_steps: int = 10_000_000) -> np.ndarray:
    out = []
    for dist in iter_distributions(model, init, max_steps, tol):
        out.append(dist.mass_on(model.non_optimal))
    return np.array(out)


# ---------------------------------------------------------------------------
# exact drift


@dataclass
class DriftTable:
    """Per-state drift of a distance under a model; NaN on optimal states."""
    delta: np.ndarray
    positive: np.ndarray
    negative: np.ndarray


def drift_table(model: TransitionModel, d) -> DriftTable:
    dvals = _distance_values(d, model.n)
    pos, neg = kernels.drift_parts(model.P, dvals)
    delta = pos + neg
    opt = model.optimal
    for a in (delta, pos, neg):
        a[opt] = np.nan
    return DriftTable(delta, pos, neg)


def _distance_values(d, n: int) -> np.ndarray:
    if hasattr(d, "state_values"):
        return d.state_values(n)
    arr = np.asarray(d, dtype=np.float64)
    if arr.shape == (n + 1,):
        return arr[state_levels(n)]
    if arr.shape == (1 << n,):
        return arr
    raise LengthMismatch(f"distance table of shape {arr.shape} does not fit n={n}")


def exact_pointwise_drift(x, d, model: TransitionModel) -> Tuple[float, float, float]:
    """(delta, positive part, negative part) at a non-optimal x."""
    x = as_bitstring(x)
    if model.optimal[x.index]:
        raise OptimalState(f"{x} is optimal; drift is defined on non-optimal states")
    dvals = _distance_values(d, model.n)
    row = model.P[x.index]
    diff = dvals[x.index] - dvals
    pos = float((np.where(diff > 0, diff, 0.0) * row).sum())
    neg = float((np.where(diff < 0, diff, 0.0) * row).sum())
    return pos + neg, pos, neg


def exact_average_drift(model: TransitionModel, dist_t: StateDistribution, d,
                        table: Optional[DriftTable] = None) -> float:
    table = table or drift_table(model, d)
    non = model.non_optimal
    w = dist_t.probs[non]
    mass = w.sum()
    if mass == 0:
        return 0.0
    return float(table.delta[non] @ w / mass)


@dataclass
class DriftCDF:
    """Right-continuous step function F_t(delta) over non-optimal states."""
    breakpoints: np.ndarray
    levels: np.ndarray

    def __call__(self, delta: float) -> float:
        i = np.searchsorted(self.breakpoints, delta, side="right")
        return 0.0 if i == 0 else float(self.levels[i - 1])


def drift_cdf(model: TransitionModel, dist_t: StateDistribution, d,
              table: Optional[DriftTable] = None) -> DriftCDF:
    table = table or drift_table(model, d)
    non = model.non_optimal
    w = dist_t.probs[non]
    mass = w.sum()
    if mass == 0:
        return DriftCDF(np.array([-np.inf]), np.array([1.0]))
    vals = table.delta[non]
    order = np.argsort(vals, kind="stable")
    vals, w = vals[order], w[order] / mass
    uniq, start = np.unique(vals, return_index=True)
    cum = np.cumsum(w)
    ends = np.r_[start[1:], len(vals)] - 1
    levels = cum[ends]
    levels[-1] = 1.0
    return DriftCDF(uniq, levels)
