"""Pseudo-Boolean fitness functions and exhaustive property checkers.

Fitness values are exactly comparable: OneMax, BinVal and integer-weighted
linear functions use Python integers, non-integer weights are converted to
exact ``Fraction`` values, and the nonlinear example is evaluated with
``mpmath`` at a precision wide enough to resolve its logarithmic and
prefix-product terms next to the exponential one.
"""
from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .core import BitString, as_bitstring, check_cap, state_bits
from .errors import CapExceeded, ConfigError, LengthMismatch

CHECK_CAP = 12
TABLE_CAP = 20


class Kind(str, enum.Enum):
    ONEMAX = "onemax"
    BINVAL = "binval"
    LINEAR = "linear"
    NONLINEAR_EXAMPLE = "nonlinear"
    TABLE = "table"


def _exact(v):
    if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
        return v
    if isinstance(v, float):
        if v.is_integer():
            return int(v)
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"unsupported fitness value {v!r}")


@dataclass(frozen=True)
class FitnessFunction:
    kind: Kind
    n: int
    weights: Optional[Tuple] = None
    # TABLE: value for every state index, leftmost bit most significant
    table: Optional[Tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind is Kind.LINEAR:
            if self.weights is None or len(self.weights) != self.n:
                raise LengthMismatch("linear function needs exactly n weights")
        if self.kind is Kind.TABLE:
            if self.table is None or len(self.table) != 1 << self.n:
                raise LengthMismatch("table must list a value for all 2**n strings")

    # constructors ---------------------------------------------------------
    @classmethod
    def onemax(cls, n: int) -> "FitnessFunction":
        return cls(Kind.ONEMAX, n)

    @classmethod
    def binval(cls, n: int) -> "FitnessFunction":
        return cls(Kind.BINVAL, n)

    @classmethod
    def linear(cls, weights: Sequence) -> "FitnessFunction":
        return cls(Kind.LINEAR, len(weights), weights=tuple(_exact(w) for w in weights))

    @classmethod
    def sorted_linear(cls, weights: Sequence) -> "FitnessFunction":
        """Linear function with the ordering w_1 >= ... >= w_n > 0 enforced."""
        w = tuple(_exact(v) for v in weights)
        if any(a < b for a, b in zip(w, w[1:])) or w[-1] <= 0:
            raise ValueError(f"weights must be non-increasing and positive: {weights}")
        return cls(Kind.LINEAR, len(w), weights=w)

    @classmethod
    def nonlinear_example(cls, n: int) -> "FitnessFunction":
        return cls(Kind.NONLINEAR_EXAMPLE, n)

    @classmethod
    def from_table(cls, mapping: Mapping[str, object]) -> "FitnessFunction":
        keys = list(mapping)
        if not keys:
            raise ValueError("empty table")
        n = len(keys[0])
        values = [None] * (1 << n)
        for key, value in mapping.items():
            x = BitString.from_str(key)
            if x.n != n:
                raise LengthMismatch(f"table key {key!r} has length {x.n}, expected {n}")
            values[x.index] = _exact(value)
        missing = [BitString.from_index(i, n) for i, v in enumerate(values) if v is None]
        if missing:
            raise ValueError(f"table is missing {len(missing)} strings, e.g. {missing[0]}")
        return cls(Kind.TABLE, n, table=tuple(values))

    # serialisation --------------------------------------------------------
    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "n": self.n}
        if self.kind is Kind.LINEAR:
            d["weights"] = [_jsonable(w) for w in self.weights]
        elif self.kind is Kind.TABLE:
            d["table"] = {
                str(BitString.from_index(i, self.n)): _jsonable(v)
                for i, v in enumerate(self.table)
            }
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "FitnessFunction":
        try:
            kind = Kind(str(d["kind"]).lower())
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad fitness kind in {dict(d)!r}") from exc
        if kind is Kind.LINEAR:
            weights = d.get("weights")
            if weights is None:
                raise ConfigError("linear fitness needs 'weights'")
            if "n" in d and int(d["n"]) != len(weights):
                raise ConfigError("'n' does not match the number of weights")
            return cls.linear(weights)
        if kind is Kind.TABLE:
            table = d.get("table")
            if not isinstance(table, Mapping):
                raise ConfigError("table fitness needs a 'table' object")
            return cls.from_table(table)
        if "n" not in d:
            raise ConfigError(f"{kind.value} fitness needs 'n'")
        return cls(kind, int(d["n"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FitnessFunction":
        return cls.from_dict(json.loads(text))

    @property
    def label(self) -> str:
        if self.kind is Kind.LINEAR:
            return "linear[" + ";".join(str(w) for w in self.weights) + "]"
        return self.kind.value

    def __call__(self, x) -> object:
        return evaluate(self, x)


def _jsonable(v):
    # non-integer rationals travel as "p/q" strings so the round trip is exact
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    return v


@functools.lru_cache(maxsize=None)
def _exp_int(L: int, dps: int):
    with mpmath.workdps(dps):
        return mpmath.exp(L)


def _nonlinear_dps(n: int) -> int:
    # exp(2**n) has ~2**n * log10(e) digits before the point
    return int(math.ceil((1 << n) * math.log10(math.e))) + 40


def _nonlinear_value(bits: Tuple[int, ...]):
    n = len(bits)
    h = n // 2
    L = sum(bits[i] << (n - 1 - i) for i in range(h))
    right = sum(bits[h:])
    leading = 0
    for b in bits:
        if not b:
            break
        leading += 1
    dps = _nonlinear_dps(n)
    with mpmath.workdps(dps):
        return _exp_int(L, dps) + mpmath.log(right + 1) + leading


def evaluate(f: FitnessFunction, x) -> object:
    x = as_bitstring(x)
    if x.n != f.n:
        raise LengthMismatch(f"string of length {x.n} for a function of n={f.n}")
    b = x.bits
    if f.kind is Kind.ONEMAX:
        return sum(b)
    if f.kind is Kind.BINVAL:
        return x.index
    if f.kind is Kind.LINEAR:
        return sum(w for w, s in zip(f.weights, b) if s)
    if f.kind is Kind.NONLINEAR_EXAMPLE:
        return _nonlinear_value(b)
    return f.table[x.index]


def _integer_weights(f: FitnessFunction) -> Optional[np.ndarray]:
    """int64 weights if f is linear with integer weights whose sums fit."""
    if f.kind is Kind.ONEMAX:
        return np.ones(f.n, dtype=np.int64)
    if f.kind is Kind.BINVAL:
        if f.n > 62:
            return None
        return np.array([1 << (f.n - 1 - i) for i in range(f.n)], dtype=np.int64)
    if f.kind is Kind.LINEAR:
        if not all(isinstance(w, int) or (isinstance(w, Fraction) and w.denominator == 1)
                   for w in f.weights):
            return None
        w = [int(v) for v in f.weights]
        if sum(abs(v) for v in w) >= 1 << 62:
            return None
        return np.array(w, dtype=np.int64)
    return None


@functools.lru_cache(maxsize=64)
def _ranks_cached(f: FitnessFunction) -> Tuple[np.ndarray, int]:
    n = f.n
    if f.kind is Kind.ONEMAX:
        idx = np.arange(1 << n, dtype=np.uint64)
        return np.bitwise_count(idx).astype(np.int64), n + 1
    if f.kind is Kind.BINVAL:
        return np.arange(1 << n, dtype=np.int64), 1 << n
    w = _integer_weights(f)
    if w is not None:
        values = state_bits(n).astype(np.int64) @ w
        uniq, inv = np.unique(values, return_inverse=True)
        return inv.astype(np.int64).ravel(), len(uniq)
    values = [evaluate(f, BitString.from_index(i, n)) for i in range(1 << n)]
    uniq = sorted(set(values))
    pos = {v: r for r, v in enumerate(uniq)}
    return np.array([pos[v] for v in values], dtype=np.int64), len(uniq)


def fitness_ranks(f: FitnessFunction) -> Tuple[np.ndarray, int]:
    """Dense rank of f over every state index, plus the number of distinct values.

    Equal fitness gives equal rank; ranks preserve the strict order exactly.
    """
    check_cap(f.n, TABLE_CAP, "fitness table")
    ranks, count = _ranks_cached(f)
    ranks.flags.writeable = False
    return ranks, count


def kernel_fitness(f: FitnessFunction):
    """Arrays driving the simulation kernels.

    Returns ``(mode, weights, table, optimum)``: mode 0 sums int64 weights over
    the one bits, mode 1 looks up a precomputed rank table by state index.
    """
    w = _integer_weights(f)
    if w is not None:
        return 0, w, np.zeros(1, dtype=np.int64), int(np.clip(w, 0, None).sum())
    if f.n > TABLE_CAP:
        raise CapExceeded(
            f"{f.label} with n={f.n} needs a rank table; cap is n <= {TABLE_CAP}"
        )
    ranks, count = fitness_ranks(f)
    return 1, np.zeros(f.n, dtype=np.int64), np.ascontiguousarray(ranks), count - 1


def random_sorted_linear(n: int, rng: np.random.Generator, max_weight: int = 20):
    """Linear function with random integer weights sorted non-increasingly."""
    w = np.sort(rng.integers(1, max_weight + 1, size=n))[::-1]
    return FitnessFunction.sorted_linear([int(v) for v in w])


# property checkers -------------------------------------------------------

@dataclass(frozen=True)
class PropertyReport:
    """Outcome of an exhaustive property check.

    ``condition`` is 0 for the domination (monotonicity) requirement and
    1, 2 or 3 for the linear-like conditions. ``witness`` lists the strings
    involved: ``(x, y)`` for conditions 0-2, ``(u, v, u', v')`` for condition 3.
    """
    holds: bool
    property: str
    condition: Optional[int] = None
    witness: Optional[Tuple[BitString, ...]] = None

    def reproduce(self, f: FitnessFunction) -> bool:
        """Re-evaluate the witness; True if it is a genuine violation."""
        if self.holds:
            return False
        fx = [evaluate(f, w) for w in self.witness]
        if self.condition == 0:
            x, y = self.witness
            dominates = all(a >= b for a, b in zip(x.bits, y.bits)) and x != y
            return dominates and not fx[0] > fx[1]
        if self.condition == 1:
            return not fx[0] < fx[1]
        if self.condition == 2:
            return fx[0] > fx[1]
        return fx[0] < fx[1] and not fx[2] < fx[3]

    def describe(self) -> str:
        if self.holds:
            return f"{self.property}: holds"
        wit = "/".join(str(w) for w in self.witness)
        if self.condition == 0:
            return f"not {self.property}, domination violated, witness {wit}"
        return f"not {self.property}, condition {self.condition}, witness {wit}"

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "property": self.property,
            "condition": self.condition,
            "witness": None if self.witness is None else [str(w) for w in self.witness],
        }


def _bs(i, n) -> BitString:
    return BitString.from_index(int(i), n)


def _single_bit_violation(ranks: np.ndarray, n: int):
    states = np.arange(1 << n, dtype=np.int64)
    for pos in range(n):
        m = 1 << (n - 1 - pos)
        low = states[(states & m) == 0]
        bad = ranks[low] >= ranks[low | m]
        if bad.any():
            y = int(low[np.argmax(bad)])
            return y | m, y
    return None


def _swap_pairs(n: int):
    states = np.arange(1 << n, dtype=np.int64)
    for i in range(n):
        mi = 1 << (n - 1 - i)
        for j in range(i + 1, n):
            mj = 1 << (n - 1 - j)
            u = states[((states & mi) == 0) & ((states & mj) != 0)]
            yield u, u ^ mi ^ mj


def check_monotonic(f: FitnessFunction) -> PropertyReport:
    """Strict order preservation under domination, checked exhaustively.

    Domination chains decompose into single 0->1 flips, so it suffices to
    check f(x) < f(x + e_i) for every x and zero position i.
    """
    check_cap(f.n, CHECK_CAP, "exhaustive checker")
    ranks, _ = fitness_ranks(f)
    hit = _single_bit_violation(ranks, f.n)
    if hit is None:
        return PropertyReport(True, "monotonic")
    x, y = hit
    return PropertyReport(False, "monotonic", 0, (_bs(x, f.n), _bs(y, f.n)))


def check_linear_like(f: FitnessFunction) -> PropertyReport:
    check_cap(f.n, CHECK_CAP, "exhaustive checker")
    n = f.n
    ranks, _ = fitness_ranks(f)
    hit = _single_bit_violation(ranks, n)
    if hit is not None:
        x, y = hit
        return PropertyReport(False, "linear-like", 1, (_bs(y, n), _bs(x, n)))
    for u, v in _swap_pairs(n):
        bad = ranks[u] > ranks[v]
        if bad.any():
            k = int(np.argmax(bad))
            return PropertyReport(False, "linear-like", 2, (_bs(u[k], n), _bs(v[k], n)))
    for u, v in _swap_pairs(n):
        wit = _condition3_violation(ranks[u], ranks[v])
        if wit is not None:
            a, b = wit
            return PropertyReport(
                False, "linear-like", 3,
                (_bs(u[a], n), _bs(u[b], n), _bs(v[a], n), _bs(v[b], n)),
            )
    return PropertyReport(True, "linear-like")


def _condition3_violation(ru: np.ndarray, rv: np.ndarray):
    """Find a, b with ru[a] < ru[b] and rv[a] >= rv[b], or None."""
    if len(ru) < 2:
        return None
    order = np.lexsort((rv, ru))
    su, sv = ru[order], rv[order]
    starts = np.flatnonzero(np.r_[True, su[1:] != su[:-1]])
    if len(starts) < 2:
        return None
    # minimum rv inside each ru-group is its first element (secondary sort key)
    group_min = sv[starts]
    group_max = np.maximum.reduceat(sv, starts)
    prefix_max = np.maximum.accumulate(group_max)[:-1]
    bad = prefix_max >= group_min[1:]
    if not bad.any():
        return None
    g = int(np.argmax(bad)) + 1
    b = order[starts[g]]
    earlier = order[: starts[g]]
    a = earlier[int(np.argmax(rv[earlier]))]
    return int(a), int(b)
