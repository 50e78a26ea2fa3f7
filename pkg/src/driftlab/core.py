"""Bit strings, level sets S_0..S_n and the left/right side classification.

States are also addressed by an integer index in ``[0, 2**n)``: bit ``i``
(1-based, leftmost first) carries weight ``2**(n - i)``, so the index of a
string equals its BinVal value.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence

import numpy as np

from .errors import CapExceeded, LengthMismatch

ENUMERATION_CAP = 20


@dataclass(frozen=True)
class BitString:
    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise ValueError("bit string must have length >= 1")
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"bits must be 0/1, got {self.bits!r}")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    @classmethod
    def from_str(cls, s: str) -> "BitString":
        s = s.strip()
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"not a bit-string literal: {s!r}")
        return cls(tuple(int(c) for c in s))

    @classmethod
    def from_index(cls, index: int, n: int) -> "BitString":
        if not 0 <= index < (1 << n):
            raise ValueError(f"index {index} out of range for n={n}")
        return cls(tuple((index >> (n - 1 - j)) & 1 for j in range(n)))

    @classmethod
    def from_array(cls, arr) -> "BitString":
        return cls(tuple(int(b) for b in np.asarray(arr).ravel()))

    @property
    def index(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    def to_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def __str__(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]


class SideClass(enum.Enum):
    LEFT_HEAVY = "left_heavy"
    RIGHT = "right"
    OPTIMAL = "optimal"


def as_bitstring(x) -> BitString:
    if isinstance(x, BitString):
        return x
    if isinstance(x, str):
        return BitString.from_str(x)
    return BitString(tuple(x))


def ones_count(x: BitString) -> int:
    return sum(as_bitstring(x).bits)


def zeros_count(x: BitString) -> int:
    x = as_bitstring(x)
    return x.n - sum(x.bits)


def level_index(x: BitString) -> int:
    """Number of zero bits k, so that x lies in S_k."""
    return zeros_count(x)


def left_half_size(n: int) -> int:
    return n // 2


def classify_side(x: BitString) -> SideClass:
    """LEFT_HEAVY if a non-optimal string has more ones in positions
    1..floor(n/2) than in the rest; the all-ones string is OPTIMAL."""
    x = as_bitstring(x)
    if all(x.bits):
        return SideClass.OPTIMAL
    h = left_half_size(x.n)
    if sum(x.bits[:h]) > sum(x.bits[h:]):
        return SideClass.LEFT_HEAVY
    return SideClass.RIGHT


def hamming(x: BitString, y: BitString) -> int:
    x, y = as_bitstring(x), as_bitstring(y)
    if x.n != y.n:
        raise LengthMismatch(f"lengths differ: {x.n} vs {y.n}")
    return sum(a != b for a, b in zip(x.bits, y.bits))


def check_cap(n: int, cap: int = ENUMERATION_CAP, what: str = "enumeration"):
    if n > cap:
        raise CapExceeded(f"n={n} exceeds the {what} cap of {cap}")


def enumerate_level(n: int, k: int) -> List[BitString]:
    """All strings of length n with exactly k zeros, in increasing index order."""
    check_cap(n)
    if not 0 <= k <= n:
        raise ValueError(f"level k={k} outside [0, {n}]")
    out = []
    for zeros in itertools.combinations(range(n), k):
        bits = [1] * n
        for j in zeros:
            bits[j] = 0
        out.append(BitString(tuple(bits)))
    out.sort(key=lambda b: b.index)
    return out


def enumerate_all(n: int) -> Iterator[BitString]:
    check_cap(n)
    for i in range(1 << n):
        yield BitString.from_index(i, n)


# vectorised helpers over the integer state space ---------------------------

def state_bits(n: int) -> np.ndarray:
    """(2**n, n) uint8 matrix; row i holds the bits of state index i."""
    check_cap(n)
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def state_levels(n: int) -> np.ndarray:
    """Number of zero bits of every state index."""
    check_cap(n)
    idx = np.arange(1 << n, dtype=np.uint64)
    return (n - np.bitwise_count(idx)).astype(np.int64)


def state_sides(n: int) -> np.ndarray:
    """Side tag per state index: 1 = LEFT_HEAVY, 0 = RIGHT, 2 = OPTIMAL."""
    bits = state_bits(n).astype(np.int64)
    h = left_half_size(n)
    left = bits[:, :h].sum(axis=1)
    right = bits[:, h:].sum(axis=1)
    tag = np.where(left > right, 1, 0)
    tag[-1] = 2
    return tag


def state_right_heavy(n: int) -> np.ndarray:
    """Mask of states with strictly more ones on the right than on the left."""
    bits = state_bits(n).astype(np.int64)
    h = left_half_size(n)
    mask = bits[:, h:].sum(axis=1) > bits[:, :h].sum(axis=1)
    mask[-1] = False
    return mask


def indices_of(strings: Iterable[BitString]) -> Sequence[int]:
    return [as_bitstring(s).index for s in strings]
