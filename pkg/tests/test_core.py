import math

import pytest
from hypothesis import given, strategies as st

from driftlab.core import (
    BitString,
    SideClass,
    classify_side,
    enumerate_all,
    enumerate_level,
    hamming,
    level_index,
    ones_count,
    state_bits,
    state_levels,
    state_right_heavy,
    state_sides,
    zeros_count,
)
from driftlab.errors import CapExceeded, LengthMismatch

bitstrings = st.lists(st.integers(0, 1), min_size=1, max_size=16).map(lambda b: BitString(tuple(b)))


def test_ones_count_examples():
    assert ones_count(BitString((1, 1, 1))) == 3
    assert ones_count(BitString((0, 0))) == 0
    assert ones_count(BitString((1, 0, 1, 0))) == 2


def test_level_index_examples():
    assert level_index(BitString((1, 1))) == 0
    assert level_index(BitString((0, 0))) == 2
    assert level_index(BitString((1, 0, 0))) == 2


def test_classify_side_examples():
    assert classify_side("1100") is SideClass.LEFT_HEAVY
    assert classify_side("0011") is SideClass.RIGHT
    assert classify_side("1111") is SideClass.OPTIMAL


def test_enumerate_level_examples():
    assert enumerate_level(2, 1) == [BitString((0, 1)), BitString((1, 0))]
    assert enumerate_level(3, 0) == [BitString((1, 1, 1))]
    assert enumerate_level(3, 3) == [BitString((0, 0, 0))]


def test_enumerate_level_cap():
    with pytest.raises(CapExceeded):
        enumerate_level(21, 1)
    with pytest.raises(ValueError):
        enumerate_level(3, 4)


@pytest.mark.parametrize("n", range(1, 11))
def test_levels_partition_the_cube(n):
    seen = set()
    for k in range(n + 1):
        lvl = enumerate_level(n, k)
        assert len(lvl) == math.comb(n, k)
        assert all(level_index(x) == k for x in lvl)
        seen.update(lvl)
    assert len(seen) == 2 ** n


@pytest.mark.parametrize("n", range(1, 11))
def test_side_classes_partition_by_recount(n):
    h = n // 2
    counts = {c: 0 for c in SideClass}
    for x in enumerate_all(n):
        c = classify_side(x)
        counts[c] += 1
        left, right = sum(x.bits[:h]), sum(x.bits[h:])
        if all(x.bits):
            assert c is SideClass.OPTIMAL
        elif left > right:
            assert c is SideClass.LEFT_HEAVY
        else:
            assert c is SideClass.RIGHT
    assert sum(counts.values()) == 2 ** n
    assert counts[SideClass.OPTIMAL] == 1


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_full_left_half_rule(n):
    h = n // 2
    for x in enumerate_all(n):
        if all(x.bits[:h]) and not all(x.bits[h:]):
            want = h > sum(x.bits[h:])
            assert (classify_side(x) is SideClass.LEFT_HEAVY) == want


@given(bitstrings)
def test_ones_plus_zeros(x):
    assert ones_count(x) + zeros_count(x) == x.n


@given(bitstrings)
def test_string_and_index_roundtrip(x):
    assert BitString.from_str(str(x)) == x
    assert BitString.from_index(x.index, x.n) == x


@given(bitstrings, st.data())
def test_hamming_properties(x, data):
    y = BitString(tuple(data.draw(st.lists(st.integers(0, 1), min_size=x.n, max_size=x.n))))
    assert hamming(x, x) == 0
    assert hamming(x, y) == hamming(y, x) <= x.n


def test_hamming_length_mismatch():
    with pytest.raises(LengthMismatch):
        hamming("01", "011")


def test_bad_literals():
    for bad in ("", "012", "ab"):
        with pytest.raises(ValueError):
            BitString.from_str(bad)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_vector_helpers_agree_with_scalar(n):
    bits, levels = state_bits(n), state_levels(n)
    sides, mirror = state_sides(n), state_right_heavy(n)
    tags = {SideClass.RIGHT: 0, SideClass.LEFT_HEAVY: 1, SideClass.OPTIMAL: 2}
    h = n // 2
    for x in enumerate_all(n):
        assert tuple(bits[x.index]) == x.bits
        assert levels[x.index] == level_index(x)
        assert sides[x.index] == tags[classify_side(x)]
        want = sum(x.bits[h:]) > sum(x.bits[:h]) and not all(x.bits)
        assert mirror[x.index] == want
