import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from driftlab.core import BitString, enumerate_all
from driftlab.errors import CapExceeded, ConfigError, LengthMismatch
from driftlab.fitness import (
    FitnessFunction,
    check_linear_like,
    check_monotonic,
    evaluate,
    fitness_ranks,
    kernel_fitness,
    random_sorted_linear,
)


# naive reference checkers -------------------------------------------------

def brute_monotonic(f):
    """Every dominated pair, O(3**n)."""
    n = f.n
    for x in itertools.product((0, 1), repeat=n):
        ones = [i for i in range(n) if x[i]]
        fx = f(BitString(x))
        for r in range(1, len(ones) + 1):
            for drop in itertools.combinations(ones, r):
                y = list(x)
                for i in drop:
                    y[i] = 0
                if not fx > f(BitString(tuple(y))):
                    return False
    return True


def _swap_instances(n):
    """(i, j, u, v): u has 0 at i and 1 at j, v is u with both flipped."""
    for i, j in itertools.combinations(range(n), 2):
        rest = [k for k in range(n) if k not in (i, j)]
        for bits in itertools.product((0, 1), repeat=n - 2):
            u = [0] * n
            for k, b in zip(rest, bits):
                u[k] = b
            v = list(u)
            u[i], u[j] = 0, 1
            v[i], v[j] = 1, 0
            yield i, j, BitString(tuple(u)), BitString(tuple(v))


def brute_linear_like(f):
    n = f.n
    for x in itertools.product((0, 1), repeat=n):
        for i in range(n):
            if x[i] == 0:
                y = list(x)
                y[i] = 1
                if not f(BitString(x)) < f(BitString(tuple(y))):
                    return 1
    inst = list(_swap_instances(n))
    for _, _, u, v in inst:
        if f(u) > f(v):
            return 2
    by_pair = {}
    for i, j, u, v in inst:
        by_pair.setdefault((i, j), []).append((f(u), f(v)))
    for pairs in by_pair.values():
        for (fu1, fv1), (fu2, fv2) in itertools.product(pairs, repeat=2):
            if fu1 < fu2 and not fv1 < fv2:
                return 3
    return 0


# evaluation ----------------------------------------------------------------

def test_evaluate_examples():
    assert evaluate(FitnessFunction.onemax(3), "101") == 2
    assert evaluate(FitnessFunction.binval(3), "110") == 6
    assert evaluate(FitnessFunction.linear([3, 1]), "01") == 1


def test_evaluate_length_mismatch():
    with pytest.raises(LengthMismatch):
        evaluate(FitnessFunction.onemax(3), "10")


def test_binval_is_exact_beyond_float():
    f = FitnessFunction.binval(80)
    x = BitString((1,) * 80)
    assert evaluate(f, x) == 2 ** 80 - 1


def test_sorted_linear_validation():
    with pytest.raises(ValueError):
        FitnessFunction.sorted_linear([1, 2])
    with pytest.raises(ValueError):
        FitnessFunction.sorted_linear([2, 0])


def test_table_requires_every_string():
    with pytest.raises(ValueError):
        FitnessFunction.from_table({"00": 0, "01": 1, "10": 1})


def test_nonlinear_values_small():
    f = FitnessFunction.nonlinear_example(4)
    # left half 10 -> exp(8); right 01 -> ln 2; leading ones 1
    v = evaluate(f, "1001")
    assert float(v) == pytest.approx(math.exp(8) + math.log(2) + 1, rel=1e-15)


@pytest.mark.parametrize("n", [2, 4, 6, 8, 10, 12])
def test_nonlinear_ranking_matches_key(n):
    # exp of the left-half value dominates: for n >= 2 the gap between two
    # left values exceeds the largest possible ln + prefix contribution
    def key(x):
        h = n // 2
        L = sum(b << (n - 1 - i) for i, b in enumerate(x.bits[:h]))
        right = sum(x.bits[h:])
        lead = next((i for i, b in enumerate(x.bits) if not b), n)
        return L, math.log(right + 1) + lead, right, lead

    f = FitnessFunction.nonlinear_example(n)
    ranks, count = fitness_ranks(f)
    keys = [key(x)[:2] + (key(x)[2], key(x)[3]) for x in enumerate_all(n)]
    ordered = sorted(set((k[0], k[1]) for k in keys))
    want = {k: r for r, k in enumerate(ordered)}
    assert count == len(ordered)
    assert all(ranks[i] == want[(k[0], k[1])] for i, k in enumerate(keys))


def test_json_roundtrip():
    for f in (FitnessFunction.onemax(4), FitnessFunction.binval(5),
              FitnessFunction.linear([4, 3, 2, 1]), FitnessFunction.linear([Fraction(1, 3), 2]),
              FitnessFunction.from_table({"00": 0, "01": 2, "10": 1, "11": 5})):
        assert FitnessFunction.from_json(f.to_json()) == f
    d = json.loads('{"kind":"linear","n":4,"weights":[4,3,2,1]}')
    assert FitnessFunction.from_dict(d).weights == (4, 3, 2, 1)


@pytest.mark.parametrize("bad", [{"kind": "nope", "n": 2}, {"kind": "onemax"},
                                 {"kind": "linear"}, {"kind": "linear", "n": 3, "weights": [1, 2]}])
def test_bad_json(bad):
    with pytest.raises(ConfigError):
        FitnessFunction.from_dict(bad)


def test_ranks_respect_exact_order():
    f = FitnessFunction.linear([Fraction(1, 3), Fraction(1, 3), Fraction(2, 3)])
    ranks, count = fitness_ranks(f)
    vals = [evaluate(f, x) for x in enumerate_all(3)]
    for i, j in itertools.product(range(8), repeat=2):
        assert (ranks[i] < ranks[j]) == (vals[i] < vals[j])
    assert count == len(set(vals))


def test_kernel_fitness_modes():
    assert kernel_fitness(FitnessFunction.onemax(100))[0] == 0
    assert kernel_fitness(FitnessFunction.linear([0.5, 0.25]))[0] == 1
    with pytest.raises(CapExceeded):
        kernel_fitness(FitnessFunction.linear([0.5] * 21))


# property checkers --------------------------------------------------------

def test_monotonic_examples():
    assert check_monotonic(FitnessFunction.onemax(4)).holds
    t = FitnessFunction.from_table({"00": -1, "01": -0.5, "10": 1, "11": 0})
    rep = check_monotonic(t)
    assert not rep.holds and rep.reproduce(t)
    assert [str(w) for w in rep.witness] == ["11", "10"]
    assert check_monotonic(FitnessFunction.binval(6)).holds


def test_linear_like_examples():
    assert check_linear_like(FitnessFunction.linear([2, 1])).holds
    f = FitnessFunction.linear([1, 2])
    rep = check_linear_like(f)
    assert not rep.holds and rep.condition == 2
    assert [str(w) for w in rep.witness] == ["01", "10"]
    assert rep.reproduce(f)
    assert rep.describe() == "not linear-like, condition 2, witness 01/10"
    assert check_linear_like(FitnessFunction.onemax(5)).holds


def test_checker_cap():
    with pytest.raises(CapExceeded):
        check_linear_like(FitnessFunction.onemax(13))
    with pytest.raises(CapExceeded):
        check_monotonic(FitnessFunction.onemax(13))


weights = st.lists(st.integers(1, 6), min_size=1, max_size=6)


@settings(max_examples=80, deadline=None)
@given(weights)
def test_linear_checker_matches_brute_force(w):
    f = FitnessFunction.linear(w)
    rep = check_linear_like(f)
    want = brute_linear_like(f)
    assert rep.holds == (want == 0)
    if not rep.holds:
        assert rep.condition == want
        assert rep.reproduce(f)


tables = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.integers(0, 6), min_size=2 ** n, max_size=2 ** n).map(
        lambda v: FitnessFunction.from_table(
            {str(BitString.from_index(i, n)): x for i, x in enumerate(v)})))


@settings(max_examples=80, deadline=None)
@given(tables)
def test_table_checkers_match_brute_force(f):
    assert check_monotonic(f).holds == brute_monotonic(f)
    rep = check_linear_like(f)
    want = brute_linear_like(f)
    assert rep.holds == (want == 0)
    if not rep.holds:
        assert rep.condition == want
        assert rep.reproduce(f)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 32))
def test_linear_like_implies_monotonic(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.integers(1, 5, size=n).tolist()
    f = FitnessFunction.linear(w)
    if check_linear_like(f).holds:
        assert check_monotonic(f).holds


@pytest.mark.parametrize("n", range(1, 11))
def test_monotonic_optimum_is_all_ones(n):
    rng = np.random.default_rng(n)
    for f in (FitnessFunction.onemax(n), FitnessFunction.binval(n), random_sorted_linear(n, rng)):
        assert check_monotonic(f).holds if n <= 12 else True
        ranks, count = fitness_ranks(f)
        assert np.flatnonzero(ranks == count - 1).tolist() == [2 ** n - 1]


@pytest.mark.parametrize("n", [2, 4, 6])
def test_nonlinear_example_linear_like_small(n):
    f = FitnessFunction.nonlinear_example(n)
    assert check_linear_like(f).holds
    assert brute_linear_like(f) == 0


def test_nonlinear_example_fails_condition3_at_8():
    # finding: the left-half exponent ties, so the ln and prefix terms decide,
    # and a shared swap can reorder two strings
    f = FitnessFunction.nonlinear_example(8)
    rep = check_linear_like(f)
    assert not rep.holds and rep.condition == 3
    assert rep.reproduce(f)
    u, v, u2, v2 = rep.witness
    assert f(u) < f(v) and not f(u2) < f(v2)
