import itertools

import numpy as np
import pytest

from driftlab import _accel


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run a test under each kernel backend."""
    if request.param == "numba" and not _accel.NUMBA_AVAILABLE:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_accel, "USE_NUMBA", request.param == "numba")
    return request.param


def all_strings(n):
    return [tuple(b) for b in itertools.product((0, 1), repeat=n)]


def brute_child_law(x, n):
    """Single-child law by enumerating every flip mask."""
    p = 1.0 / n
    law = {}
    for mask in itertools.product((0, 1), repeat=n):
        y = tuple(a ^ m for a, m in zip(x, mask))
        h = sum(mask)
        law[y] = law.get(y, 0.0) + p ** h * (1 - p) ** (n - h)
    return law


def brute_transition_row(x, fit, n, N):
    """Next-parent law by enumerating every N-tuple of children and every
    tie among the fittest ones."""
    law = brute_child_law(x, n)
    children = list(law)
    row = {}
    for combo in itertools.product(children, repeat=N):
        pr = np.prod([law[c] for c in combo])
        best = max(fit(c) for c in combo)
        if not best > fit(x):
            row[x] = row.get(x, 0.0) + pr
            continue
        maxers = [c for c in combo if fit(c) == best]
        for c in maxers:
            row[c] = row.get(c, 0.0) + pr / len(maxers)
    return row
