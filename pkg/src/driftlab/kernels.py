"""Hot loops, each with a numba implementation and a pure-numpy one.

The public names at the bottom dispatch on ``_accel.USE_NUMBA`` at call time.
Random draws follow one fixed order in both backends: an optional n uniforms
for the initial string, then per generation N*n uniforms (child-major, bit
order within a child) followed by a single uniform used to break ties among
equally fit best children. Identical seeds therefore give identical runs.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# shared scalar helpers


@njit
def _pow_complement(a, N):
    """(1 - a)**N for a in [0, 1]."""
    if a >= 1.0:
        return 0.0
    return math.exp(N * math.log1p(-a))


@njit
def _escape(a, N):
    """1 - (1 - a)**N, accurate for small a."""
    if a >= 1.0:
        return 1.0
    return -math.expm1(N * math.log1p(-a))


@njit
def _best_of(a, m, N):
    """(1 - a)**N - (1 - a - m)**N, the chance that the best of N children
    lands on a level of mass m when mass a lies strictly above it.

    Factored as (1 - a)**N * (1 - (1 - m / (1 - a))**N) so that levels far
    lighter than the mass above them keep full relative precision.
    """
    if N == 1:
        return m
    if a >= 1.0:
        return 0.0
    ca = 1.0 - a
    head = math.exp(N * math.log1p(-a))
    r = m / ca
    if r >= 1.0:
        return head
    return head * -math.expm1(N * math.log1p(-r))


def _mutation_powers(n):
    p = 1.0 / n
    return np.array([p ** h * (1.0 - p) ** (n - h) for h in range(n + 1)])


def _popcounts(S):
    return np.bitwise_count(np.arange(S, dtype=np.uint64)).astype(np.int64)


# ---------------------------------------------------------------------------
# dense transition matrix of the (1+N) EA


@njit
def _transition_matrix_numba(ranks, n_ranks, n, N, qpow, pc):
    S = ranks.shape[0]
    P = np.zeros((S, S))
    esc = np.zeros(S)
    mass = np.empty(n_ranks)
    upper = np.empty(n_ranks)
    for x in range(S):
        mass[:] = 0.0
        for y in range(S):
            mass[ranks[y]] += qpow[pc[x ^ y]]
        above = 0.0
        for r in range(n_ranks - 1, -1, -1):
            upper[r] = above
            above += mass[r]
        rx = ranks[x]
        P[x, x] = _pow_complement(upper[rx], N)
        esc[x] = _escape(upper[rx], N)
        for y in range(S):
            F = ranks[y]
            if F > rx:
                a = upper[F]
                P[x, y] = qpow[pc[x ^ y]] / mass[F] * _best_of(a, mass[F], N)
    return P, esc


def _transition_matrix_numpy(ranks, n_ranks, n, N, qpow, pc):
    S = ranks.shape[0]
    P = np.zeros((S, S))
    esc = np.zeros(S)
    states = np.arange(S)
    log1p, expm1 = np.log1p, np.expm1
    for x in range(S):
        q = qpow[pc[x ^ states]]
        mass = np.bincount(ranks, weights=q, minlength=n_ranks)
        # upper[r] = total mass strictly above rank r, summed from the top
        upper = np.concatenate((np.cumsum(mass[::-1])[::-1][1:], [0.0]))
        rx = ranks[x]
        a_x = upper[rx]
        P[x, x] = 0.0 if a_x >= 1.0 else math.exp(N * math.log1p(-a_x))
        esc[x] = 1.0 if a_x >= 1.0 else -math.expm1(N * math.log1p(-a_x))
        fitter = ranks > rx
        if not fitter.any():
            continue
        F = ranks[fitter]
        a = upper[F]
        m = mass[F]
        if N == 1:
            sel = m
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                ca = 1.0 - a
                head = np.exp(N * log1p(-a))
                r = m / ca
                sel = np.where(r >= 1.0, head, head * -expm1(N * log1p(-np.minimum(r, 1.0))))
            sel = np.where(a >= 1.0, 0.0, sel)
        P[x, fitter] = q[fitter] / mass[F] * sel
    return P, esc


def transition_matrix(ranks, n_ranks, n, N):
    """Dense next-parent probabilities and per-state escape mass 1 - P(x|x)."""
    ranks = np.ascontiguousarray(ranks, dtype=np.int64)
    qpow = _mutation_powers(n)
    pc = _popcounts(ranks.shape[0])
    impl = _transition_matrix_numba if _accel.USE_NUMBA else _transition_matrix_numpy
    return impl(ranks, int(n_ranks), int(n), int(N), qpow, pc)


# ---------------------------------------------------------------------------
# expected hitting times by back-substitution over decreasing fitness


@njit
def _hitting_times_numba(P, esc, ranks, order, top):
    S = P.shape[0]
    g = np.zeros(S)
    for t in range(S):
        x = order[t]
        if ranks[x] == top:
            continue
        if esc[x] <= 0.0:
            return g, x
        acc = 1.0
        for y in range(S):
            if y != x:
                acc += P[x, y] * g[y]
        g[x] = acc / esc[x]
    return g, -1


def _hitting_times_numpy(P, esc, ranks, order, top):
    S = P.shape[0]
    g = np.zeros(S)
    sorted_ranks = ranks[order]
    starts = np.flatnonzero(np.r_[True, sorted_ranks[1:] != sorted_ranks[:-1]])
    bounds = np.r_[starts, S]
    for s, e in zip(bounds[:-1], bounds[1:]):
        grp = order[s:e]
        if ranks[grp[0]] == top:
            continue
        if (esc[grp] <= 0.0).any():
            return g, int(grp[np.argmax(esc[grp] <= 0.0)])
        # states of one rank never move to each other, and g is still 0 on them
        g[grp] = (1.0 + P[grp] @ g) / esc[grp]
    return g, -1


def hitting_times(P, esc, ranks):
    """Solve g = 1 + P g off the top rank; returns (g, bad_state or -1)."""
    ranks = np.ascontiguousarray(ranks, dtype=np.int64)
    order = np.argsort(-ranks, kind="stable")
    top = int(ranks.max())
    impl = _hitting_times_numba if _accel.USE_NUMBA else _hitting_times_numpy
    return impl(P, esc, ranks, order, top)


# ---------------------------------------------------------------------------
# positive / negative drift split


@njit
def _drift_parts_numba(P, d):
    S = P.shape[0]
    pos = np.zeros(S)
    neg = np.zeros(S)
    for x in range(S):
        dx = d[x]
        for y in range(S):
            p = P[x, y]
            if p == 0.0:
                continue
            diff = dx - d[y]
            if diff > 0.0:
                pos[x] += diff * p
            elif diff < 0.0:
                neg[x] += diff * p
    return pos, neg


def _drift_parts_numpy(P, d, chunk=512):
    S = P.shape[0]
    pos = np.zeros(S)
    neg = np.zeros(S)
    for s in range(0, S, chunk):
        rows = slice(s, min(s + chunk, S))
        diff = d[rows, None] - d[None, :]
        contrib = diff * P[rows]
        pos[rows] = np.where(diff > 0, contrib, 0.0).sum(axis=1)
        neg[rows] = np.where(diff < 0, contrib, 0.0).sum(axis=1)
    return pos, neg


def drift_parts(P, d):
    """Per-state (positive, negative) drift of distance values d under P."""
    d = np.ascontiguousarray(d, dtype=np.float64)
    impl = _drift_parts_numba if _accel.USE_NUMBA else _drift_parts_numpy
    return impl(P, d)


# ---------------------------------------------------------------------------
# (1+N) EA simulation
#
# mode 0: fitness = sum of int64 weights over one bits (tracked incrementally)
# mode 1: fitness = table[state index], index tracked by xor with pow2


@njit
def _fitness_of_numba(bits, mode, weights, table, pow2):
    n = bits.shape[0]
    if mode == 0:
        f = 0
        for i in range(n):
            if bits[i]:
                f += weights[i]
        return f, 0
    idx = 0
    for i in range(n):
        if bits[i]:
            idx += pow2[i]
    return table[idx], idx


@njit
def _step_numba(rng, bits, fit, idx, N, p, mode, weights, table, pow2, flips, cfit, cidx):
    n = bits.shape[0]
    best = fit
    count = 0
    first = True
    for c in range(N):
        f = fit
        ix = idx
        for i in range(n):
            if rng.random() < p:
                flips[c, i] = 1
                if mode == 0:
                    if bits[i]:
                        f -= weights[i]
                    else:
                        f += weights[i]
                else:
                    ix ^= pow2[i]
            else:
                flips[c, i] = 0
        if mode == 1:
            f = table[ix]
        cfit[c] = f
        cidx[c] = ix
        if first or f > best:
            best = f
            count = 1
            first = False
        elif f == best:
            count += 1
    u = rng.random()
    if best <= fit:
        return fit, idx, False
    pick = int(u * count)
    if pick >= count:
        pick = count - 1
    chosen = 0
    seen = 0
    for c in range(N):
        if cfit[c] == best:
            if seen == pick:
                chosen = c
                break
            seen += 1
    for i in range(n):
        if flips[chosen, i]:
            bits[i] ^= 1
    return best, cidx[chosen], True


def _step_numpy(rng, bits, fit, idx, N, p, mode, weights, table, pow2):
    n = bits.shape[0]
    flips = rng.random((N, n)) < p
    u = rng.random()
    f64 = flips.astype(np.int64)
    if mode == 0:
        signed = np.where(bits.astype(bool), -weights, weights)
        cfit = fit + f64 @ signed
        cidx = np.zeros(N, dtype=np.int64)
    else:
        cidx = idx ^ (f64 @ pow2)
        cfit = table[cidx]
    best = cfit.max()
    if best <= fit:
        return fit, idx, False
    maxers = np.flatnonzero(cfit == best)
    pick = min(int(u * len(maxers)), len(maxers) - 1)
    chosen = maxers[pick]
    bits ^= flips[chosen].astype(bits.dtype)
    return int(best), int(cidx[chosen]), True


@njit
def _init_bits_numba(rng, n):
    bits = np.empty(n, dtype=np.uint8)
    for i in range(n):
        bits[i] = 1 if rng.random() < 0.5 else 0
    return bits


def _init_bits_numpy(rng, n):
    return (rng.random(n) < 0.5).astype(np.uint8)


@njit
def _run_numba(rng, bits, random_init, N, mode, weights, table, pow2, optimum, max_gen):
    n = bits.shape[0]
    p = 1.0 / n
    if random_init:
        for i in range(n):
            bits[i] = 1 if rng.random() < 0.5 else 0
    fit, idx = _fitness_of_numba(bits, mode, weights, table, pow2)
    flips = np.empty((N, n), dtype=np.uint8)
    cfit = np.empty(N, dtype=np.int64)
    cidx = np.empty(N, dtype=np.int64)
    gen = 0
    while fit < optimum and gen < max_gen:
        fit, idx, _ = _step_numba(rng, bits, fit, idx, N, p, mode, weights, table,
                                  pow2, flips, cfit, cidx)
        gen += 1
    return gen, fit >= optimum


def _fitness_of_numpy(bits, mode, weights, table, pow2):
    if mode == 0:
        return int(bits.astype(np.int64) @ weights), 0
    idx = int(bits.astype(np.int64) @ pow2)
    return int(table[idx]), idx


def _run_numpy(rng, bits, random_init, N, mode, weights, table, pow2, optimum, max_gen):
    n = bits.shape[0]
    p = 1.0 / n
    if random_init:
        bits[:] = rng.random(n) < 0.5
    fit, idx = _fitness_of_numpy(bits, mode, weights, table, pow2)
    gen = 0
    while fit < optimum and gen < max_gen:
        fit, idx, _ = _step_numpy(rng, bits, fit, idx, N, p, mode, weights, table, pow2)
        gen += 1
    return gen, fit >= optimum


def _pow2(n, mode):
    if mode == 1:
        return np.array([1 << (n - 1 - i) for i in range(n)], dtype=np.int64)
    return np.zeros(n, dtype=np.int64)


def init_bits(rng, n):
    impl = _init_bits_numba if _accel.USE_NUMBA else _init_bits_numpy
    return impl(rng, n)


def run_once(rng, bits, N, mode, weights, table, optimum, max_gen, random_init=False):
    """Run the EA from ``bits`` (mutated in place) until optimum or cap.

    With ``random_init`` the start string is first drawn uniformly into
    ``bits``. Returns (generations, hit_optimum).
    """
    n = bits.shape[0]
    pow2 = _pow2(n, mode)
    impl = _run_numba if _accel.USE_NUMBA else _run_numpy
    gen, hit = impl(rng, bits, bool(random_init), int(N), int(mode), weights, table,
                    pow2, int(optimum), int(max_gen))
    return int(gen), bool(hit)


@njit
def _trajectory_numba(rng, bits, N, mode, weights, table, pow2, optimum, horizon):
    n = bits.shape[0]
    p = 1.0 / n
    out = np.empty((horizon + 1, n), dtype=np.uint8)
    out[0] = bits
    fit, idx = _fitness_of_numba(bits, mode, weights, table, pow2)
    flips = np.empty((N, n), dtype=np.uint8)
    cfit = np.empty(N, dtype=np.int64)
    cidx = np.empty(N, dtype=np.int64)
    for t in range(1, horizon + 1):
        if fit < optimum:
            fit, idx, _ = _step_numba(rng, bits, fit, idx, N, p, mode, weights, table,
                                      pow2, flips, cfit, cidx)
        out[t] = bits
    return out


def _trajectory_numpy(rng, bits, N, mode, weights, table, pow2, optimum, horizon):
    n = bits.shape[0]
    p = 1.0 / n
    out = np.empty((horizon + 1, n), dtype=np.uint8)
    out[0] = bits
    fit, idx = _fitness_of_numpy(bits, mode, weights, table, pow2)
    for t in range(1, horizon + 1):
        if fit < optimum:
            fit, idx, _ = _step_numpy(rng, bits, fit, idx, N, p, mode, weights, table, pow2)
        out[t] = bits
    return out


def trajectory(rng, bits, N, mode, weights, table, optimum, horizon):
    """Parent states for t = 0..horizon, frozen once the optimum is reached."""
    pow2 = _pow2(bits.shape[0], mode)
    impl = _trajectory_numba if _accel.USE_NUMBA else _trajectory_numpy
    return impl(rng, bits, int(N), int(mode), weights, table, pow2,
                int(optimum), int(horizon))


@njit
def _next_levels_numba(rng, x, N, mode, weights, table, pow2, samples):
    n = x.shape[0]
    p = 1.0 / n
    fit0, idx0 = _fitness_of_numba(x, mode, weights, table, pow2)
    flips = np.empty((N, n), dtype=np.uint8)
    cfit = np.empty(N, dtype=np.int64)
    cidx = np.empty(N, dtype=np.int64)
    bits = x.copy()
    out = np.empty(samples, dtype=np.int64)
    for s in range(samples):
        bits[:] = x
        _step_numba(rng, bits, fit0, idx0, N, p, mode, weights, table, pow2,
                    flips, cfit, cidx)
        zeros = 0
        for i in range(n):
            if bits[i] == 0:
                zeros += 1
        out[s] = zeros
    return out


def _next_levels_numpy(rng, x, N, mode, weights, table, pow2, samples, chunk=1 << 14):
    n = x.shape[0]
    p = 1.0 / n
    fit0, idx0 = _fitness_of_numpy(x, mode, weights, table, pow2)
    out = np.empty(samples, dtype=np.int64)
    signed = np.where(x.astype(bool), -weights, weights)
    zeros0 = int(n - x.sum())
    delta_zeros = np.where(x.astype(bool), 1, -1)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        draws = rng.random((m, N * n + 1))
        flips = (draws[:, : N * n] < p).reshape(m, N, n)
        u = draws[:, -1]
        f64 = flips.astype(np.int64)
        if mode == 0:
            cfit = fit0 + f64 @ signed
        else:
            cfit = table[idx0 ^ (f64 @ pow2)]
        best = cfit.max(axis=1)
        is_max = cfit == best[:, None]
        count = is_max.sum(axis=1)
        pick = np.minimum((u * count).astype(np.int64), count - 1)
        # position of the pick-th maximiser in child order
        rank_among = np.cumsum(is_max, axis=1) - 1
        chosen = np.argmax(is_max & (rank_among == pick[:, None]), axis=1)
        moved = best > fit0
        dz = (f64[np.arange(m), chosen] @ delta_zeros)
        out[done: done + m] = zeros0 + np.where(moved, dz, 0)
        done += m
    return out


def next_levels(rng, x, N, mode, weights, table, samples):
    """Zero counts of the next parent for ``samples`` independent steps from x."""
    pow2 = _pow2(x.shape[0], mode)
    impl = _next_levels_numba if _accel.USE_NUMBA else _next_levels_numpy
    return impl(rng, x, int(N), int(mode), weights, table, pow2, int(samples))
