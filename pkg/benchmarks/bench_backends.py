"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_backends.py [--repeat 3]

Both backends are exercised in one process by flipping the dispatch flag;
results are also checked for agreement so a fast but wrong kernel shows up.
"""
import argparse
import time

import numpy as np

from driftlab import _accel, kernels
from driftlab.engine import EaConfig, batch_run
from driftlab.fitness import FitnessFunction, fitness_ranks, kernel_fitness


def timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    f10 = FitnessFunction.binval(10)
    ranks, count = fitness_ranks(f10)

    def matrix():
        return kernels.transition_matrix(ranks, count, 10, 4)[0]

    def hitting():
        P, esc = kernels.transition_matrix(ranks, count, 10, 4)
        return kernels.hitting_times(P, esc, ranks)[0]

    def batch():
        return batch_run(EaConfig(FitnessFunction.onemax(32), 4), 2000, 11).generations

    mode, w, tab, _ = kernel_fitness(FitnessFunction.onemax(64))
    x = np.zeros(64, dtype=np.uint8)

    def step():
        rng = np.random.Generator(np.random.PCG64(3))
        return kernels.next_levels(rng, x, 8, mode, w, tab, 100_000)

    return [("transition matrix, BinVal n=10 N=4", matrix),
            ("matrix + hitting times, BinVal n=10 N=4", hitting),
            ("2000 runs, OneMax n=32 N=4", batch),
            ("100k one-step samples, OneMax n=64 N=8", step)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy backend can run")
    saved = _accel.USE_NUMBA
    print(f"{'case':45s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  agree")
    for name, fn in cases():
        res = {}
        for backend in ("numba", "numpy"):
            if backend == "numba" and not _accel.NUMBA_AVAILABLE:
                continue
            _accel.USE_NUMBA = backend == "numba"
            fn()  # compile / warm caches
            res[backend] = timed(fn, args.repeat)
        _accel.USE_NUMBA = saved
        t_np, out_np = res["numpy"]
        if "numba" in res:
            t_nb, out_nb = res["numba"]
            agree = np.allclose(out_nb, out_np, rtol=1e-12, atol=0)
            print(f"{name:45s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}  {agree}")
        else:
            print(f"{name:45s} {'-':>10s} {t_np:10.4f} {'-':>8s}  -")


if __name__ == "__main__":
    main()
