"""Stochastic simulation of the (1+N) EA with strict elitist selection.

Per-run streams: run ``i`` of a batch with master seed ``s`` uses the 64-bit
seed ``SeedSequence(s).generate_state(R, uint64)[i]`` (the word at position
``i`` does not depend on R) and a ``PCG64`` generator built from it, so each
run can be replayed on its own with :func:`run_ea`.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import kernels
from .core import BitString, as_bitstring
from .errors import LengthMismatch
from .fitness import FitnessFunction, evaluate, kernel_fitness


def default_max_generations(n: int) -> int:
    return int(math.ceil(1000 * n * (math.log(n) + 1)))


@dataclass(frozen=True)
class EaConfig:
    f: FitnessFunction
    N: int = 1
    max_generations: Optional[int] = None
    record_trajectory: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("population size N must be >= 1")
        if self.max_generations is None:
            object.__setattr__(self, "max_generations", default_max_generations(self.f.n))

    @property
    def n(self) -> int:
        return self.f.n


@dataclass
class RunRecord:
    generations: int
    evaluations: int
    seed: int
    hit_optimum: bool
    trajectory: Optional[List[BitString]] = None

    def to_dict(self) -> dict:
        d = {
            "generations": self.generations,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "hit_optimum": self.hit_optimum,
        }
        if self.trajectory is not None:
            d["trajectory"] = [str(x) for x in self.trajectory]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class BatchStats:
    runs: int
    mean_generations: float
    mean_evaluations: float
    std_error: float
    timeout_count: int
    master_seed: int = 0
    N: int = 1
    generations: np.ndarray = field(default=None, repr=False)
    hits: np.ndarray = field(default=None, repr=False)
    seeds: np.ndarray = field(default=None, repr=False)

    @property
    def std_error_evaluations(self) -> float:
        return self.std_error * self.N

    def to_dict(self) -> dict:
        keys = ("runs", "mean_generations", "mean_evaluations", "std_error",
                "timeout_count", "master_seed", "N")
        return {k: getattr(self, k) for k in keys}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seeds(master_seed: int, count: int) -> np.ndarray:
    return np.random.SeedSequence(int(master_seed)).generate_state(int(count), np.uint64)


def derive_seed(master_seed: int, index: int) -> int:
    return int(derive_seeds(master_seed, index + 1)[index])


def mutate(x: BitString, rng: np.random.Generator) -> BitString:
    """Flip every bit independently with probability 1/n."""
    x = as_bitstring(x)
    arr = x.to_array()
    flips = rng.random(x.n) < 1.0 / x.n
    return BitString.from_array(arr ^ flips.astype(np.uint8))


def select(parent: BitString, children: Sequence[BitString], f: FitnessFunction,
           rng: np.random.Generator) -> BitString:
    """Strict elitist selection: the best child replaces the parent only if it
    is strictly fitter. Ties among best children are broken uniformly."""
    if not children:
        raise ValueError("need at least one child")
    fp = evaluate(f, parent)
    fits = [evaluate(f, c) for c in children]
    best = max(fits)
    u = rng.random()
    if not best > fp:
        return as_bitstring(parent)
    maxers = [c for c, v in zip(children, fits) if v == best]
    return as_bitstring(maxers[min(int(u * len(maxers)), len(maxers) - 1)])


def _initial_bits(cfg: EaConfig, rng, init) -> np.ndarray:
    if init is None:
        return kernels.init_bits(rng, cfg.n).astype(np.uint8)
    x = as_bitstring(init)
    if x.n != cfg.n:
        raise LengthMismatch(f"initial string has length {x.n}, expected {cfg.n}")
    return x.to_array()


def run_ea(cfg: EaConfig, seed: int, init: Optional[BitString] = None) -> RunRecord:
    """One run from a uniformly random start (or ``init``) until the optimum
    is reached or ``cfg.max_generations`` selection steps have been made."""
    rng = make_rng(seed)
    mode, weights, table, optimum = kernel_fitness(cfg.f)
    bits = _initial_bits(cfg, rng, init)
    if cfg.record_trajectory:
        gens, hit, traj = _run_recorded(cfg, rng, bits, mode, weights, table, optimum)
    else:
        gens, hit = kernels.run_once(rng, bits, cfg.N, mode, weights, table, optimum,
                                     cfg.max_generations)
        traj = None
    return RunRecord(gens, gens * cfg.N, int(seed), hit, traj)


def _run_recorded(cfg, rng, bits, mode, weights, table, optimum):
    # one kernel generation per call keeps the draw order of the fast path
    pow2 = kernels._pow2(cfg.n, mode)

    def fitness():
        return kernels._fitness_of_numpy(bits, mode, weights, table, pow2)[0]

    traj = [BitString.from_array(bits)]
    gens = 0
    while fitness() < optimum and gens < cfg.max_generations:
        kernels.trajectory(rng, bits, cfg.N, mode, weights, table, optimum, 1)
        traj.append(BitString.from_array(bits))
        gens += 1
    return gens, fitness() >= optimum, traj


def batch_run(cfg: EaConfig, R: int, master_seed: int, workers: int = 1) -> BatchStats:
    """R independent runs; run i is seeded by ``derive_seed(master_seed, i)``."""
    if R < 1:
        raise ValueError("R must be >= 1")
    mode, weights, table, optimum = kernel_fitness(cfg.f)
    seeds = derive_seeds(master_seed, R)
    gens = np.empty(R, dtype=np.int64)
    hits = np.empty(R, dtype=bool)

    def one(i):
        bits = np.empty(cfg.n, dtype=np.uint8)
        gens[i], hits[i] = kernels.run_once(make_rng(seeds[i]), bits, cfg.N, mode, weights,
                                            table, optimum, cfg.max_generations,
                                            random_init=True)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(one, range(R)))
    else:
        for i in range(R):
            one(i)
    stats = summarize(gens, hits, cfg.N, master_seed)
    stats.seeds = seeds
    return stats


def summarize(gens: np.ndarray, hits: np.ndarray, N: int, master_seed: int = 0) -> BatchStats:
    done = gens[hits].astype(np.float64)
    m = len(done)
    mean = float(done.mean()) if m else float("nan")
    se = float(done.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return BatchStats(
        runs=len(gens),
        mean_generations=mean,
        mean_evaluations=mean * N,
        std_error=se,
        timeout_count=int((~hits).sum()),
        master_seed=int(master_seed),
        N=N,
        generations=gens,
        hits=hits,
    )
