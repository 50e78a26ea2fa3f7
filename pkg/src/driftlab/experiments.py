"""Experiment harness: scaling sweeps, cut-off estimation and the invariant
distribution check, with deterministic CSV and JSON output.

A grid cell (n, N) of a sweep with master seed s simulates with the seed
``SeedSequence([s, n, N]).generate_state(1, uint64)[0]``, so adding or
reordering cells never changes the numbers of the others.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .core import state_bits, state_right_heavy, state_sides
from .drift import BoundKind, bound_formula
from .engine import EaConfig, batch_run, derive_seeds, make_rng
from .errors import CapExceeded, ConfigError, NotLinearLike
from .fitness import (
    FitnessFunction,
    Kind,
    check_linear_like,
    kernel_fitness,
    random_sorted_linear,
)
from .oracle import (
    LUMPED_CAP,
    ORACLE_CAP,
    StateDistribution,
    build_lumped_onemax,
    build_model,
    exact_hitting_time,
    iter_distributions,
    lumped_uniform_hitting_time,
)

MODES = ("simulate", "oracle", "both")
CSV_COLUMNS = [
    "fitness", "n", "N", "mode", "replicates", "mean_gens", "stderr_gens",
    "mean_evals", "stderr_evals", "exact_g", "bound_lower", "bound_upper", "seed",
]
SIDE_TOL = 1e-10
MC_REPLICATES = 100_000
MC_SIGMAS = 3.0


# ---------------------------------------------------------------------------
# configuration


def _as_grid(v, name) -> List[int]:
    if isinstance(v, (int, np.integer)):
        v = [v]
    try:
        grid = [int(x) for x in v]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be an integer or a list of integers") from exc
    if not grid:
        raise ConfigError(f"{name} grid is empty")
    if min(grid) < 1:
        raise ConfigError(f"{name} values must be >= 1")
    return grid


@dataclass
class ExperimentConfig:
    """Sweep description; ``fitness`` is a JSON fitness object whose ``n`` may
    be omitted, in which case it is taken from the n grid.

    Besides the fitness kinds, ``{"kind": "random_linear", "max_weight": 20}``
    draws sorted integer weights per n from the master seed.
    """
    fitness: Mapping
    n_grid: List[int]
    N_grid: List[int] = field(default_factory=lambda: [1])
    replicates: int = 1000
    seed: int = 0
    mode: str = "simulate"
    out: Optional[str] = None
    C: float = 2.0
    horizon: int = 100
    max_generations: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.fitness, Mapping) or "kind" not in self.fitness:
            raise ConfigError("fitness must be an object with a 'kind'")
        self.n_grid = _as_grid(self.n_grid, "n")
        self.N_grid = _as_grid(self.N_grid, "N")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.replicates) < 1:
            raise ConfigError("replicates must be >= 1")
        self.replicates = int(self.replicates)
        self.seed = int(self.seed)
        if self.seed < 0 or self.seed >= 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.mode != "simulate":
            for n in self.n_grid:
                _check_oracle_size(self.fitness_for(n), n)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        if not isinstance(d, Mapping):
            raise ConfigError("config must be a JSON object")
        d = dict(d)
        aliases = {"n": "n_grid", "N": "N_grid", "R": "replicates"}
        for short, long in aliases.items():
            if short in d:
                d[long] = d.pop(short)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "fitness" not in d or "n_grid" not in d:
            raise ConfigError("config needs 'fitness' and 'n'")
        if isinstance(d["fitness"], str):
            d["fitness"] = {"kind": d["fitness"]}
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

    def fitness_for(self, n: int) -> FitnessFunction:
        return resolve_fitness(self.fitness, n, self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


def resolve_fitness(spec: Mapping, n: int, seed: int = 0) -> FitnessFunction:
    kind = str(spec.get("kind", "")).lower()
    if kind == "random_linear":
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, n])))
        return random_sorted_linear(n, rng, int(spec.get("max_weight", 20)))
    spec = dict(spec)
    spec.setdefault("n", n)
    try:
        f = FitnessFunction.from_dict(spec)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if f.n != n:
        raise ConfigError(f"fitness has n={f.n} but the grid asks for n={n}")
    return f


def _check_oracle_size(f: FitnessFunction, n: int):
    if n <= ORACLE_CAP:
        return
    if f.kind == Kind.ONEMAX and n <= LUMPED_CAP:
        return
    raise ConfigError(f"n={n} is above the oracle cap for {f.label}")


def cell_seed(master: int, n: int, N: int) -> int:
    return int(np.random.SeedSequence([int(master), int(n), int(N)]).generate_state(1, np.uint64)[0])


def exact_uniform_hitting_time(f: FitnessFunction, N: int) -> float:
    """Exact mean generations from uniform start, using the level chain for
    OneMax beyond the full-space cap."""
    if f.n <= ORACLE_CAP:
        return exact_hitting_time(build_model(f, N)).g_uniform
    if f.kind == Kind.ONEMAX:
        return lumped_uniform_hitting_time(build_lumped_onemax(f.n, N))
    raise CapExceeded(f"n={f.n} is above the oracle cap for {f.label}")


# ---------------------------------------------------------------------------
# scaling sweeps


def _bounds(f: FitnessFunction, n: int, N: int):
    if n < 2:
        return None, None
    if f.kind == Kind.ONEMAX:
        return bound_formula(BoundKind.ONEMAX_LOWER, n, N), bound_formula(BoundKind.ONEMAX_UPPER, n, N)
    lower = bound_formula(BoundKind.MONOTONIC_LOWER, n, N)
    if _known_linear_like(f):
        return lower, bound_formula(BoundKind.LINEARLIKE_UPPER, n, N)
    return lower, None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


@dataclass
class ScalingRow:
    fitness: str
    n: int
    N: int
    mode: str
    replicates: int
    mean_gens: Optional[float]
    stderr_gens: Optional[float]
    mean_evals: Optional[float]
    stderr_evals: Optional[float]
    exact_g: Optional[float]
    bound_lower: Optional[float]
    bound_upper: Optional[float]
    seed: int

    def cells(self) -> List[str]:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


def scaling_rows(cfg: ExperimentConfig) -> List[ScalingRow]:
    rows = []
    for n in cfg.n_grid:
        f = cfg.fitness_for(n)
        for N in cfg.N_grid:
            mean = se = None
            exact = None
            if cfg.mode in ("simulate", "both"):
                ea = EaConfig(f, N, cfg.max_generations)
                stats = batch_run(ea, cfg.replicates, cell_seed(cfg.seed, n, N))
                mean, se = stats.mean_generations, stats.std_error
            if cfg.mode in ("oracle", "both"):
                exact = exact_uniform_hitting_time(f, N)
            lo, hi = _bounds(f, n, N)
            rows.append(ScalingRow(
                f.label, n, N, cfg.mode, cfg.replicates if mean is not None else 0,
                mean, se,
                None if mean is None else mean * N,
                None if se is None else se * N,
                exact, lo, hi, cfg.seed,
            ))
    return rows


def rows_to_csv(rows: Sequence[ScalingRow], timestamp: bool = False) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def scaling_experiment(cfg: ExperimentConfig, timestamp: bool = False) -> str:
    """CSV table with one row per (n, N) cell; also written to ``cfg.out``."""
    text = rows_to_csv(scaling_rows(cfg), timestamp)
    if cfg.out:
        Path(cfg.out).write_text(text)
    return text


def fit_against(x: Sequence[float], y: Sequence[float]):
    """Least-squares y ~ a * x + b; returns (a, b, coefficient of determination)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


# ---------------------------------------------------------------------------
# cut-off estimation


@dataclass
class CutoffPoint:
    N: int
    mean_evals: float
    stderr_evals: float
    ci_low: float
    ci_high: float


@dataclass
class CutoffEstimate:
    n: int
    C: float
    runtime_1: float
    N_star: Optional[int]
    curve: List[CutoffPoint]
    reference: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def cutoff_estimate(f: FitnessFunction, n: Optional[int] = None, N_grid: Sequence[int] = (1,),
                    C: float = 2.0, R: int = 1000, seed: int = 0,
                    mode: str = "simulate") -> CutoffEstimate:
    """Largest N in the grid whose mean evaluations stay within C times the
    N = 1 baseline. N = 1 is the baseline itself and always qualifies.

    ``mode="oracle"`` uses exact hitting times instead of simulation.
    """
    n = f.n if n is None else n
    if n != f.n:
        raise ConfigError(f"n={n} does not match f.n={f.n}")
    grid = sorted(set(int(N) for N in N_grid))
    if 1 not in grid:
        raise ConfigError("the N grid must contain 1")
    curve = []
    for N in grid:
        if mode == "oracle":
            m = exact_uniform_hitting_time(f, N) * N
            se = 0.0
        else:
            s = batch_run(EaConfig(f, N), R, cell_seed(seed, n, N))
            m, se = s.mean_evaluations, s.std_error_evaluations
        curve.append(CutoffPoint(N, m, se, m - 1.96 * se, m + 1.96 * se))
    base = curve[0].mean_evals
    qualifying = [p.N for p in curve if p.N == 1 or p.mean_evals <= C * base]
    ref = None
    if f.kind == Kind.ONEMAX and n > math.exp(math.e):
        ref = bound_formula(BoundKind.ONEMAX_CUTOFF, n)
    elif f.kind == Kind.BINVAL and n >= 2:
        ref = bound_formula(BoundKind.BINVAL_CUTOFF, n)
    return CutoffEstimate(n, C, base, max(qualifying) if qualifying else None, curve, ref)


# ---------------------------------------------------------------------------
# invariant distribution check


@dataclass
class InvariantReport:
    """Per-generation side masses and per-bit marginals.

    ``right`` is the mass of every non-optimal string that is not left-heavy;
    ``mirror`` is the mass of strictly right-heavy strings.
    """
    fitness: str
    n: int
    N: int
    mode: str
    left: np.ndarray
    right: np.ndarray
    mirror: np.ndarray
    marginals: np.ndarray
    side_flags: List[int]
    mirror_flags: List[int]
    marginal_flags: List[int]
    tolerance: float

    @property
    def horizon(self) -> int:
        return len(self.left) - 1

    @property
    def holds(self) -> bool:
        return not self.side_flags and not self.marginal_flags

    @property
    def holds_mirror(self) -> bool:
        return not self.mirror_flags and not self.marginal_flags

    def to_dict(self) -> dict:
        return {
            "fitness": self.fitness, "n": self.n, "N": self.N, "mode": self.mode,
            "horizon": self.horizon, "tolerance": self.tolerance,
            "holds": self.holds, "holds_mirror": self.holds_mirror,
            "side_flags": self.side_flags, "mirror_flags": self.mirror_flags,
            "marginal_flags": self.marginal_flags,
            "left": self.left.tolist(), "right": self.right.tolist(),
            "mirror": self.mirror.tolist(), "marginals": self.marginals.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _known_linear_like(f: FitnessFunction) -> bool:
    if f.kind in (Kind.ONEMAX, Kind.BINVAL):
        return True
    if f.kind == Kind.LINEAR:
        w = f.weights
        return all(a >= b for a, b in zip(w, w[1:])) and w[-1] > 0
    return False


def _require_linear_like(f: FitnessFunction):
    if _known_linear_like(f):
        return
    rep = check_linear_like(f)
    if not rep.holds:
        raise NotLinearLike(rep.describe())


def invariant_distribution_check(f: FitnessFunction, N: int, n: Optional[int] = None,
                                 horizon: int = 100, mode: str = "auto",
                                 R: int = MC_REPLICATES, seed: int = 0,
                                 tol: float = SIDE_TOL) -> InvariantReport:
    """Side masses and bit marginals of the parent for t = 0..horizon from
    uniform start. Exact for n within the oracle cap, Monte Carlo otherwise;
    Monte Carlo flags only differences beyond three standard errors."""
    n = f.n if n is None else n
    if n != f.n:
        raise ConfigError(f"n={n} does not match f.n={f.n}")
    _require_linear_like(f)
    if mode == "auto":
        mode = "exact" if n <= ORACLE_CAP else "mc"
    if mode == "exact":
        return _invariants_exact(f, N, horizon, tol)
    if mode == "mc":
        if R < MC_REPLICATES:
            raise ConfigError(f"Monte Carlo mode needs R >= {MC_REPLICATES}")
        return _invariants_mc(f, N, horizon, R, seed)
    raise ConfigError(f"unknown mode {mode!r}")


def _side_masks(n):
    sides = state_sides(n)
    return sides == 1, sides == 0, state_right_heavy(n)


def _invariants_exact(f, N, horizon, tol):
    n = f.n
    model = build_model(f, N)
    left_m, right_m, mirror_m = _side_masks(n)
    bits = state_bits(n).astype(np.float64)
    L, Rr, M, marg = [], [], [], []
    for dist in iter_distributions(model, StateDistribution.uniform(n), horizon):
        p = dist.probs
        L.append(p[left_m].sum())
        Rr.append(p[right_m].sum())
        M.append(p[mirror_m].sum())
        marg.append(p @ bits)
    L, Rr, M, marg = map(np.array, (L, Rr, M, marg))
    side = np.flatnonzero(L < Rr - tol).tolist()
    mirror = np.flatnonzero(L < M - tol).tolist()
    mflags = np.flatnonzero((np.diff(marg, axis=1) > tol).any(axis=1)).tolist()
    return InvariantReport(f.label, n, N, "exact", L, Rr, M, marg, side, mirror, mflags, tol)


def _invariants_mc(f, N, horizon, R, seed):
    n = f.n
    h = n // 2
    mode, weights, table, optimum = kernel_fitness(f)
    seeds = derive_seeds(seed, R)
    T = horizon + 1
    sum_l = np.zeros(T)
    sum_r = np.zeros(T)
    sum_m = np.zeros(T)
    # accumulate first and second moments of the paired differences
    d_side = np.zeros((2, T))
    d_mirror = np.zeros((2, T))
    ones = np.zeros((T, n))
    d_marg = np.zeros((2, T, max(n - 1, 0)))
    for i in range(R):
        rng = make_rng(seeds[i])
        bits = kernels.init_bits(rng, n).astype(np.uint8)
        traj = kernels.trajectory(rng, bits, N, mode, weights, table, optimum, horizon)
        lo = traj[:, :h].sum(axis=1)
        ro = traj[:, h:].sum(axis=1)
        opt = traj.all(axis=1)
        is_l = (lo > ro) & ~opt
        is_r = ~is_l & ~opt
        is_m = (ro > lo) & ~opt
        sum_l += is_l
        sum_r += is_r
        sum_m += is_m
        ds = is_l.astype(np.float64) - is_r
        dm = is_l.astype(np.float64) - is_m
        d_side[0] += ds
        d_side[1] += ds * ds
        d_mirror[0] += dm
        d_mirror[1] += dm * dm
        ones += traj
        db = traj[:, :-1].astype(np.float64) - traj[:, 1:]
        d_marg[0] += db
        d_marg[1] += db * db

    def flags(acc):
        mean = acc[0] / R
        var = np.maximum(acc[1] / R - mean ** 2, 0.0) * R / max(R - 1, 1)
        se = np.sqrt(var / R)
        return mean < -MC_SIGMAS * se

    side = np.flatnonzero(flags(d_side)).tolist()
    mirror = np.flatnonzero(flags(d_mirror)).tolist()
    mflags = np.flatnonzero(flags(d_marg).any(axis=1)).tolist() if n > 1 else []
    return InvariantReport(f.label, n, N, "mc", sum_l / R, sum_r / R, sum_m / R, ones / R,
                           side, mirror, mflags, MC_SIGMAS)
