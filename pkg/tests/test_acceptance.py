"""Acceptance criteria 1-10. Run with ``pytest tests/test_acceptance.py -s``
to see one PASS/FAIL line per criterion."""
import math
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from driftlab.core import BitString, SideClass, classify_side, enumerate_all
from driftlab.drift import (
    LEFT_DRIFT_CLAIM,
    NEGATIVE_RATIO_CLAIM,
    distance_from_hitting_times,
    linearlike_constant_check,
    make_distance,
    verify_lemma_inequalities,
    verify_lower_bound_theorem,
    verify_upper_bound_theorem,
)
from driftlab.engine import EaConfig, batch_run
from driftlab.experiments import ExperimentConfig, fit_against, invariant_distribution_check, scaling_rows
from driftlab.fitness import FitnessFunction, check_linear_like, random_sorted_linear
from driftlab.oracle import (
    StateDistribution,
    build_model,
    exact_hitting_time,
    non_optimal_mass_series,
    transition_row,
)

B = BitString.from_str


def report(k, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    assert ok, f"criterion {k}: {detail}"


def grid_functions(n):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([2024, n])))
    return [FitnessFunction.onemax(n), FitnessFunction.binval(n), random_sorted_linear(n, rng)]


def test_criterion_1_hand_checkable_oracle():
    ht = exact_hitting_time(build_model(FitnessFunction.onemax(2), 1))
    row = transition_row("00", FitnessFunction.onemax(2), 2)
    want = {B("11"): 7 / 16, B("01"): 1 / 4, B("10"): 1 / 4, B("00"): 1 / 16}
    row_err = max(abs(row.get(k, 0.0) - v) for k, v in want.items())
    ok = (abs(ht["00"] - 4) <= 1e-10 and abs(ht["01"] - 4) <= 1e-10 and abs(ht["10"] - 4) <= 1e-10
          and abs(ht.g_uniform - 3) <= 1e-10 and row_err <= 1e-12 and set(row) == set(want))
    report(1, ok, f"g(00)={ht['00']!r} g_uniform={ht.g_uniform!r} max row error={row_err:.1e}")


def test_criterion_2_oracle_simulator_agreement():
    cells = []
    ok = True
    for f in (FitnessFunction.onemax(8), FitnessFunction.linear([8, 4, 2, 1, 1, 1, 1, 1])):
        for N in (1, 4):
            g = exact_hitting_time(build_model(f, N)).g_uniform
            s = batch_run(EaConfig(f, N), 100_000, 8000 + N)
            z = (s.mean_generations - g) / s.std_error
            ok &= abs(z) <= 3 and s.timeout_count == 0
            cells.append(f"{f.label}/N={N}: exact {g:.4f} sim {s.mean_generations:.4f} z={z:+.2f}")
    report(2, ok, "; ".join(cells))


def test_criterion_3_hitting_time_identity():
    errs = []
    for N in (1, 2):
        model = build_model(FitnessFunction.onemax(4), N)
        series = non_optimal_mass_series(model, StateDistribution.uniform(4), tol=1e-18)
        errs.append(abs(series.sum() - exact_hitting_time(model).g_uniform))
    report(3, max(errs) <= 1e-9, f"|sum P(non) - g_uniform| = {', '.join(f'{e:.1e}' for e in errs)}")


def test_criterion_4_bound_theorems():
    worst = math.inf
    checked = vacuous = 0
    tight_err = 0.0
    for n in (4, 6, 8):
        for f in grid_functions(n):
            for N in (1, 2, 4):
                model = build_model(f, N)
                for kind in ("unit", "harmonic", "upper"):
                    d = make_distance(kind, n, N)
                    for verify in (verify_upper_bound_theorem, verify_lower_bound_theorem):
                        for variant in ("pointwise", "average"):
                            r = verify(model, d, variant=variant)
                            if r.applicable:
                                checked += 1
                                worst = min(worst, r.slack)
                            else:
                                vacuous += 1
                g = distance_from_hitting_times(model)
                for verify in (verify_upper_bound_theorem, verify_lower_bound_theorem):
                    for variant in ("pointwise", "average"):
                        tight_err = max(tight_err, abs(verify(model, g, variant=variant).slack))
    ok = worst >= -1e-9 and tight_err <= 1e-9
    report(4, ok, f"{checked} applicable reports, min slack {worst:.3g}, {vacuous} vacuous; "
                  f"d=g max |slack| {tight_err:.1e}")


def test_criterion_5_lemma_signs():
    ok = True
    min_all, min_left, max_ratio = math.inf, math.inf, -math.inf
    for n in (4, 6, 8):
        for f in grid_functions(n):
            for N in (1, 2, 4):
                r = verify_lemma_inequalities(f, N)
                ok &= r.holds and r.min_drift >= -1e-12 and r.min_drift_left > 0
                min_all = min(min_all, r.min_drift)
                min_left = min(min_left, r.min_drift_left)
                max_ratio = max(max_ratio, r.max_negative_ratio_left)
    report(5, ok, f"min drift {min_all:.3g}; min over left-heavy {min_left:.4f} "
                  f"(claimed {LEFT_DRIFT_CLAIM:.5f}); max -neg/pos over left-heavy "
                  f"{max_ratio:.4f} (claimed {NEGATIVE_RATIO_CLAIM})")


def test_criterion_6_explicit_constant():
    ok = True
    worst = math.inf
    count = 0
    for n in (4, 6, 8, 10):
        fs = grid_functions(n)
        nl = FitnessFunction.nonlinear_example(n)
        if check_linear_like(nl).holds:
            fs.append(nl)
        for f in fs:
            for N in (1, 2, 4, 8):
                r = linearlike_constant_check(build_model(f, N))
                ok &= r.slack >= -1e-9
                worst = min(worst, r.bound / r.exact_G)
                count += 1
    report(6, ok, f"{count} cases, smallest bound/exact ratio {worst:.2f}")


def test_criterion_7_left_heavy_invariant():
    side_fail = []
    marg_fail = []
    mirror_fail = []
    for n in (4, 6):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([77, n])))
        for f in (FitnessFunction.binval(n), random_sorted_linear(n, rng)):
            for N in (1, 2, 4):
                rep = invariant_distribution_check(f, N, horizon=100)
                if rep.side_flags:
                    t = rep.side_flags[0]
                    side_fail.append(f"{f.label} N={N} t={rep.side_flags} "
                                     f"(t={t}: {rep.left[t]:.4f} < {rep.right[t]:.4f})")
                if rep.marginal_flags:
                    marg_fail.append(f"{f.label} N={N} t={rep.marginal_flags}")
                if rep.mirror_flags:
                    mirror_fail.append(f"{f.label} N={N}")
    eq_err = 0.0
    for n in (4, 6):
        for N in (1, 2, 4):
            rep = invariant_distribution_check(FitnessFunction.onemax(n), N, horizon=100)
            eq_err = max(eq_err, float(np.abs(rep.left - rep.right).max()))
    ok = not side_fail and not marg_fail and eq_err <= 1e-12
    detail = (f"left-heavy >= complement violated in {len(side_fail)} cases "
              f"[{'; '.join(side_fail[:3])}]; marginal violations {len(marg_fail)}; "
              f"OneMax max |left - complement| {eq_err:.4f}; "
              f"left-heavy >= right-heavy violations {len(mirror_fail)}")
    report(7, ok, detail)


def test_criterion_8_linear_like_checker():
    rng = np.random.default_rng(8)
    bad = []
    for n in range(1, 9):
        for f in (FitnessFunction.onemax(n), FitnessFunction.binval(n)):
            if not check_linear_like(f).holds:
                bad.append(f.label)
    sorted_count = inverted_count = 0
    for _ in range(50):
        n = int(rng.integers(2, 9))
        w = rng.integers(1, 21, size=n)
        if rng.random() < 0.5:
            w = np.sort(w)[::-1]
        f = FitnessFunction.linear(w.tolist())
        rep = check_linear_like(f)
        inverted = any(w[i] < w[j] for i in range(n) for j in range(i + 1, n))
        if not inverted:
            sorted_count += 1
            if not rep.holds:
                bad.append(f"sorted {w.tolist()}")
            continue
        inverted_count += 1
        if rep.holds or rep.condition != 2:
            bad.append(f"inverted {w.tolist()} -> {rep.describe()}")
            continue
        x, y = (np.array(s.bits) for s in rep.witness)
        diff = np.flatnonzero(x != y)
        shape = len(diff) == 2 and x[diff[0]] == 0 and x[diff[1]] == 1 and y[diff[0]] == 1
        if not (shape and int(x @ w) > int(y @ w)):
            bad.append(f"witness for {w.tolist()} does not reproduce")
    report(8, not bad, f"{sorted_count} sorted and {inverted_count} inverted linear functions, "
                       f"OneMax/BinVal n<=8; problems: {bad or 'none'}")


def test_criterion_9_scaling():
    cfg = ExperimentConfig.from_dict({"fitness": "onemax", "n": [32, 64, 128, 256], "N": [1],
                                      "R": 2000, "seed": 9})
    rows = scaling_rows(cfg)
    x = [r.n * math.log(r.n) for r in rows]
    y = [r.mean_evals for r in rows]
    a, b, r2 = fit_against(x, y)
    report(9, r2 >= 0.98, f"mean evals = {a:.3f} * n ln n + {b:.1f}, R^2 = {r2:.5f}")


def test_criterion_10_cli_determinism(tmp_path):
    env = dict(os.environ)
    cmds = [
        ["run", "--fitness", "binval", "--n", "10", "--N", "1,4", "--R", "200"],
        ["scaling", "--fitness", "onemax", "--n", "16,32", "--N", "1,2", "--R", "200"],
    ]
    same = []
    for cmd in cmds:
        outs = []
        for i in range(2):
            path = tmp_path / f"{cmd[0]}{i}.csv"
            subprocess.run([sys.executable, "-m", "driftlab", *cmd, "--seed", "31337",
                            "--no-header-timestamp", "--out", str(path)],
                           check=True, env=env, capture_output=True)
            outs.append(path.read_bytes())
        same.append(outs[0] == outs[1] and len(outs[0]) > 0)
    report(10, all(same), f"byte-identical reruns: run={same[0]} scaling={same[1]}")
