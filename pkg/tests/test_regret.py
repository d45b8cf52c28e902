"""
Tests for core.regret (Monte Carlo regret estimates and bound tables).

How to run:
  python -m tests.test_regret
"""

from __future__ import annotations

import math

import numpy as np

from core.artifacts import SUMMARY_COLUMNS, summary_frame
from core.models import ModelParams
from core.regret import bound_frame, bound_table, epoch_experiment, estimate_regret, run_trials, select_bound


def _reference_params() -> ModelParams:
    return ModelParams(m=10, eta=(0.95,) + (0.05,) * 9, mu=0.0067, beta=0.55)


# ---------- Tests ----------

def test_00_equal_qualities_no_regret() -> None:
    p = ModelParams(m=3, eta=(0.5, 0.5, 0.5), mu=0.05, beta=0.6)
    s = estimate_regret("infinite", p, None, 20, 200, seed=1)
    assert abs(s.regret_mean) <= 4 * s.regret_se + 1e-9
    f = estimate_regret("finite", p, 500, 20, 100, seed=1)
    assert abs(f.regret_mean) <= 4 * f.regret_se + 1e-9
    print("[OK] All-equal qualities: regret 0 within 4 SE.")


def test_10_infinite_bound_and_share() -> None:
    """m=10, beta=0.55, T=58: regret under 3 delta, leader share above its bound."""
    p = _reference_params()
    s = estimate_regret("infinite", p, None, 58, 200, seed=7)
    assert s.bound_name == "infinite-3delta"
    assert abs(s.bound - 3 * p.delta) < 1e-12
    assert s.regret_mean + 3 * s.regret_se <= s.bound
    share_bound = 1 - 3 * p.delta / p.eta_gap
    assert s.leader_share_mean - 3 * s.leader_share_se >= share_bound
    assert s.floor_violations == 0.0
    print(f"[OK] Infinite regret {s.regret_mean:.4f} +/- {s.regret_se:.4f} <= {s.bound:.4f}.")


def test_20_intermediate_bound_short_horizon() -> None:
    p = _reference_params()
    bound, name = select_bound("infinite", p, 10)
    assert name == "intermediate"
    assert abs(bound - (math.log(10) / (p.delta * 10) + 2 * p.delta)) < 1e-12
    s = estimate_regret("infinite", p, None, 10, 200, seed=3)
    assert s.regret_mean + 3 * s.regret_se <= bound
    assert select_bound("finite", p, 10) == (6 * p.delta, "finite-6delta")
    assert select_bound("infinite", p.replace(beta=0.5), 10) == (None, "vacuous")
    print("[OK] Intermediate bound for short horizons.")


def test_30_finite_learns() -> None:
    p = ModelParams(m=3, eta=(0.9, 0.3, 0.3), mu=0.025, beta=0.6)
    s = estimate_regret("finite", p, 10_000, 30, 20, seed=4)
    assert s.bound_name == "finite-6delta"
    # the uniform-start baseline is eta_1 - mean(eta) = 0.4
    assert s.regret_mean + 4 * s.regret_se < 0.3, (s.regret_mean, s.regret_se)
    assert s.n == 10_000 and s.T == 30 and s.trials == 20
    print("[OK] Finite process learns the best option.")


def test_40_reproducible_and_worker_independent() -> None:
    p = ModelParams(m=2, eta=(0.8, 0.2), mu=0.05, beta=0.65)
    a = estimate_regret("finite", p, 2000, 15, 8, seed=5)
    b = estimate_regret("finite", p, 2000, 15, 8, seed=5)
    c = estimate_regret("finite", p, 2000, 15, 8, seed=5, workers=2)
    d = estimate_regret("finite", p, 2000, 15, 8, seed=6)
    assert a == b == c
    assert a.regret_mean != d.regret_mean
    print("[OK] Same seed gives identical summaries for any worker count.")


def test_50_epochs() -> None:
    """Epoch length 16 at m=2, mu=0.05, beta=0.65; epoch 1 equals a T=16 run."""
    p = ModelParams(m=2, eta=(0.9, 0.1), mu=0.05, beta=0.65)
    epochs = epoch_experiment(p, 2000, 3, seed=8, trials=20)
    assert [e.label for e in epochs] == ["epoch 1", "epoch 2", "epoch 3"]
    assert all(e.T == 16 for e in epochs)
    first = estimate_regret("finite", p, 2000, 16, 20, seed=8)
    assert abs(epochs[0].regret_mean - first.regret_mean) < 1e-12
    tolerance = 2 * math.hypot(epochs[0].regret_se, epochs[2].regret_se)
    assert epochs[2].regret_mean <= epochs[0].regret_mean + tolerance
    print("[OK] Epoch experiment.")


def test_60_bound_table() -> None:
    rows = {r.name: r for r in bound_table(_reference_params(), 100_000, 58)}
    assert rows["share_lower_bound"].status == "informative"
    assert abs(rows["intermediate"].value - 0.59918) < 1e-4
    assert rows["population_size"].status == "unmet"

    vac = {r.name: r for r in bound_table(_reference_params().replace(beta=0.5), 100_000, 58)}
    for name in ("intermediate", "infinite_3delta", "finite_6delta", "share_lower_bound", "epoch_len"):
        assert vac[name].status == "vacuous" and vac[name].value is None

    frame = bound_frame(list(rows.values()))
    assert list(frame.columns) == ["name", "value", "status", "detail"]
    print("[OK] Bound table, including the delta=0 case.")


def test_70_summary_columns() -> None:
    p = ModelParams(m=2, eta=(0.8, 0.2), mu=0.05, beta=0.65)
    frame = summary_frame([estimate_regret("infinite", p, None, 10, 5)])
    assert list(frame.columns) == SUMMARY_COLUMNS
    assert frame.loc[0, "process"] == "infinite"
    print("[OK] Summary frame column order.")


def test_80_popularity_floor_large_population() -> None:
    """N=1e5: Q_j >= zeta for all j in at least 99.9% of steps."""
    p = ModelParams(m=3, eta=(0.9, 0.3, 0.3), mu=0.025, beta=0.6)
    s = estimate_regret("finite", p, 100_000, 200, 5, seed=9)
    assert s.floor_violations <= 0.001, s.floor_violations
    print(f"[OK] Popularity floor violated in {s.floor_violations:.4%} of steps.")


def test_85_finite_approaches_infinite() -> None:
    """Mean |Regret_N - Regret_inf| over shared rewards shrinks as N grows."""
    p = ModelParams(m=2, eta=(0.7, 0.3), mu=0.1, beta=0.6)
    infinite = run_trials("infinite", p, None, 30, 20, seed=10)
    gaps = []
    for n in (100, 1000, 10_000, 100_000):
        finite = run_trials("finite", p, n, 30, 20, seed=10)
        diffs = [abs(f.regret(p.eta[0]) - i.regret(p.eta[0])) for f, i in zip(finite, infinite)]
        gaps.append(float(np.mean(diffs)))
    assert gaps[0] > gaps[1] > gaps[2] > gaps[3], gaps
    assert gaps[3] < 0.02
    print(f"[OK] Regret gap to the infinite process by N: {[round(g, 5) for g in gaps]}.")


def test_90_per_capita_in_summary() -> None:
    p = ModelParams(m=2, eta=(0.8, 0.2), mu=0.05, beta=0.65)
    finite = estimate_regret("finite", p, 1000, 20, 4, seed=11)
    assert finite.per_capita_mean is not None
    assert 0.0 <= finite.per_capita_mean <= 1.0
    assert estimate_regret("infinite", p, None, 20, 4, seed=11).per_capita_mean is None
    row = summary_frame([finite]).iloc[0]
    assert abs(row["per_capita_mean"] - finite.per_capita_mean) < 1e-12
    print("[OK] Per-capita reward reaches the summary row.")


# ---------- Runner ----------

def main() -> None:
    tests = [
        test_00_equal_qualities_no_regret,
        test_10_infinite_bound_and_share,
        test_20_intermediate_bound_short_horizon,
        test_30_finite_learns,
        test_40_reproducible_and_worker_independent,
        test_50_epochs,
        test_60_bound_table,
        test_70_summary_columns,
        test_80_popularity_floor_large_population,
        test_85_finite_approaches_infinite,
        test_90_per_capita_in_summary,
    ]
    for fn in tests:
        fn()
    print("\nAll regret harness tests passed.")


if __name__ == "__main__":
    main()
