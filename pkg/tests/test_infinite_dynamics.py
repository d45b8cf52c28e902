"""
Tests for core.infinite_dynamics (normalized update and potential audit).

How to run:
  python -m tests.test_infinite_dynamics
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from core.infinite_dynamics import (
    audit_potential,
    floor_constant,
    initial_dist,
    run_infinite,
    step_infinite,
)
from core.models import ModelParams, WeightDist
from core.rewards import RewardStream
from core.trials import AuditTask, audit_trial


def _params(**overrides) -> ModelParams:
    values = dict(m=2, eta=(0.9, 0.1), mu=0.01, beta=0.6)
    values.update(overrides)
    return ModelParams(**values)


# ---------- Tests ----------

def test_00_hand_step() -> None:
    """m=2, mu=0, beta=0.6, R=(1,0) from uniform -> (0.6, 0.4); Phi^1 = 1."""
    p = _params(mu=0.0)
    out = step_infinite(initial_dist(p), np.array([1, 0]), p)
    assert np.allclose(out.p, [0.6, 0.4], atol=1e-15)
    assert abs(out.log_phi) < 1e-15
    assert out.cum_opt_reward == 1.0
    assert abs(out.cum_group_reward - 0.5) < 1e-15
    assert out.t == 1
    print("[OK] Hand-evaluated single step.")


def test_10_reward_factor_cancels() -> None:
    """beta=1/2, or all R equal: p' = (1-mu) p + mu/m."""
    for params, r in [
        (_params(beta=0.5, mu=0.1), np.array([1, 0])),
        (_params(mu=0.1), np.array([1, 1])),
        (_params(mu=0.1), np.array([0, 0])),
    ]:
        dist = WeightDist(p=np.array([0.7, 0.3]), log_phi=0.0)
        out = step_infinite(dist, r, params)
        assert np.allclose(out.p, 0.9 * np.array([0.7, 0.3]) + 0.05, atol=1e-15)
    print("[OK] Common reward factors cancel.")


def test_20_no_learning_closed_form() -> None:
    """delta=0: p^t = 1/m + (1-mu)^t (p^0 - 1/m) to 1e-10."""
    p = _params(beta=0.5, mu=0.05)
    record = run_infinite((0.7, 0.3), RewardStream(3, 50), p, 50, record_paths=True)
    t = np.arange(51)[:, None]
    expected = 0.5 + (0.95 ** t) * (np.array([0.7, 0.3]) - 0.5)
    assert np.abs(record.q_path - expected).max() < 1e-10
    print("[OK] delta=0 follows the uniform-drift closed form.")


def test_30_normalization_and_floor() -> None:
    """Sum to 1 and p_j >= mu alpha/(m beta) after every step."""
    p = ModelParams(m=4, eta=(0.9, 0.6, 0.2, 0.1), mu=0.02, beta=0.7)
    floor = floor_constant(p)
    assert abs(floor - 0.02 * 0.3 / (4 * 0.7)) < 1e-15
    stream = RewardStream(4, 5000)
    dist = initial_dist(p)
    for _ in range(5000):
        dist = step_infinite(dist, stream.next(p), p)
        assert abs(dist.p.sum() - 1.0) < 1e-12
        assert dist.p.min() >= floor * (1 - 1e-12)
    print("[OK] Normalization and per-step floor.")


def test_40_monotone_pull() -> None:
    """Exact E[p_1' - p_1] > 0 for m=2, eta=(0.9, 0.1), over a grid of p_1."""
    p = _params()
    eta = p.eta
    for p1 in np.linspace(0.05, 0.95, 19):
        dist = WeightDist(p=np.array([p1, 1 - p1]), log_phi=0.0)
        drift = 0.0
        for r in itertools.product((0, 1), repeat=2):
            prob = math.prod(e if x else 1 - e for x, e in zip(r, eta))
            drift += prob * (step_infinite(dist, np.array(r), p).p[0] - p1)
        assert drift > 0, (p1, drift)
    print("[OK] The better option is pulled up in expectation.")


def test_50_audit_hand_values() -> None:
    """T=1, m=2, mu=0.01, beta=0.6, R=(1,0): exact slacks."""
    p = _params(eta=(1.0, 0.0))
    record = run_infinite(None, RewardStream(0, 1), p, 1)
    audit = audit_potential(record, p)
    d = math.log(1.5)
    d_prime = 0.99 * 0.5 / (1 + 0.01 * d)
    lower = math.log(0.4) + math.log(0.99) + d
    upper = math.log(0.4) + math.log(1 + 0.01 * 0.5) + math.log(2) + d_prime * 0.5
    assert audit.applicable and audit.passed
    check = audit.checks[0]
    assert abs(record.log_phi[1]) < 1e-15
    assert abs(check.lower_slack - (0.0 - lower)) < 1e-10
    assert abs(check.upper_slack - upper) < 1e-10
    assert abs(check.lower_slack - 0.52088) < 1e-4
    assert abs(check.upper_slack - 0.028345) < 1e-5
    assert check.to_dict()["pass"] is True
    print("[OK] Audit slacks match the hand computation.")


def test_60_audit_random_trajectories() -> None:
    """Random parameters in the theorem regime: no violations."""
    rows = [audit_trial(AuditTask(None, 200, 123, i)) for i in range(100)]
    assert all(r["applicable"] for r in rows)
    bad = [r for r in rows if not r["passed"]]
    assert not bad, bad[:3]
    assert all(2 <= r["m"] <= 10 for r in rows)
    print("[OK] 100 random trajectories audit cleanly.")


def test_70_delta_zero_audit() -> None:
    """beta=1/2: upper slack stays near zero, lower slack at least ln m."""
    p = _params(beta=0.5, m=3, eta=(0.9, 0.5, 0.1))
    record = run_infinite(None, RewardStream(5, 100), p, 100)
    audit = audit_potential(record, p)
    assert audit.passed
    assert audit.min_lower_slack >= math.log(3) - 1e-9
    assert audit.min_upper_slack >= -1e-9
    print("[OK] delta=0 audit.")


def test_80_strict_start_and_degenerate() -> None:
    p = _params()
    raised = False
    try:
        run_infinite((0.99999, 0.00001), RewardStream(0, 5), p, 5, strict=True)
    except ValueError:
        raised = True
    assert raised
    run_infinite((0.99999, 0.00001), RewardStream(0, 5), p, 5)

    z = ModelParams(m=2, eta=(0.0, 0.0), mu=0.1, beta=0.6, alpha=0.0)
    dist = step_infinite(initial_dist(z), np.array([0, 0]), z)
    assert dist.log_phi == -math.inf
    assert abs(dist.p.sum() - 1.0) < 1e-12
    record = run_infinite(None, RewardStream(0, 3), z, 3)
    assert not audit_potential(record, z).applicable
    print("[OK] Strict starts and degenerate steps.")


# ---------- Runner ----------

def main() -> None:
    tests = [
        test_00_hand_step,
        test_10_reward_factor_cancels,
        test_20_no_learning_closed_form,
        test_30_normalization_and_floor,
        test_40_monotone_pull,
        test_50_audit_hand_values,
        test_60_audit_random_trajectories,
        test_70_delta_zero_audit,
        test_80_strict_start_and_degenerate,
    ]
    for fn in tests:
        fn()
    print("\nAll infinite dynamics tests passed.")


if __name__ == "__main__":
    main()
