"""
Tests for core.finite_dynamics (count mode and agent mode).

How to run:
  python -m tests.test_finite_dynamics
"""

from __future__ import annotations

from collections import Counter

import numpy as np
from scipy import stats

from core.bounds import derived_bounds
from core.exact_oracle import exact_distribution, simulated_distribution, total_variation
from core.finite_dynamics import (
    adopt_stage,
    initial_agents,
    initial_state,
    multinomial_counts,
    run_finite,
    sample_counts,
    sampling_probs,
    step_agents,
    step_finite,
)
from core.models import ModelParams
from core.rewards import RewardStream


# ---------- Helpers ----------

def _params(**overrides) -> ModelParams:
    values = dict(m=2, eta=(0.8, 0.2), mu=0.2, beta=0.75, alpha=0.25)
    values.update(overrides)
    return ModelParams(**values)


def _agent_distribution(params: ModelParams, n: int, samples: int, seed: int) -> dict[tuple[int, ...], float]:
    """Empirical law of d after one agent-mode step from the uniform start."""
    rng = np.random.default_rng(seed)
    stream = RewardStream(seed, samples)
    counts: Counter = Counter()
    for _ in range(samples):
        _, state = step_agents(initial_agents(n), initial_state(params, n), stream.next(params), params, rng)
        counts[tuple(int(x) for x in state.d)] += 1
    return {key: c / samples for key, c in counts.items()}


# ---------- Tests ----------

def test_00_conservation() -> None:
    """sum S = N and 0 <= D <= S at every step, both modes."""
    p = ModelParams(m=3, eta=(0.9, 0.3, 0.3), mu=0.05, beta=0.6)
    rng = np.random.default_rng(0)
    stream = RewardStream(0, 200)
    state = initial_state(p, 500)
    # nothing sampled before the first step
    assert state.s.sum() == 0 and state.d.sum() == 0
    agents = initial_agents(500)
    agent_state = initial_state(p, 500)
    for _ in range(100):
        r = stream.next(p)
        state = step_finite(state, r, p, rng)
        assert state.s.sum() == 500
        assert (state.d >= 0).all() and (state.d <= state.s).all()
        assert abs(state.q.sum() - 1.0) < 1e-12

        agents, agent_state = step_agents(agents, agent_state, r, p, rng)
        assert agent_state.s.sum() == 500
        assert (agent_state.d <= agent_state.s).all()
        assert agent_state.d.sum() == int(agents.z.sum())
    print("[OK] Conservation in count and agent modes.")


def test_10_absorbing_fixed_point() -> None:
    """mu=0, beta=1, alpha=0, eta=(1,0), Q^0=(1,0): Q stays (1,0)."""
    p = ModelParams(m=2, eta=(1.0, 0.0), mu=0.0, beta=1.0, alpha=0.0)
    rng = np.random.default_rng(1)
    record = run_finite(initial_state(p, 100, (1.0, 0.0)), RewardStream(1, 20), p, 20, rng, record_paths=True)
    assert np.allclose(record.q_path, [[1.0, 0.0]] * 21)
    assert record.degenerate_resets == 0
    assert np.allclose(record.group_rewards, 1.0)
    print("[OK] Absorbing fixed point.")


def test_20_no_good_signal_resets_every_step() -> None:
    """alpha=0, beta=1, all eta 0: every step ends with no adopters."""
    p = ModelParams(m=3, eta=(0.0, 0.0, 0.0), mu=0.3, beta=1.0, alpha=0.0)
    rng = np.random.default_rng(2)
    record = run_finite(initial_state(p, 50), RewardStream(2, 15), p, 15, rng)
    assert record.degenerate_resets == 15
    assert record.t_final == 15
    assert np.allclose(record.min_share, 1.0 / 3.0)
    print("[OK] Degenerate steps reset to uniform and are counted.")


def test_30_full_exploration_is_binomial() -> None:
    """mu=1: S_1 ~ Binomial(N, 1/m); chi-square on 20000 draws."""
    p = _params(mu=1.0)
    rng = np.random.default_rng(3)
    n = 20
    q = np.tile([0.9, 0.1], (20_000, 1))
    s = sample_counts(q, n, p, rng)
    assert (s.sum(axis=1) == n).all()
    observed = np.bincount(s[:, 0], minlength=n + 1)
    expected = stats.binom.pmf(np.arange(n + 1), n, 0.5) * len(s)
    # pool the sparse tails
    keep = expected >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    exp *= obs.sum() / exp.sum()
    _, pvalue = stats.chisquare(obs, exp)
    assert pvalue > 0.001, pvalue
    print(f"[OK] mu=1 stage-one counts are binomial (p={pvalue:.3f}).")


def test_40_multinomial_means() -> None:
    rng = np.random.default_rng(4)
    probs = np.tile([0.5, 0.3, 0.2], (10_000, 1))
    counts = multinomial_counts(rng, 100, probs)
    assert (counts.sum(axis=1) == 100).all()
    means = counts.mean(axis=0)
    assert np.allclose(means, [50, 30, 20], atol=0.25)
    print("[OK] Sequential conditional binomials reproduce multinomial means.")


def test_50_adoption_rates() -> None:
    p = _params()
    rng = np.random.default_rng(5)
    s = np.full((20_000, 2), 10)
    d = adopt_stage(s, np.array([1, 0]), p, rng)
    assert (d <= s).all()
    assert abs(d[:, 0].mean() - 7.5) < 0.05
    assert abs(d[:, 1].mean() - 2.5) < 0.05
    print("[OK] Adoption is Binomial(S_j, beta) or Binomial(S_j, alpha).")


def test_60_modes_agree_on_first_step() -> None:
    """Mean D_1 after one step from uniform: 50 * 0.5 * (0.8*0.75 + 0.2*0.25) = 16.25."""
    p = _params()
    trials = 2000
    rng = np.random.default_rng(6)
    count_d, agent_d = [], []
    for i in range(trials):
        r = RewardStream(6, 1, trial=i).next(p)
        count_d.append(step_finite(initial_state(p, 50), r, p, rng).d[0])
        _, st = step_agents(initial_agents(50), initial_state(p, 50), r, p, rng)
        agent_d.append(st.d[0])
    assert abs(np.mean(count_d) - 16.25) < 0.7
    assert abs(np.mean(agent_d) - 16.25) < 0.7
    print("[OK] Count and agent modes agree on E[D_1].")


def test_70_run_finite_record() -> None:
    p = ModelParams(m=3, eta=(0.9, 0.3, 0.3), mu=0.025, beta=0.6)
    rng = np.random.default_rng(7)
    record = run_finite(initial_state(p, 1000), RewardStream(7, 30), p, 30, rng, record_paths=True, thin=7)
    assert record.group_rewards.shape == (30,)
    assert record.leader_share.shape == (30,)
    assert record.min_share.shape == (31,)
    assert list(record.path_steps) == [0, 7, 14, 21, 28, 30]
    assert record.q_path.shape == (6, 3)
    assert abs(record.leader_share[0] - 1.0 / 3.0) < 1e-15
    assert ((record.per_capita >= 0) & (record.per_capita <= 1)).all()
    assert len(record.reward_digest) == 64
    print("[OK] run_finite record layout.")


def test_80_concentration_floor() -> None:
    """N=1e5, m=4, mu=0.05: min_j S_j >= mu N/(2m) = 625 at every step."""
    p = ModelParams(m=4, eta=(0.9, 0.5, 0.4, 0.1), mu=0.05, beta=0.6)
    rng = np.random.default_rng(8)
    stream = RewardStream(8, 300)
    state = initial_state(p, 100_000)
    for _ in range(300):
        state = step_finite(state, stream.next(p), p, rng)
        assert state.s.min() >= 625
    print("[OK] Stage-one counts stay above mu N/(2m).")


def test_85_agent_mode_distribution() -> None:
    """One step from uniform: agent mode matches the exact law at N=3 and count mode at N=10."""
    oracle = ModelParams(m=2, eta=(1.0, 0.0), mu=0.2, beta=0.75, alpha=0.25)
    exact = exact_distribution(oracle, 3, 1).probs
    agent = _agent_distribution(oracle, 3, 40_000, seed=12)
    tv = total_variation(exact, agent)
    assert tv < 0.02, tv

    p = _params()
    count = simulated_distribution(p, 10, 20_000, seed=13)
    agent = _agent_distribution(p, 10, 20_000, seed=14)
    tv_modes = total_variation(count, agent)
    assert tv_modes < 0.05, tv_modes
    print(f"[OK] Agent mode: TV {tv:.4f} to the exact law, {tv_modes:.4f} to count mode.")


def test_90_adopters_close_to_mean() -> None:
    """N=1e5: D_j within a factor 1+6 delta'' of its conditional mean in >= 99.9% of (t, j)."""
    p = ModelParams(m=4, eta=(0.9, 0.5, 0.4, 0.1), mu=0.05, beta=0.6)
    n = 100_000
    hi = 1 + 6 * derived_bounds(p, n).delta_pp
    rng = np.random.default_rng(15)
    stream = RewardStream(15, 300)
    state = initial_state(p, n)
    close = total = 0
    for _ in range(300):
        r = stream.next(p)
        mean = sampling_probs(state.q, p) * n * p.adoption_rates(r)
        state = step_finite(state, r, p, rng)
        ratio = state.d / mean
        close += int(((ratio >= 1 / hi) & (ratio <= hi)).sum())
        total += p.m
    assert close / total >= 0.999, close / total
    print(f"[OK] Adopter counts close to their mean in {close / total:.4%} of cases.")


# ---------- Runner ----------

def main() -> None:
    tests = [
        test_00_conservation,
        test_10_absorbing_fixed_point,
        test_20_no_good_signal_resets_every_step,
        test_30_full_exploration_is_binomial,
        test_40_multinomial_means,
        test_50_adoption_rates,
        test_60_modes_agree_on_first_step,
        test_70_run_finite_record,
        test_80_concentration_floor,
        test_85_agent_mode_distribution,
        test_90_adopters_close_to_mean,
    ]
    for fn in tests:
        fn()
    print("\nAll finite dynamics tests passed.")


if __name__ == "__main__":
    main()
