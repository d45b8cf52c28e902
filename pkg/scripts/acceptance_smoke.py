"""
Acceptance smoke run: the full-scale checks (10^6 oracle samples, 1000
audited trajectories, N up to 1e5) that are too slow for the unit tests.
Run:
  python scripts/acceptance_smoke.py [--workers 4]
Exit status 0 when every check passes, 3 otherwise.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np
from scipy import stats

# Ensure project root on sys.path (when running from scripts/)
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from core.bounds import derived_bounds, intermediate_bound
from core.coupling import run_coupled, scaling_fit
from core.exact_oracle import exact_distribution, exact_regret, simulated_distribution, simulated_regret, total_variation
from core.finite_dynamics import initial_state, sample_counts, step_finite
from core.infinite_dynamics import run_infinite
from core.log import setup_logging
from core.models import ModelParams
from core.regret import estimate_regret
from core.rewards import RewardStream
from core.trials import AuditTask, audit_trial, map_trials

# Frozen once against the infinite process at the same parameters.
FINITE_T100_THRESHOLD = 0.35

REFERENCE = ModelParams(m=10, eta=(0.95,) + (0.05,) * 9, mu=0.0067, beta=0.55)
FINITE = ModelParams(m=3, eta=(0.9, 0.3, 0.3), mu=0.025, beta=0.6)
ORACLE = ModelParams(m=2, eta=(1.0, 0.0), mu=0.2, beta=0.75, alpha=0.25)


def check_infinite_regret(workers: int) -> bool:
    s = estimate_regret("infinite", REFERENCE, None, 58, 2000, seed=1, workers=workers)
    bound = 3 * REFERENCE.delta
    share = 1 - 3 * REFERENCE.delta / REFERENCE.eta_gap
    print(f"      regret {s.regret_mean:.4f} +/- {s.regret_se:.4f} (bound {bound:.4f}); "
          f"leader share {s.leader_share_mean:.4f} (bound {share:.4f})")
    return s.regret_mean + 3 * s.regret_se <= bound and s.leader_share_mean - 3 * s.leader_share_se >= share


def check_intermediate(workers: int) -> bool:
    ok = True
    for t in (10, 30, 58, 200):
        s = estimate_regret("infinite", REFERENCE, None, t, 2000, seed=2, workers=workers)
        bound = intermediate_bound(REFERENCE, t)
        print(f"      T={t:<4} regret {s.regret_mean:.4f} +/- {s.regret_se:.4f} <= {bound:.4f}")
        ok &= s.regret_mean + 3 * s.regret_se <= bound
    return ok


def check_finite_regret(workers: int) -> bool:
    short = estimate_regret("finite", FINITE, 100_000, 7, 500, seed=3, workers=workers)
    long = estimate_regret("finite", FINITE, 100_000, 100, 500, seed=3, workers=workers)
    print(f"      T=7 {short.regret_mean:.4f} +/- {short.regret_se:.4f}; "
          f"T=100 {long.regret_mean:.4f} +/- {long.regret_se:.4f} (6 delta = {6 * FINITE.delta:.4f})")
    return (
        long.regret_mean + 3 * long.regret_se <= 6 * FINITE.delta
        and long.regret_mean <= short.regret_mean + 2 * short.regret_se
        and long.regret_mean <= FINITE_T100_THRESHOLD
    )


def check_coupling(workers: int) -> bool:
    params = ModelParams(m=2, eta=(0.7, 0.3), mu=0.1, beta=0.6)
    report = run_coupled(params, [1_000, 10_000, 100_000], 3, 200, seed=4, workers=workers)
    fit = scaling_fit(report)
    print(f"      slope {fit.slope:.3f} +/- {fit.stderr:.3f}")
    return -0.65 <= fit.slope <= -0.35


def check_oracle() -> bool:
    exact = exact_distribution(ORACLE, 3, 1)
    tv = total_variation(exact.probs, simulated_distribution(ORACLE, 3, 1_000_000, seed=5))
    r_exact = exact_regret(ORACLE, 3, 2)
    mean, se = simulated_regret(ORACLE, 3, 2, 1_000_000, seed=6)
    print(f"      TV {tv:.5f}; regret exact {r_exact:.6f} vs simulated {mean:.6f} +/- {se:.6f}")
    return tv < 0.005 and abs(mean - r_exact) <= 3 * se


def check_audit(workers: int) -> bool:
    rows = map_trials(audit_trial, [AuditTask(None, 200, 7, i) for i in range(1000)], workers)
    bad = [r["trial"] for r in rows if not r["passed"]]
    print(f"      {len(rows)} trajectories, {len(bad)} with violations")
    return not bad


def check_concentration() -> bool:
    params = ModelParams(m=4, eta=(0.9, 0.5, 0.4, 0.1), mu=0.05, beta=0.6)
    n = 100_000
    rng = np.random.default_rng(8)
    stream = RewardStream(8, 10_000)
    state = initial_state(params, n)
    b = derived_bounds(params, n)
    hi = 1 + 6 * b.delta_pp
    floor_ok, close, total = True, 0, 0
    for _ in range(10_000):
        r = stream.next(params)
        mean = ((1 - params.mu) * state.q + params.mu / params.m) * n * params.adoption_rates(r)
        state = step_finite(state, r, params, rng)
        floor_ok &= bool(state.s.min() >= params.mu * n / (2 * params.m))
        ratio = state.d / mean
        close += int(((ratio >= 1 / hi) & (ratio <= hi)).sum())
        total += params.m
    print(f"      S floor held: {floor_ok}; closeness {close / total:.5f}")
    return floor_ok and close / total >= 0.999


def check_trivial() -> bool:
    flat = ModelParams(m=3, eta=(0.5, 0.5, 0.5), mu=0.05, beta=0.6)
    s = estimate_regret("infinite", flat, None, 50, 500, seed=9)
    ok_flat = abs(s.regret_mean) <= 3 * s.regret_se + 1e-12

    drift = ModelParams(m=2, eta=(0.9, 0.1), mu=0.05, beta=0.5)
    record = run_infinite((0.7, 0.3), RewardStream(9, 100), drift, 100, record_paths=True)
    t = np.arange(101)[:, None]
    expected = 0.5 + 0.95 ** t * (np.array([0.7, 0.3]) - 0.5)
    ok_drift = np.abs(record.q_path - expected).max() < 1e-10

    explore = ModelParams(m=2, eta=(0.9, 0.1), mu=1.0, beta=0.6)
    counts = sample_counts(np.tile([0.8, 0.2], (100_000, 1)), 30, explore, np.random.default_rng(9))[:, 0]
    observed = np.bincount(counts, minlength=31)
    expected_counts = stats.binom.pmf(np.arange(31), 30, 0.5) * len(counts)
    keep = expected_counts >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected_counts[keep], expected_counts[~keep].sum())
    exp *= obs.sum() / exp.sum()
    pvalue = stats.chisquare(obs, exp).pvalue
    print(f"      equal eta regret {s.regret_mean:.5f}; drift closed form {ok_drift}; mu=1 chi-square p={pvalue:.3f}")
    return ok_flat and ok_drift and pvalue > 0.001


def check_reproducible(workers: int) -> bool:
    a = estimate_regret("finite", FINITE, 10_000, 20, 64, seed=10, workers=1)
    b = estimate_regret("finite", FINITE, 10_000, 20, 64, seed=10, workers=max(workers, 8))
    c = estimate_regret("finite", FINITE, 10_000, 20, 64, seed=10, workers=1)
    print(f"      workers 1 vs {max(workers, 8)}: identical={a == b}; rerun identical={a == c}")
    return a == b == c


def main() -> int:
    parser = argparse.ArgumentParser(description="Full-scale acceptance checks.")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()
    setup_logging()

    checks = [
        ("infinite regret and leader share", lambda: check_infinite_regret(args.workers)),
        ("intermediate bound for all T", lambda: check_intermediate(args.workers)),
        ("finite-population regret", lambda: check_finite_regret(args.workers)),
        ("coupling scaling in N", lambda: check_coupling(args.workers)),
        ("oracle equivalence", check_oracle),
        ("potential audit", lambda: check_audit(args.workers)),
        ("concentration", check_concentration),
        ("degenerate and trivial cases", check_trivial),
        ("reproducibility", lambda: check_reproducible(args.workers)),
    ]
    failed = []
    for i, (name, fn) in enumerate(checks, start=1):
        print(f"[{i}/{len(checks)}] {name} ...")
        t0 = time.perf_counter()
        ok = fn()
        print(f"      -> {'OK' if ok else 'FAILED'} ({time.perf_counter() - t0:.1f} s)")
        if not ok:
            failed.append(name)

    if failed:
        print(f"\nAcceptance smoke run FAILED: {', '.join(failed)}")
        return 3
    print("\nAcceptance smoke run completed successfully.")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
