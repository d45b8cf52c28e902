"""
core.regret
Regret estimation for both processes and the theoretical bounds next to it.

Regret is eta_1 - (1/T) sum_t sum_j E[popularity_j^(t-1) R_j^t], with the
expectation over all randomness; the estimator averages the realized
per-trial value over independent trials and reports a normal-approximation
standard error.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .bounds import (
    DEFAULT_DELTA_PP_CONSTANT,
    derived_bounds,
    epoch_length,
    horizon_min,
    intermediate_bound,
    popularity_floor,
    population_conditions,
)
from .models import ModelParams, RegretSummary, TrialRecord
from .trials import TrialSpec, map_trials, simulate_trial

logger = logging.getLogger(__name__)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if len(values) < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(len(values)))


def select_bound(
    process: str,
    params: ModelParams,
    t_max: int,
    p0: Optional[Sequence[float]] = None,
) -> tuple[Optional[float], str]:
    """The theorem bound a summary is compared with, and its name."""
    delta = params.delta
    if not delta > 0:
        return None, "vacuous"
    if process == "finite":
        return 6.0 * delta, "finite-6delta"
    if p0 is not None:
        zeta = popularity_floor(params)
        if zeta > 0 and min(p0) >= zeta and t_max >= math.log(1.0 / zeta) / delta ** 2:
            return 3.0 * delta, "nonuniform-start-3delta"
        return intermediate_bound(params, t_max), "intermediate"
    hmin = horizon_min(params)
    if hmin is not None and t_max >= hmin:
        return 3.0 * delta, "infinite-3delta"
    return intermediate_bound(params, t_max), "intermediate"


def summarize(
    records: Sequence[TrialRecord],
    process: str,
    params: ModelParams,
    n: Optional[int],
    t_max: int,
    seed: int,
    *,
    p0: Optional[Sequence[float]] = None,
    window: Optional[slice] = None,
    label: str = "",
) -> RegretSummary:
    """Fold trial records into a RegretSummary (pure)."""
    window = window or slice(0, t_max)
    eta1 = params.eta[0]
    regrets = np.array([eta1 - float(np.mean(r.group_rewards[window])) for r in records])
    shares = np.array([float(np.mean(r.leader_share[window])) for r in records])
    zeta = popularity_floor(params)
    below = sum(int(np.count_nonzero(r.min_share[1:] < zeta)) for r in records)
    steps = sum(len(r.min_share) - 1 for r in records)
    per_capita = [float(np.mean(r.per_capita[window])) for r in records if r.per_capita is not None]

    regret_mean, regret_se = _mean_se(regrets)
    share_mean, share_se = _mean_se(shares)
    bound, bound_name = select_bound(process, params, t_max, p0)
    return RegretSummary(
        process=process,
        m=params.m,
        n=n if process == "finite" else None,
        mu=params.mu,
        beta=params.beta,
        T=window.stop - window.start,
        trials=len(records),
        regret_mean=regret_mean,
        regret_se=regret_se,
        bound=bound,
        bound_name=bound_name,
        leader_share_mean=share_mean,
        leader_share_se=share_se,
        floor_violations=below / steps if steps else 0.0,
        seed=seed,
        per_capita_mean=float(np.mean(per_capita)) if per_capita else None,
        label=label,
    )


def run_trials(
    process: str,
    params: ModelParams,
    n: Optional[int],
    t_max: int,
    trials: int,
    seed: int = 0,
    *,
    workers: int = 1,
    p0: Optional[Sequence[float]] = None,
    sampling: str = "count",
    reward_mode: str = "independent",
    strict: bool = False,
    reward_trace: Optional[str] = None,
) -> list[TrialRecord]:
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1. Got {t_max}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1. Got {trials}")
    p0_t = tuple(float(x) for x in p0) if p0 is not None else None
    specs = [
        TrialSpec(process, params, n, t_max, seed, i, p0_t, sampling, reward_mode, strict,
                  reward_trace=reward_trace)
        for i in range(trials)
    ]
    return map_trials(simulate_trial, specs, workers)


def estimate_regret(
    process: str,
    params: ModelParams,
    n: Optional[int],
    t_max: int,
    trials: int,
    seed: int = 0,
    *,
    workers: int = 1,
    p0: Optional[Sequence[float]] = None,
    sampling: str = "count",
    reward_mode: str = "independent",
    strict: bool = False,
    reward_trace: Optional[str] = None,
) -> RegretSummary:
    """
    Monte Carlo estimate of Regret_N(T) (finite) or Regret_inf(T) (infinite)
    with standard error sample-stddev/sqrt(trials), plus the time-averaged
    leader share.
    """
    t0 = time.perf_counter()
    logger.info("Estimating %s regret: m=%d n=%s T=%d trials=%d seed=%d.",
                process, params.m, n, t_max, trials, seed)
    records = run_trials(
        process, params, n, t_max, trials, seed,
        workers=workers, p0=p0, sampling=sampling, reward_mode=reward_mode, strict=strict,
        reward_trace=reward_trace,
    )
    summary = summarize(records, process, params, n, t_max, seed, p0=p0)
    logger.info("Regret estimate %.6f +/- %.6f (bound %s=%s) in %.3f seconds.",
                summary.regret_mean, summary.regret_se, summary.bound_name, summary.bound,
                time.perf_counter() - t0)
    return summary


def epoch_experiment(
    params: ModelParams,
    n: int,
    epochs: int,
    seed: int = 0,
    *,
    trials: int = 1,
    workers: int = 1,
    sampling: str = "count",
    reward_mode: str = "independent",
) -> list[RegretSummary]:
    """
    Run the finite process for epochs x epoch_len steps and summarize each
    epoch separately. floor_violations of an epoch is the fraction of trials
    whose minimum popularity at the epoch's start lies below zeta.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1. Got {epochs}")
    length = epoch_length(params)
    if length is None:
        raise ValueError("epoch length is undefined at delta=0 (or zeta=0).")
    t_max = epochs * length
    t0 = time.perf_counter()
    logger.info("Epoch experiment: %d epochs of %d steps, n=%d, trials=%d.", epochs, length, n, trials)
    records = run_trials(
        "finite", params, n, t_max, trials, seed,
        workers=workers, sampling=sampling, reward_mode=reward_mode,
    )
    zeta = popularity_floor(params)
    out = []
    for e in range(epochs):
        window = slice(e * length, (e + 1) * length)
        summary = summarize(records, "finite", params, n, length, seed, window=window, label=f"epoch {e + 1}")
        summary.floor_violations = float(np.mean([r.min_share[e * length] < zeta for r in records]))
        out.append(summary)
    logger.info("Epoch experiment finished in %.3f seconds.", time.perf_counter() - t0)
    return out


# -----------------------------------------------------------------------------
# Theoretical values
# -----------------------------------------------------------------------------
@dataclass(frozen=True, slots=True)
class BoundRow:
    name: str
    value: Optional[float]
    status: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "status": self.status, "detail": self.detail}


def bound_table(
    params: ModelParams,
    n: int,
    t_max: int,
    delta_pp_constant: float = DEFAULT_DELTA_PP_CONSTANT,
) -> list[BoundRow]:
    """
    Theoretical values for display next to estimates. delta = 0 gives
    "vacuous" rows instead of division errors.
    """
    b = derived_bounds(params, n, delta_pp_constant)
    vacuous = not params.delta > 0

    def _row(name: str, value: Optional[float], detail: str) -> BoundRow:
        if vacuous or value is None:
            return BoundRow(name, None, "vacuous", detail)
        return BoundRow(name, value, "ok", detail)

    rows = [
        _row("intermediate", intermediate_bound(params, t_max), "ln m/(delta T) + 2 delta"),
        _row("infinite_3delta", b.regret_bound_inf, "Regret_inf(T) <= 3 delta for T >= ln m/delta^2"),
        _row("finite_6delta", b.regret_bound_fin, "Regret_N(T) <= 6 delta under the N conditions"),
    ]
    share = b.share_lower_bound
    if vacuous or share is None:
        rows.append(BoundRow("share_lower_bound", None, "vacuous", "1 - 3 delta/(eta_1 - eta_2)"))
    else:
        rows.append(BoundRow(
            "share_lower_bound", share,
            "informative" if share >= 0 else "uninformative",
            "1 - 3 delta/(eta_1 - eta_2)",
        ))
    rows.append(BoundRow("zeta", b.zeta, "ok", "mu(1-beta)/(4m)"))
    rows.append(_row("epoch_len", None if b.epoch_len is None else float(b.epoch_len), "ceil(ln(1/zeta)/delta^2)"))
    rows.append(_row("horizon_min", horizon_min(params), "ln m/delta^2"))
    for cond in population_conditions(params, n, t_max, delta_pp_constant):
        status = "met" if cond.holds else "unmet"
        rows.append(BoundRow(cond.name, cond.rhs_log, status, cond.detail + " (log-space right side)"))
    return rows


def bound_frame(rows: Sequence[BoundRow]) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in rows], columns=["name", "value", "status", "detail"])
