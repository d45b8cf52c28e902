"""
core.coupling
Finite and infinite processes driven by the same reward realizations.

The finite process's sampling and adoption noise is independent of the
infinite process, which has none. Each process reads its own RewardStream
built from the same (seed, trial); the streams' SHA-256 digests must agree
at the end of every trial.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .bounds import DEFAULT_DELTA_PP_CONSTANT, derived_bounds
from .finite_dynamics import initial_state, step_finite
from .infinite_dynamics import initial_dist, step_infinite
from .models import ModelParams
from .rewards import PURPOSE_POPULATION, RewardStream, trial_rng
from .trials import map_trials

logger = logging.getLogger(__name__)


class CouplingError(RuntimeError):
    """The two processes of a coupled trial consumed different rewards."""


class InsufficientDataError(ValueError):
    """A fit was asked for with too few population sizes."""


def ratio_deviation(p: np.ndarray, q: np.ndarray) -> float:
    """
    max_j max(|P_j/Q_j - 1|, |Q_j/P_j - 1|); <= d exactly when
    P_j and Q_j are within a factor 1 + d of each other for every j.
    """
    return float(max(np.max(np.abs(p / q - 1.0)), np.max(np.abs(q / p - 1.0))))


@dataclass(frozen=True, slots=True)
class CoupledTask:
    params: ModelParams
    n: int
    t_max: int
    seed: int
    trial: int
    reward_mode: str = "independent"


def coupled_trial(task: CoupledTask) -> np.ndarray:
    """
    Deviation per step t = 0..t_max for one trial; inf marks a step where
    some option has no adopters (Q_j = 0).
    """
    params = task.params
    inf_stream = RewardStream(task.seed, task.t_max, trial=task.trial, mode=task.reward_mode)
    fin_stream = RewardStream(task.seed, task.t_max, trial=task.trial, mode=task.reward_mode)
    rng = trial_rng(task.seed, task.trial, PURPOSE_POPULATION)
    dist = initial_dist(params)
    state = initial_state(params, task.n)

    devs = np.zeros(task.t_max + 1)
    for t in range(1, task.t_max + 1):
        dist = step_infinite(dist, inf_stream.next(params), params)
        state = step_finite(state, fin_stream.next(params), params, rng)
        if (state.d == 0).any():
            devs[t] = math.inf
        else:
            devs[t] = ratio_deviation(dist.p, state.q)

    if inf_stream.digest != fin_stream.digest:
        raise CouplingError(
            f"trial {task.trial}: reward checksums differ ({inf_stream.digest} vs {fin_stream.digest})."
        )
    return devs


@dataclass(frozen=True, slots=True)
class CouplingRow:
    n: int
    t: int
    median_dev: Optional[float]
    p95_dev: Optional[float]
    bound_delta_t: float
    bound_delta_t_alt: float
    vacuous: bool
    within_bound: Optional[float]
    zero_q_events: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "median_dev": self.median_dev,
            "p95_dev": self.p95_dev,
            "bound_delta_t": self.bound_delta_t,
            "bound_delta_t_alt": self.bound_delta_t_alt,
            "vacuous": self.vacuous,
            "within_bound": self.within_bound,
            "zero_q_events": self.zero_q_events,
        }


@dataclass(slots=True)
class CouplingReport:
    params: ModelParams
    n_values: list[int]
    t_max: int
    trials: int
    seed: int
    delta_pp_constant: float = DEFAULT_DELTA_PP_CONSTANT
    rows: list[CouplingRow] = field(default_factory=list)

    def rows_at(self, t: int) -> list[CouplingRow]:
        return [r for r in self.rows if r.t == t]

    def rows_for(self, n: int) -> list[CouplingRow]:
        return [r for r in self.rows if r.n == n]

    def to_dict(self) -> dict:
        try:
            fit = scaling_fit(self)
            slope, slope_se = fit.slope, fit.stderr
        except InsufficientDataError:
            slope, slope_se = None, None
        return {
            "params": self.params.to_params(),
            "n_values": list(self.n_values),
            "trials": self.trials,
            "seed": self.seed,
            "delta_pp_constant": self.delta_pp_constant,
            "per_t": [r.to_dict() for r in self.rows],
            "scaling_slope": slope,
            "scaling_slope_se": slope_se,
        }


def _aggregate(devs: np.ndarray, n: int, b, t: int) -> CouplingRow:
    finite = devs[np.isfinite(devs)]
    zero_q = int(len(devs) - len(finite))
    bound = b.delta_t(t)
    bound_alt = b.delta_t(t, alt=True)
    vacuous = bound >= 1.0
    if len(finite):
        median = float(np.median(finite))
        p95 = float(np.percentile(finite, 95))
        within = float(np.mean(finite <= bound))
    else:
        median = p95 = within = None
    return CouplingRow(n, t, median, p95, bound, bound_alt, vacuous, within, zero_q)


def run_coupled(
    params: ModelParams,
    n_values: int | Sequence[int],
    t_max: int,
    trials: int,
    seed: int = 0,
    *,
    workers: int = 1,
    delta_pp_constant: float = DEFAULT_DELTA_PP_CONSTANT,
    reward_mode: str = "independent",
) -> CouplingReport:
    """
    Run `trials` coupled trials for every N and aggregate, per (N, t), the
    median and 95th percentile of the ratio deviation next to the bound
    5^t delta''. A bound >= 1 is marked vacuous.
    """
    if isinstance(n_values, (int, np.integer)):
        n_values = [int(n_values)]
    n_values = sorted(int(n) for n in n_values)
    if t_max < 0 or trials < 1:
        raise ValueError(f"need t_max >= 0 and trials >= 1. Got t_max={t_max}, trials={trials}")

    t0 = time.perf_counter()
    logger.info("Coupled run: n=%s T=%d trials=%d seed=%d.", n_values, t_max, trials, seed)
    report = CouplingReport(params, n_values, t_max, trials, seed, delta_pp_constant)
    for n in n_values:
        tasks = [CoupledTask(params, n, t_max, seed, i, reward_mode) for i in range(trials)]
        devs = np.vstack(map_trials(coupled_trial, tasks, workers))
        b = derived_bounds(params, n, delta_pp_constant)
        for t in range(t_max + 1):
            report.rows.append(_aggregate(devs[:, t], n, b, t))
    logger.info("Coupled run finished in %.3f seconds.", time.perf_counter() - t0)
    return report


# -----------------------------------------------------------------------------
# Scaling in N
# -----------------------------------------------------------------------------
@dataclass(frozen=True, slots=True)
class ScalingFit:
    t: int
    slope: float
    stderr: float
    intercept: float
    n_values: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "slope": self.slope,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "n_values": list(self.n_values),
        }


def scaling_fit(report: CouplingReport, t: Optional[int] = None) -> ScalingFit:
    """
    Least-squares slope of log(median deviation) against log N at fixed t
    (default: the report's last step). The coupling bound predicts -1/2.
    """
    t = report.t_max if t is None else t
    rows = [r for r in report.rows_at(t) if r.median_dev is not None and r.median_dev > 0]
    ns = sorted({r.n for r in rows})
    if len(ns) < 3:
        raise InsufficientDataError(
            f"scaling_fit needs >= 3 population sizes with data at t={t}; got {len(ns)}."
        )
    if math.log10(ns[-1] / ns[0]) < 2.0 - 1e-9:
        logger.warning("scaling_fit: population sizes %s span less than two decades.", ns)
    x = np.log([r.n for r in rows])
    y = np.log([r.median_dev for r in rows])
    fit = stats.linregress(x, y)
    return ScalingFit(t, float(fit.slope), float(fit.stderr), float(fit.intercept), tuple(ns))


def median_inversions(report: CouplingReport, n: int, window: int = 5) -> int:
    """
    Number of decreases of the median deviation over t = 1..window.
    One inversion is tolerated by the monotonicity check.
    """
    medians = [
        r.median_dev for r in report.rows_for(n)
        if 1 <= r.t <= window and r.median_dev is not None
    ]
    return sum(1 for a, b in zip(medians, medians[1:]) if b < a)
