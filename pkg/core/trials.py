"""
core.trials
Trial specifications and the worker pool.

A trial's randomness depends only on (master seed, trial index), so the
aggregated output is the same for any worker count; Pool.map returns
results in task order.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence, TypeVar

import numpy as np

from .finite_dynamics import initial_state, run_finite
from .infinite_dynamics import audit_potential, run_infinite
from .models import ModelParams, TrialRecord
from .rewards import PURPOSE_PARAMS, PURPOSE_POPULATION, RewardStream, trial_rng
from .validators import BETA_MAX

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

PROCESSES = ("finite", "infinite")


@dataclass(frozen=True, slots=True)
class TrialSpec:
    process: str
    params: ModelParams
    n: Optional[int]
    t_max: int
    seed: int
    trial: int
    p0: Optional[tuple[float, ...]] = None
    sampling: str = "count"
    reward_mode: str = "independent"
    strict: bool = False
    record_paths: bool = False
    thin: int = 1
    reward_trace: Optional[str] = None


def simulate_trial(spec: TrialSpec) -> TrialRecord:
    """Run one trial of the finite or infinite process on its own stream."""
    if spec.reward_trace is not None:
        # Every trial replays the same rewards; only population noise differs.
        stream = RewardStream.from_trace(spec.reward_trace)
    else:
        stream = RewardStream(spec.seed, spec.t_max, trial=spec.trial, mode=spec.reward_mode)
    if spec.process == "infinite":
        return run_infinite(
            spec.p0, stream, spec.params, spec.t_max,
            strict=spec.strict, record_paths=spec.record_paths, thin=spec.thin,
        )
    if spec.process == "finite":
        if spec.n is None:
            raise ValueError("the finite process needs a population size n.")
        rng = trial_rng(spec.seed, spec.trial, PURPOSE_POPULATION)
        state = initial_state(spec.params, spec.n, spec.p0)
        return run_finite(
            state, stream, spec.params, spec.t_max, rng,
            mode=spec.sampling, record_paths=spec.record_paths, thin=spec.thin,
        )
    raise ValueError(f"process must be one of {PROCESSES}. Got {spec.process!r}.")


def map_trials(worker: Callable[[T], R], tasks: Sequence[T], workers: int = 1) -> list[R]:
    """
    Apply `worker` to every task, in a process pool when workers > 1.
    Results come back in task order regardless of completion order.
    """
    tasks = list(tasks)
    if workers <= 1 or len(tasks) < 2:
        return [worker(t) for t in tasks]
    processes = min(workers, len(tasks))
    chunksize = max(1, len(tasks) // (processes * 4))
    logger.info("Dispatching %d tasks to %d workers (chunksize=%d).", len(tasks), processes, chunksize)
    with multiprocessing.Pool(processes=processes) as pool:
        return pool.map(worker, tasks, chunksize=chunksize)


# -----------------------------------------------------------------------------
# Potential audit over many trajectories
# -----------------------------------------------------------------------------
def draw_params(rng: np.random.Generator, max_m: int = 10) -> ModelParams:
    """
    Random parameters inside the theorem's regime: m in [2, max_m],
    beta in (1/2, e/(e+1)], mu in (0, delta^2/6], eta sorted descending.
    """
    m = int(rng.integers(2, max_m + 1))
    beta = 0.5 + (BETA_MAX - 0.5) * (1.0 - rng.random())
    delta = math.log(beta / (1.0 - beta))
    mu = (delta ** 2 / 6.0) * (1.0 - rng.random())
    eta = np.sort(rng.random(m))[::-1]
    return ModelParams(m=m, eta=tuple(float(x) for x in eta), mu=mu, beta=beta)


@dataclass(frozen=True, slots=True)
class AuditTask:
    params: Optional[ModelParams]
    t_max: int
    seed: int
    trial: int
    reward_mode: str = "independent"


def audit_trial(task: AuditTask) -> dict[str, Any]:
    """One infinite-process trajectory and its potential audit, as a flat row."""
    params = task.params
    if params is None:
        params = draw_params(trial_rng(task.seed, task.trial, PURPOSE_PARAMS))
    stream = RewardStream(task.seed, task.t_max, trial=task.trial, mode=task.reward_mode)
    record = run_infinite(None, stream, params, task.t_max)
    audit = audit_potential(record, params)
    return {
        "trial": task.trial,
        "m": params.m,
        "mu": params.mu,
        "beta": params.beta,
        "alpha": params.alpha,
        "applicable": audit.applicable,
        "passed": audit.passed,
        "violations": len(audit.violations),
        "first_violation": audit.first_violation,
        "min_lower_slack": audit.min_lower_slack if audit.applicable else None,
        "min_upper_slack": audit.min_upper_slack if audit.applicable else None,
        "delta_prime": audit.delta_prime,
        "delta_prime_within": audit.delta_prime_within,
    }
