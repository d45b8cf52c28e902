"""
core.infinite_dynamics
Infinite-population process: a stochastic multiplicative-weights update.

The weights W_j^t decay like alpha^t and underflow after a few hundred
steps, so the state is the normalized distribution P^t plus ln(Phi^t), the
log of the unnormalized total weight. The normalized update

    P_j^{t+1} = ((1-mu) P_j^t + mu/m) f_j / sum_k ((1-mu) P_k^t + mu/m) f_k,
    f_j = beta^{R_j} alpha^{1-R_j},

is exact, and ln(Phi) grows by ln of the denominator each step.
Starts are scaled so that W^0 = m P^0 (Phi^0 = m, W^0 = 1 when uniform).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bounds import delta_prime, popularity_floor
from .models import ModelParams, RewardVector, TrialRecord, WeightDist
from .rewards import RewardStream

logger = logging.getLogger(__name__)


def initial_dist(params: ModelParams, p0: Optional[Sequence[float]] = None) -> WeightDist:
    m = params.m
    p = np.full(m, 1.0 / m) if p0 is None else np.asarray(p0, dtype=float)
    return WeightDist(p=p, log_phi=math.log(m))


def floor_constant(params: ModelParams) -> float:
    """
    Smallest P_j reachable in one step from any distribution:
    numerator >= (mu/m) alpha, denominator <= beta, so P_j >= mu alpha/(m beta).
    With alpha = 1 - beta this is mu(1-beta)/(m beta).
    """
    if params.beta <= 0:
        return 0.0
    return params.mu * params.alpha / (params.m * params.beta)


def step_infinite(dist: WeightDist, rewards: RewardVector, params: ModelParams) -> WeightDist:
    """
    One update of the normalized weights. Cumulative rewards use the
    distribution from before the step.
    """
    r = np.asarray(rewards, dtype=float)
    mixed = (1.0 - params.mu) * dist.p + params.mu / params.m
    weighted = mixed * params.adoption_rates(rewards)
    total = float(weighted.sum())
    if total > 0.0:
        p = weighted / total
        log_phi = dist.log_phi + math.log(total)
    else:
        # alpha = 0 and every signal bad: all weight vanishes.
        p = mixed
        log_phi = -math.inf
    p = p / p.sum()
    return WeightDist(
        p=p,
        log_phi=log_phi,
        cum_opt_reward=dist.cum_opt_reward + float(r[0]),
        cum_group_reward=dist.cum_group_reward + float(np.dot(dist.p, r)),
        t=dist.t + 1,
    )


def run_infinite(
    p0: Optional[Sequence[float]],
    stream: RewardStream,
    params: ModelParams,
    t_max: int,
    *,
    strict: bool = False,
    record_paths: bool = False,
    thin: int = 1,
) -> TrialRecord:
    """
    Iterate step_infinite for t_max steps. In strict (theorem-labelled) mode a
    p0 with some entry below zeta is rejected.
    """
    if p0 is not None and strict:
        zeta = popularity_floor(params)
        if min(p0) < zeta:
            raise ValueError(
                f"p0 has an entry below the popularity floor zeta={zeta:.6g}; "
                "the nonuniform-start theorem does not apply."
            )
    if thin < 1:
        raise ValueError(f"thin must be >= 1. Got {thin}")
    dist = initial_dist(params, p0)
    m = params.m
    log_w1_0 = math.log(m * dist.p[0]) if dist.p[0] > 0 else -math.inf

    group = np.empty(t_max)
    leader = np.empty(t_max)
    min_share = np.empty(t_max + 1)
    log_phi = np.empty(t_max + 1)
    opt = np.empty(t_max)
    log_phi[0] = dist.log_phi
    steps, qs, rs = [0], [dist.p.copy()], [np.zeros(m, np.uint8)]

    for k in range(t_max):
        leader[k] = dist.p[0]
        min_share[k] = dist.p.min()
        rewards = stream.next(params)
        before = dist.cum_group_reward
        dist = step_infinite(dist, rewards, params)
        group[k] = dist.cum_group_reward - before
        opt[k] = rewards[0]
        log_phi[k + 1] = dist.log_phi
        if record_paths and ((k + 1) % thin == 0 or k + 1 == t_max):
            steps.append(k + 1)
            qs.append(dist.p.copy())
            rs.append(np.asarray(rewards, dtype=np.uint8))
    min_share[t_max] = dist.p.min()

    record = TrialRecord(
        process="infinite",
        group_rewards=group,
        leader_share=leader,
        min_share=min_share,
        t_final=dist.t,
        log_phi=log_phi,
        opt_rewards=opt,
        log_w1_0=log_w1_0,
        reward_digest=stream.digest,
    )
    if record_paths:
        record.path_steps = np.asarray(steps)
        record.q_path = np.vstack(qs)
        record.r_path = np.vstack(rs)
    return record


# -----------------------------------------------------------------------------
# Potential audit
# -----------------------------------------------------------------------------
@dataclass(frozen=True, slots=True)
class PrefixCheck:
    prefix: int
    lower_slack: float
    upper_slack: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "prefix": self.prefix,
            "lower_slack": self.lower_slack,
            "upper_slack": self.upper_slack,
            "pass": self.passed,
        }


@dataclass(slots=True)
class PotentialAudit:
    """Per-prefix slacks of the two log-potential inequalities."""
    applicable: bool
    checks: list[PrefixCheck] = field(default_factory=list)
    delta_prime: float = 0.0
    delta_prime_within: Optional[bool] = None
    reason: str = ""

    @property
    def violations(self) -> list[PrefixCheck]:
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def first_violation(self) -> Optional[int]:
        bad = self.violations
        return bad[0].prefix if bad else None

    @property
    def min_lower_slack(self) -> float:
        return min((c.lower_slack for c in self.checks), default=math.inf)

    @property
    def min_upper_slack(self) -> float:
        return min((c.upper_slack for c in self.checks), default=math.inf)

    def to_records(self) -> list[dict]:
        return [c.to_dict() for c in self.checks]


def audit_potential(trial: TrialRecord, params: ModelParams, *, tol: float = 1e-9) -> PotentialAudit:
    """
    For every prefix T' check, in log space,

        ln W_1^0 + T' ln alpha + T' ln(1-mu) + d * sum R_1
            <= ln Phi^T'
            <= T' ln alpha + T' ln(1 + mu(e^d - 1)) + ln Phi^0 + d' * sum_t P^{t-1}.R^t

    with d = ln(beta/alpha) and d' = (1-mu)(e^d - 1)/(1 + mu d). With
    alpha = 1 - beta and a uniform start these are the potential-function
    bounds behind the infinite-population regret theorem. Violations are
    reported, never raised.
    """
    if trial.log_phi is None or trial.opt_rewards is None:
        raise ValueError("audit_potential() needs an infinite-process record (log_phi, opt_rewards).")
    d = params.delta_alpha
    if params.alpha <= 0 or math.isinf(d) or d < 0:
        return PotentialAudit(applicable=False, reason="needs 0 < alpha <= beta")

    dp = delta_prime(params)
    t_len = len(trial.opt_rewards)
    prefixes = np.arange(1, t_len + 1, dtype=float)
    cum_opt = np.cumsum(trial.opt_rewards)
    cum_group = np.cumsum(trial.group_rewards)
    log_phi = np.asarray(trial.log_phi[1:], dtype=float)

    ln_alpha = math.log(params.alpha)
    ln_keep = math.log1p(-params.mu) if params.mu < 1 else -math.inf
    ln_explore = math.log1p(params.mu * math.expm1(d))

    with np.errstate(invalid="ignore"):
        lower = trial.log_w1_0 + prefixes * (ln_alpha + ln_keep) + d * cum_opt
        upper = prefixes * (ln_alpha + ln_explore) + trial.log_phi[0] + dp * cum_group
        lower_slack = log_phi - lower
        upper_slack = upper - log_phi

    scale = tol * (1.0 + np.abs(log_phi))
    audit = PotentialAudit(
        applicable=True,
        delta_prime=dp,
        delta_prime_within=dp <= d * (1.0 + d) if d <= 1.0 else None,
    )
    for k in range(t_len):
        ok = bool(lower_slack[k] >= -scale[k] and upper_slack[k] >= -scale[k])
        audit.checks.append(PrefixCheck(k + 1, float(lower_slack[k]), float(upper_slack[k]), ok))
    if not audit.passed:
        logger.warning(
            "Potential audit: %d violating prefixes, first at T'=%s.",
            len(audit.violations),
            audit.first_violation,
        )
    return audit
