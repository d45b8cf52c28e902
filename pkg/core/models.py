"""
core.models
Domain layer models used by the social-learning simulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

import numpy as np

# One step of quality signals: m entries in {0, 1}.
RewardVector = np.ndarray


def _to_eta(eta: Sequence[float] | str) -> tuple[float, ...]:
    """
    Normalize qualities given as a sequence or a comma-separated string.
    """
    if isinstance(eta, str):
        parts = [p.strip() for p in eta.split(",") if p.strip()]
    else:
        parts = list(eta)
    try:
        return tuple(float(x) for x in parts)
    except (TypeError, ValueError) as e:
        raise ValueError(f"eta must be a list of numbers. Got {eta!r}") from e


def _log_ratio(num: float, den: float) -> float:
    # ln(num/den) with the limits the adoption probabilities can reach.
    if den <= 0.0:
        return math.inf if num > 0.0 else 0.0
    if num <= 0.0:
        return -math.inf
    return math.log(num / den)


@dataclass(frozen=True, slots=True)
class ModelParams:
    """
    Environment (m, eta) and behaviour (mu, beta, alpha) parameters.
    alpha defaults to 1 - beta, the regime the regret theorems are stated in.
    """
    m: int
    eta: tuple[float, ...]
    mu: float
    beta: float
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "m", int(self.m))
            object.__setattr__(self, "mu", float(self.mu))
            object.__setattr__(self, "beta", float(self.beta))
        except (TypeError, ValueError) as e:
            raise ValueError(f"m, mu and beta must be numeric: {e}") from e
        object.__setattr__(self, "eta", _to_eta(self.eta))
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1.0 - self.beta)
        else:
            object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def delta(self) -> float:
        """ln(beta/(1-beta)), recomputed on every access."""
        return _log_ratio(self.beta, 1.0 - self.beta)

    @property
    def delta_alpha(self) -> float:
        """ln(beta/alpha): the deviation scale for a general alpha."""
        return _log_ratio(self.beta, self.alpha)

    @property
    def symmetric_regime(self) -> bool:
        return abs(self.alpha - (1.0 - self.beta)) <= 1e-12

    @property
    def eta_array(self) -> np.ndarray:
        return np.asarray(self.eta, dtype=float)

    @property
    def eta_gap(self) -> float:
        return self.eta[0] - self.eta[1]

    def adoption_rates(self, rewards: np.ndarray) -> np.ndarray:
        """Per-option adoption probability beta^R alpha^(1-R)."""
        return np.where(np.asarray(rewards) != 0, self.beta, self.alpha)

    def replace(self, **changes: Any) -> "ModelParams":
        values = self.to_params()
        values.update(changes)
        # Changing beta alone keeps the symmetric regime.
        if "beta" in changes and "alpha" not in changes and self.symmetric_regime:
            values["alpha"] = None
        if "eta" in changes and "m" not in changes:
            values["m"] = len(_to_eta(changes["eta"]))
        return ModelParams(**values)

    @classmethod
    def from_mapping(cls, row: Mapping[str, Any]) -> "ModelParams":
        return cls(
            m=row["m"],
            eta=row["eta"],
            mu=row["mu"],
            beta=row["beta"],
            alpha=row.get("alpha"),
        )

    def to_params(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "eta": list(self.eta),
            "mu": self.mu,
            "beta": self.beta,
            "alpha": self.alpha,
        }


@dataclass(frozen=True, slots=True)
class DerivedBounds:
    """
    Constants derived from ModelParams and a population size.
    None marks a quantity that is undefined (vacuous) at these parameters.
    """
    n: int
    delta: float
    delta_pp: float
    delta_pp_alt: float
    delta_pp_constant: float
    delta_p: float
    delta_prime: float
    zeta: float
    epoch_len: Optional[int]
    regret_bound_inf: Optional[float]
    regret_bound_fin: Optional[float]
    share_lower_bound: Optional[float]
    c: float

    def delta_t(self, t: int, *, alt: bool = False) -> float:
        """Per-step coupling bound 5^t * delta''."""
        if t < 0:
            raise ValueError(f"t must be >= 0. Got {t}")
        base = self.delta_pp_alt if alt else self.delta_pp
        return (5.0 ** t) * base

    def to_params(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "delta": self.delta,
            "delta_pp": self.delta_pp,
            "delta_pp_alt": self.delta_pp_alt,
            "delta_pp_constant": self.delta_pp_constant,
            "delta_p": self.delta_p,
            "delta_prime": self.delta_prime,
            "zeta": self.zeta,
            "epoch_len": self.epoch_len,
            "regret_bound_inf": self.regret_bound_inf,
            "regret_bound_fin": self.regret_bound_fin,
            "share_lower_bound": self.share_lower_bound,
            "c": self.c,
        }


@dataclass(slots=True)
class FinitePopState:
    """
    Count-level state of the N-individual process after step t.
    d: adopters per option, s: stage-one samplers per option, q: popularity.
    group_reward is sum_j Q_j^(t-1) R_j^t for the step that produced this state.
    """
    n: int
    d: np.ndarray
    s: np.ndarray
    q: np.ndarray
    t: int = 0
    degenerate_resets: int = 0
    group_reward: float = 0.0


@dataclass(slots=True)
class AgentState:
    """
    Per-individual state for agent mode.
    x: last committed option or -1 for a sit-out, y: stage-one pick,
    z: adoption bit of the last step.
    """
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def counts(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        """(d, s) aggregated from the individual choices."""
        s = np.bincount(self.y, minlength=m)
        d = np.bincount(self.x[self.x >= 0], minlength=m)
        return d, s


@dataclass(slots=True)
class WeightDist:
    """
    Normalized infinite-population distribution plus the log of the
    unnormalized total weight (the potential) and cumulative rewards.
    """
    p: np.ndarray
    log_phi: float
    cum_opt_reward: float = 0.0
    cum_group_reward: float = 0.0
    t: int = 0


@dataclass(slots=True)
class TrialRecord:
    """
    Output of one simulated trial.

    group_rewards[t-1] = sum_j popularity_j^(t-1) R_j^t, leader_share[t-1] is
    the option-1 popularity used at step t, min_share has length T+1.
    Path arrays are filled only when paths are recorded.
    """
    process: str
    group_rewards: np.ndarray
    leader_share: np.ndarray
    min_share: np.ndarray
    degenerate_resets: int = 0
    t_final: int = 0
    per_capita: Optional[np.ndarray] = None
    path_steps: Optional[np.ndarray] = None
    q_path: Optional[np.ndarray] = None
    s_path: Optional[np.ndarray] = None
    d_path: Optional[np.ndarray] = None
    r_path: Optional[np.ndarray] = None
    log_phi: Optional[np.ndarray] = None
    opt_rewards: Optional[np.ndarray] = None
    log_w1_0: float = 0.0
    reward_digest: str = ""

    def regret(self, eta1: float) -> float:
        """Realized eta_1 - (1/T) sum_t g_t."""
        return eta1 - float(np.mean(self.group_rewards))


@dataclass(slots=True)
class RegretSummary:
    """
    Monte Carlo estimate of a regret quantity next to its theoretical bound.
    """
    process: str
    m: int
    n: Optional[int]
    mu: float
    beta: float
    T: int
    trials: int
    regret_mean: float
    regret_se: float
    bound: Optional[float]
    bound_name: str
    leader_share_mean: float
    leader_share_se: float = 0.0
    floor_violations: float = 0.0
    seed: int = 0
    per_capita_mean: Optional[float] = None
    label: str = field(default="", compare=False)

    def to_row(self) -> dict[str, Any]:
        """Row in the documented summary CSV column order."""
        return {
            "process": self.process,
            "m": self.m,
            "n": self.n,
            "mu": self.mu,
            "beta": self.beta,
            "T": self.T,
            "trials": self.trials,
            "regret_mean": self.regret_mean,
            "regret_se": self.regret_se,
            "bound": self.bound,
            "bound_name": self.bound_name,
            "leader_share_mean": self.leader_share_mean,
            "floor_violations": self.floor_violations,
            "seed": self.seed,
            "per_capita_mean": self.per_capita_mean,
        }
