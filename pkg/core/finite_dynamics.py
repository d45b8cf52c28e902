"""
core.finite_dynamics
The N-individual two-stage process: sampling, then adoption.

Two equivalent modes:
  - count mode: stage-one counts are a multinomial drawn as a chain of
    conditional binomials (O(m) per step, independent of N), adopters are
    per-option binomials;
  - agent mode: every individual is simulated; following the crowd means
    picking a uniform companion and resampling while the companion sat out.

sample_counts() and adopt_stage() accept a leading batch axis so batched
checks reuse the exact code path of step_finite().
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from .models import AgentState, FinitePopState, ModelParams, RewardVector, TrialRecord
from .rewards import RewardStream

logger = logging.getLogger(__name__)

SAMPLING_MODES = ("count", "agent")


# -----------------------------------------------------------------------------
# Construction
# -----------------------------------------------------------------------------
def initial_state(params: ModelParams, n: int, q0: Optional[Sequence[float]] = None) -> FinitePopState:
    """
    Start with no recorded adopters and popularity q0 (uniform by default).
    No sampling has happened yet, so s is all zeros: sum(S) = N holds from
    t = 1 on.
    """
    if n < 1:
        raise ValueError(f"population size must be >= 1. Got {n}")
    m = params.m
    q = np.full(m, 1.0 / m) if q0 is None else np.asarray(q0, dtype=float)
    return FinitePopState(
        n=int(n),
        d=np.zeros(m, dtype=np.int64),
        s=np.zeros(m, dtype=np.int64),
        q=q,
    )


def initial_agents(n: int) -> AgentState:
    """Nobody committed yet: companions are drawn from the state's popularity."""
    return AgentState(
        x=np.full(n, -1, dtype=np.int64),
        y=np.zeros(n, dtype=np.int64),
        z=np.zeros(n, dtype=bool),
    )


# -----------------------------------------------------------------------------
# Stage one: sampling
# -----------------------------------------------------------------------------
def sampling_probs(q: np.ndarray, params: ModelParams) -> np.ndarray:
    """(1-mu) Q_j + mu/m, over the last axis."""
    return (1.0 - params.mu) * np.asarray(q, dtype=float) + params.mu / params.m


def multinomial_counts(rng: np.random.Generator, n, probs: np.ndarray) -> np.ndarray:
    """
    Multinomial(n, probs) as sequential conditional binomials.
    probs has shape (..., m); n is a scalar or broadcasts to probs.shape[:-1].
    """
    probs = np.asarray(probs, dtype=float)
    m = probs.shape[-1]
    out = np.zeros(probs.shape, dtype=np.int64)
    remaining = np.array(np.broadcast_to(np.asarray(n, dtype=np.int64), probs.shape[:-1]))
    mass_left = np.ones(probs.shape[:-1])
    for j in range(m - 1):
        pj = probs[..., j]
        safe = np.where(mass_left > 0, mass_left, 1.0)
        cond = np.where(mass_left > 0, np.clip(pj / safe, 0.0, 1.0), 0.0)
        draw = rng.binomial(remaining, cond)
        out[..., j] = draw
        remaining = remaining - draw
        mass_left = mass_left - pj
    out[..., m - 1] = remaining
    return out


def sample_counts(q: np.ndarray, n: int, params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """Stage-one counts S for popularity q (batch-capable)."""
    return multinomial_counts(rng, n, sampling_probs(q, params))


def sample_stage(state: FinitePopState, params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """
    S ~ Multinomial(N, (1-mu) Q^t + mu/m); sum(S) = N.
    """
    return sample_counts(state.q, state.n, params, rng)


# -----------------------------------------------------------------------------
# Stage two: adoption
# -----------------------------------------------------------------------------
def adopt_stage(
    s: np.ndarray,
    rewards: RewardVector,
    params: ModelParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    D_j ~ Binomial(S_j, beta) if R_j = 1 else Binomial(S_j, alpha),
    independently across j (batch-capable).
    """
    return rng.binomial(np.asarray(s, dtype=np.int64), params.adoption_rates(rewards))


# -----------------------------------------------------------------------------
# Steps
# -----------------------------------------------------------------------------
def _advance(
    state: FinitePopState,
    s: np.ndarray,
    d: np.ndarray,
    rewards: RewardVector,
) -> FinitePopState:
    m = len(state.q)
    group_reward = float(np.dot(state.q, rewards))
    total = int(d.sum())
    resets = state.degenerate_resets
    if total == 0:
        # Nobody adopted: fall back to the uniform start convention.
        q = np.full(m, 1.0 / m)
        resets += 1
        logger.debug("Degenerate step t=%d: no adopters, popularity reset to uniform.", state.t + 1)
    else:
        q = d / total
    return FinitePopState(
        n=state.n,
        d=np.asarray(d, dtype=np.int64),
        s=np.asarray(s, dtype=np.int64),
        q=q,
        t=state.t + 1,
        degenerate_resets=resets,
        group_reward=group_reward,
    )


def step_finite(
    state: FinitePopState,
    rewards: RewardVector,
    params: ModelParams,
    rng: np.random.Generator,
) -> FinitePopState:
    """
    One count-mode step: sample_stage then adopt_stage, popularity from the
    new adopters. Sum(D) = 0 resets q to uniform and counts the event.
    """
    s = sample_stage(state, params, rng)
    d = adopt_stage(s, rewards, params, rng)
    return _advance(state, s, d, rewards)


def step_agents(
    agents: AgentState,
    state: FinitePopState,
    rewards: RewardVector,
    params: ModelParams,
    rng: np.random.Generator,
) -> tuple[AgentState, FinitePopState]:
    """
    One agent-mode step. With probability mu an individual considers a uniform
    option; otherwise it copies a uniform companion's last commitment,
    resampling companions who sat out. With no committed companion at all,
    the pick follows the state's popularity directly.
    """
    n, m = state.n, params.m
    explore = rng.random(n) < params.mu
    y = np.empty(n, dtype=np.int64)
    y[explore] = rng.integers(0, m, int(explore.sum()))

    followers = np.flatnonzero(~explore)
    committed = agents.x >= 0
    if committed.any():
        companions = rng.integers(0, n, followers.size)
        pending = ~committed[companions]
        while pending.any():
            companions[pending] = rng.integers(0, n, int(pending.sum()))
            pending = ~committed[companions]
        y[followers] = agents.x[companions]
    else:
        y[followers] = rng.choice(m, size=followers.size, p=state.q)

    rates = params.adoption_rates(rewards)
    z = rng.random(n) < rates[y]
    x = np.where(z, y, -1)
    new_agents = AgentState(x=x, y=y, z=z)
    d, s = new_agents.counts(m)
    return new_agents, _advance(state, s, d, rewards)


# -----------------------------------------------------------------------------
# Trials
# -----------------------------------------------------------------------------
def run_finite(
    initial: FinitePopState,
    stream: RewardStream,
    params: ModelParams,
    t_max: int,
    rng: np.random.Generator,
    *,
    mode: str = "count",
    record_paths: bool = False,
    thin: int = 1,
) -> TrialRecord:
    """
    Iterate the finite process for t_max steps on `stream`.
    Paths (q, S, D, R) are kept every `thin` steps plus the last one when
    record_paths is set. Stream exhaustion propagates.
    """
    if mode not in SAMPLING_MODES:
        raise ValueError(f"sampling mode must be one of {SAMPLING_MODES}. Got {mode!r}.")
    if thin < 1:
        raise ValueError(f"thin must be >= 1. Got {thin}")
    m = params.m
    state = initial
    agents = initial_agents(state.n) if mode == "agent" else None

    group = np.empty(t_max)
    leader = np.empty(t_max)
    min_share = np.empty(t_max + 1)
    per_capita = np.empty(t_max)
    steps, qs, ss, ds, rs = [0], [state.q.copy()], [state.s.copy()], [state.d.copy()], [np.zeros(m, np.uint8)]

    for k in range(t_max):
        leader[k] = state.q[0]
        min_share[k] = state.q.min()
        rewards = stream.next(params)
        if agents is not None:
            agents, state = step_agents(agents, state, rewards, params, rng)
        else:
            state = step_finite(state, rewards, params, rng)
        group[k] = state.group_reward
        per_capita[k] = float(np.dot(state.d, rewards)) / state.n
        if record_paths and ((k + 1) % thin == 0 or k + 1 == t_max):
            steps.append(k + 1)
            qs.append(state.q.copy())
            ss.append(state.s.copy())
            ds.append(state.d.copy())
            rs.append(np.asarray(rewards, dtype=np.uint8))
    min_share[t_max] = state.q.min()

    record = TrialRecord(
        process="finite",
        group_rewards=group,
        leader_share=leader,
        min_share=min_share,
        degenerate_resets=state.degenerate_resets,
        t_final=state.t,
        per_capita=per_capita,
        reward_digest=stream.digest,
    )
    if record_paths:
        record.path_steps = np.asarray(steps)
        record.q_path = np.vstack(qs)
        record.s_path = np.vstack(ss)
        record.d_path = np.vstack(ds)
        record.r_path = np.vstack(rs)
    return record
