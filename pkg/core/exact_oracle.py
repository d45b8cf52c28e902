"""
core.exact_oracle
Exact transition law of the finite process for tiny instances.

Outcomes are enumerated by counts, never by individuals: reward vector
R in {0,1}^m, stage-one counts S (a composition of N into m parts, with
multinomial weight) and adopters D_j <= S_j (binomial weights). States are
adopter-count vectors d; popularity is d/sum(d), or uniform when sum(d) = 0,
the same reset rule the simulator applies.

Float mode sums each probability with math.fsum over terms sorted by
ascending magnitude; rational mode uses fractions.Fraction throughout.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

import numpy as np
import pandas as pd

from .finite_dynamics import adopt_stage, sample_counts
from .models import ModelParams
from .rewards import PURPOSE_POPULATION, RewardStream, trial_rng

logger = logging.getLogger(__name__)

MAX_N = 4
MAX_M = 3
MAX_T = 3

Number = Union[float, Fraction]


class OracleSizeError(ValueError):
    """The instance is too large to enumerate."""


@dataclass(slots=True)
class StateDistribution:
    """Probability of every adopter-count vector d after step t."""
    probs: dict[tuple[int, ...], Number]
    n: int
    m: int
    params: ModelParams
    t: int = 0
    rational: bool = False

    def total(self) -> Number:
        if self.rational:
            return sum(self.probs.values(), Fraction(0))
        return math.fsum(self.probs.values())

    def as_floats(self) -> dict[tuple[int, ...], float]:
        return {d: float(p) for d, p in self.probs.items()}


def _check_size(n: int, m: int) -> None:
    if n < 1 or n > MAX_N or m < 2 or m > MAX_M:
        raise OracleSizeError(
            f"exact enumeration is limited to 1 <= N <= {MAX_N} and 2 <= m <= {MAX_M}; got N={n}, m={m}."
        )


def _num(x: float, rational: bool) -> Number:
    # Fraction(repr(0.2)) is 1/5, Fraction(0.2) would be the binary expansion.
    return Fraction(repr(float(x))) if rational else float(x)


def _compositions(n: int, m: int) -> Iterator[tuple[int, ...]]:
    """Every (s_1..s_m) of non-negative integers summing to n."""
    if m == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, m - 1):
            yield (first,) + rest


def _popularity(d: tuple[int, ...], m: int, rational: bool) -> list[Number]:
    total = sum(d)
    if total == 0:
        return [Fraction(1, m) if rational else 1.0 / m] * m
    if rational:
        return [Fraction(x, total) for x in d]
    return [x / total for x in d]


def _multinomial(s: tuple[int, ...], probs: list[Number], rational: bool) -> Number:
    coef = math.factorial(sum(s))
    for x in s:
        coef //= math.factorial(x)
    out: Number = Fraction(coef) if rational else float(coef)
    for x, p in zip(s, probs):
        out *= p ** x
    return out


def _binomial(k: int, s: int, r: Number) -> Number:
    return math.comb(s, k) * r ** k * (1 - r) ** (s - k)


def _reward_outcomes(params: ModelParams, rational: bool) -> list[tuple[tuple[int, ...], Number]]:
    """(R, P[R]) for every R in {0,1}^m with positive probability."""
    eta = [_num(e, rational) for e in params.eta]
    out = []
    for r in itertools.product((0, 1), repeat=params.m):
        p: Number = Fraction(1) if rational else 1.0
        for rj, ej in zip(r, eta):
            p *= ej if rj else 1 - ej
        if p != 0:
            out.append((r, p))
    return out


def _sum(terms: list[Number], rational: bool) -> Number:
    if rational:
        return sum(terms, Fraction(0))
    return math.fsum(sorted(terms, key=abs))


def _accumulate(terms: Mapping[tuple[int, ...], list[Number]], rational: bool) -> dict[tuple[int, ...], Number]:
    return {d: _sum(ts, rational) for d, ts in sorted(terms.items())}


def initial_distribution(params: ModelParams, n: int, *, rational: bool = False) -> StateDistribution:
    """Point mass on d = 0, i.e. the uniform start."""
    _check_size(n, params.m)
    one: Number = Fraction(1) if rational else 1.0
    return StateDistribution({(0,) * params.m: one}, n, params.m, params, 0, rational)


def exact_step(dist: StateDistribution, params: ModelParams | None = None, *, rational: bool | None = None) -> StateDistribution:
    """
    Exact one-step pushforward of `dist`. Raises OracleSizeError beyond
    N <= 4, m <= 3.
    """
    params = dist.params if params is None else params
    rational = dist.rational if rational is None else rational
    n, m = dist.n, params.m
    _check_size(n, m)

    mu = _num(params.mu, rational)
    rate = {1: _num(params.beta, rational), 0: _num(params.alpha, rational)}
    rewards = _reward_outcomes(params, rational)
    comps = list(_compositions(n, m))

    terms: dict[tuple[int, ...], list[Number]] = defaultdict(list)
    for d_prev, p_prev in dist.probs.items():
        if p_prev == 0:
            continue
        q = _popularity(d_prev, m, rational)
        pick = [(1 - mu) * qj + mu / m for qj in q]
        for s in comps:
            p_s = _multinomial(s, pick, rational)
            if p_s == 0:
                continue
            for r, p_r in rewards:
                base = p_prev * p_s * p_r
                per_option = [
                    [(k, _binomial(k, s[j], rate[r[j]])) for k in range(s[j] + 1)]
                    for j in range(m)
                ]
                for combo in itertools.product(*per_option):
                    p = base
                    for _, pk in combo:
                        p *= pk
                    if p != 0:
                        terms[tuple(k for k, _ in combo)].append(p)

    return StateDistribution(_accumulate(terms, rational), n, m, params, dist.t + 1, rational)


def exact_distribution(params: ModelParams, n: int, steps: int = 1, *, rational: bool = False) -> StateDistribution:
    """Distribution of d after `steps` steps from the uniform start."""
    t0 = time.perf_counter()
    dist = initial_distribution(params, n, rational=rational)
    for _ in range(steps):
        dist = exact_step(dist, params)
    logger.info("Exact distribution: N=%d m=%d steps=%d (%d states) in %.3f seconds.",
                n, params.m, steps, len(dist.probs), time.perf_counter() - t0)
    return dist


def exact_regret(params: ModelParams, n: int, t_max: int, *, rational: bool = False, tol: float = 1e-10) -> Number:
    """
    Regret_N(T) = eta_1 - (1/T) sum_t sum_j E[Q_j^(t-1) R_j^t], for T <= 3.

    The joint expectation is enumerated over (d, R) and compared with the
    factorized E[Q_j^(t-1)] eta_j; a mismatch beyond `tol` (any mismatch in
    rational mode) raises RuntimeError.
    """
    if t_max < 1 or t_max > MAX_T:
        raise OracleSizeError(f"exact_regret supports 1 <= T <= {MAX_T}; got T={t_max}.")
    dist = initial_distribution(params, n, rational=rational)
    rewards = _reward_outcomes(params, rational)
    eta = [_num(e, rational) for e in params.eta]
    m = params.m

    group_terms: list[Number] = []
    for t in range(1, t_max + 1):
        joint: list[list[Number]] = [[] for _ in range(m)]
        factor: list[list[Number]] = [[] for _ in range(m)]
        for d, p in dist.probs.items():
            q = _popularity(d, m, rational)
            for j in range(m):
                factor[j].append(p * q[j] * eta[j])
                for r, p_r in rewards:
                    if r[j]:
                        joint[j].append(p * p_r * q[j])
        for j in range(m):
            a = _sum(joint[j], rational)
            b = _sum(factor[j], rational)
            gap = abs(a - b)
            if (rational and gap != 0) or (not rational and gap > tol):
                raise RuntimeError(
                    f"factorization check failed at t={t}, j={j + 1}: joint={float(a)!r} vs factorized={float(b)!r}."
                )
            group_terms.append(a)
        dist = exact_step(dist, params)

    return eta[0] - _sum(group_terms, rational) / t_max


# -----------------------------------------------------------------------------
# Tables and simulator comparison
# -----------------------------------------------------------------------------
def dump_table(dist: StateDistribution) -> pd.DataFrame:
    """Frame with columns d_1..d_m, probability; one row per state."""
    cols = [f"d_{j + 1}" for j in range(dist.m)]
    rows = [list(d) + [float(p)] for d, p in sorted(dist.probs.items())]
    return pd.DataFrame(rows, columns=cols + ["probability"])


def _simulate_batches(
    params: ModelParams,
    n: int,
    samples: int,
    seed: int,
    steps: int,
    batch: int,
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """
    Independent runs of `steps` steps from the uniform start, `batch` at a
    time, through the simulator's batched sample_counts/adopt_stage.
    Yields (final d, sum_t Q^(t-1).R^t) per batch.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1. Got {samples}")
    m = params.m
    rng = trial_rng(seed, 0, PURPOSE_POPULATION)
    stream = RewardStream(seed, samples * steps)
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        q = np.full((k, m), 1.0 / m)
        d = np.zeros((k, m), dtype=np.int64)
        group = np.zeros(k)
        for _ in range(steps):
            rewards = stream.next_block(k, params)
            group += np.einsum("ij,ij->i", q, rewards)
            s = sample_counts(q, n, params, rng)
            d = adopt_stage(s, rewards, params, rng)
            total = d.sum(axis=1, keepdims=True)
            q = np.where(total > 0, d / np.maximum(total, 1), 1.0 / m)
        yield d, group
        done += k


def simulated_distribution(
    params: ModelParams,
    n: int,
    samples: int,
    seed: int = 0,
    *,
    steps: int = 1,
    batch: int = 100_000,
) -> dict[tuple[int, ...], float]:
    """Empirical distribution of d after `steps` steps from the uniform start."""
    t0 = time.perf_counter()
    counts: dict[tuple[int, ...], int] = defaultdict(int)
    for d, _ in _simulate_batches(params, n, samples, seed, steps, batch):
        rows, freq = np.unique(d, axis=0, return_counts=True)
        for row, c in zip(rows, freq):
            counts[tuple(int(x) for x in row)] += int(c)
    logger.info("Simulated %d samples of d after %d step(s) in %.3f seconds.",
                samples, steps, time.perf_counter() - t0)
    return {key: c / samples for key, c in sorted(counts.items())}


def simulated_regret(
    params: ModelParams,
    n: int,
    t_max: int,
    samples: int,
    seed: int = 0,
    *,
    batch: int = 100_000,
) -> tuple[float, float]:
    """Monte Carlo Regret_N(T) over `samples` runs: (mean, standard error)."""
    regrets = np.concatenate([
        params.eta[0] - group / t_max
        for _, group in _simulate_batches(params, n, samples, seed, t_max, batch)
    ])
    se = float(regrets.std(ddof=1) / math.sqrt(len(regrets))) if len(regrets) > 1 else 0.0
    return float(regrets.mean()), se


def total_variation(a: Mapping[tuple[int, ...], Number], b: Mapping[tuple[int, ...], Number]) -> float:
    """(1/2) sum_k |a_k - b_k| over the union of supports."""
    keys = set(a) | set(b)
    return 0.5 * math.fsum(abs(float(a.get(k, 0.0)) - float(b.get(k, 0.0))) for k in keys)
