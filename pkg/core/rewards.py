"""
core.rewards
Quality-signal streams R^t shared by every process of an experiment.

Seed splitting rule (documented, stable across versions):
    trial stream  = SeedSequence(master_seed, spawn_key=(trial, purpose))
        purpose 0 -> rewards, purpose 1 -> population noise,
        purpose 2 -> randomly drawn parameters (audit)
    sweep cell    = SeedSequence(master_seed, spawn_key=(cell,)) -> one uint64
Trials are therefore independent yet reproducible, and the result of a
trial does not depend on which worker ran it.
"""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from .artifacts import atomic_write_text
from .models import ModelParams, RewardVector

logger = logging.getLogger(__name__)

PURPOSE_REWARDS = 0
PURPOSE_POPULATION = 1
PURPOSE_PARAMS = 2

REWARD_MODES = ("independent", "coupled-binary")


class StreamExhaustedError(RuntimeError):
    """Raised when a bounded stream is asked for a step past its horizon."""


def seed_sequence(master_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


def trial_rng(master_seed: int, trial: int, purpose: int) -> np.random.Generator:
    """Generator for one (trial, purpose) pair under the splitting rule."""
    return np.random.default_rng(seed_sequence(master_seed, trial, purpose))


def cell_seed(master_seed: int, cell: int) -> int:
    """Master seed of sweep cell `cell`."""
    return int(seed_sequence(master_seed, cell).generate_state(1, dtype=np.uint64)[0])


class RewardStream:
    """
    Single-owner stream of RewardVectors for one trial.

    t_max=None means unbounded. In "coupled-binary" mode (two options, one
    shared coin) exactly one of R_1, R_2 is 1 each step, R_1 with
    probability eta_1; this requires eta_1 + eta_2 = 1.
    """

    def __init__(
        self,
        seed: int,
        t_max: Optional[int] = None,
        *,
        trial: int = 0,
        mode: str = "independent",
        trace: Optional[np.ndarray] = None,
    ) -> None:
        if mode not in REWARD_MODES:
            raise ValueError(f"reward mode must be one of {REWARD_MODES}. Got {mode!r}.")
        self.seed = int(seed)
        self.trial = int(trial)
        self.mode = mode
        self.t = 0
        self._trace = trace
        if trace is not None and t_max is None:
            t_max = len(trace)
        self.t_max = t_max
        self._gen = trial_rng(self.seed, self.trial, PURPOSE_REWARDS)
        self._digest = hashlib.sha256()

    @classmethod
    def from_trace(cls, path: Path | str) -> "RewardStream":
        """Replay a stream dumped by dump_trace()."""
        rows = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([int(tok) for tok in line.split()])
        trace = np.asarray(rows, dtype=np.uint8)
        if trace.ndim != 2 or trace.size and not np.isin(trace, (0, 1)).all():
            raise ValueError(f"trace {path} must hold rows of 0/1 bits.")
        logger.info("Loaded reward trace '%s' (%d steps).", path, len(trace))
        return cls(seed=0, trace=trace)

    @property
    def trace(self) -> Optional[np.ndarray]:
        """The replayed rows, or None for a seeded stream."""
        return self._trace

    @property
    def digest(self) -> str:
        """SHA-256 of every vector emitted so far."""
        return self._digest.hexdigest()

    @property
    def exhausted(self) -> bool:
        return self.t_max is not None and self.t >= self.t_max

    def _draw(self, k: int, params: ModelParams) -> np.ndarray:
        if self._trace is not None:
            block = self._trace[self.t:self.t + k]
            if block.shape[1] != params.m:
                raise ValueError(f"trace has {block.shape[1]} options, params have m={params.m}.")
            return block.astype(np.uint8, copy=True)
        if self.mode == "coupled-binary":
            if params.m != 2 or abs(params.eta[0] + params.eta[1] - 1.0) > 1e-9:
                raise ValueError("coupled-binary rewards need m=2 and eta_1 + eta_2 = 1.")
            first = (self._gen.random(k) < params.eta[0]).astype(np.uint8)
            return np.stack([first, 1 - first], axis=1)
        return (self._gen.random((k, params.m)) < params.eta_array).astype(np.uint8)

    def next_block(self, k: int, params: ModelParams) -> np.ndarray:
        """Draw k steps at once; shape (k, m)."""
        if self.t_max is not None and self.t + k > self.t_max:
            raise StreamExhaustedError(
                f"reward stream horizon {self.t_max} reached at t={self.t} (asked for {k} more)."
            )
        block = self._draw(k, params)
        self._digest.update(block.tobytes())
        self.t += k
        return block

    def next(self, params: ModelParams) -> RewardVector:
        return self.next_block(1, params)[0]


def next_rewards(stream: RewardStream, params: ModelParams) -> RewardVector:
    """
    Entry j is 1 with probability eta_j, independently across j and t
    (independent mode). Raises StreamExhaustedError past the horizon.
    """
    return stream.next(params)


def dump_trace(path: Path | str, rewards: np.ndarray) -> Path:
    """Write one line per step, m space-separated bits."""
    rewards = np.asarray(rewards, dtype=np.uint8)
    body = "".join(" ".join(str(int(b)) for b in row) + "\n" for row in rewards)
    return atomic_write_text(Path(path), body)
