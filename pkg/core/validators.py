"""
core.validators
Validation utilities for model parameters.

Structural problems (qualities outside [0, 1], mu outside (0, 1], m < 2, ...)
raise ValueError. The preconditions of the regret theorems never raise: they
are collected in a ValidationReport that is attached to every output, so the
harness can explore regimes outside the theorems and show where bounds fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bounds import (
    DEFAULT_DELTA_PP_CONSTANT,
    horizon_min,
    popularity_floor,
    population_conditions,
)
from .models import ModelParams

BETA_MAX = math.e / (math.e + 1.0)

DELTA_ZERO_WARNING = "delta=0: all regret bounds vacuous"
ALPHA_ZERO_WARNING = "alpha<=0: degenerate-adoption risk (a step can end with no adopters)"


# -----------------------------------------------------------------------------
# Basic field validators
# -----------------------------------------------------------------------------
def validate_eta(eta: Sequence[float], m: int) -> tuple[float, ...]:
    """
    Validate that eta has m entries in [0, 1], sorted descending.
    """
    eta = tuple(float(x) for x in eta)
    if len(eta) != m:
        raise ValueError(f"eta must have m={m} entries. Got {len(eta)}.")
    for x in eta:
        if not (0.0 <= x <= 1.0):
            raise ValueError(f"eta entries must lie in [0, 1]. Got {x!r}.")
    for a, b in zip(eta, eta[1:]):
        if a < b:
            raise ValueError("eta must be sorted in descending order (eta_1 is the best option).")
    return eta


def validate_mu(mu: float) -> float:
    """
    Validate that the exploration probability lies in (0, 1].
    """
    mu = float(mu)
    if not (0.0 < mu <= 1.0):
        raise ValueError(f"mu must lie in (0, 1]. Got {mu!r}.")
    return mu


def validate_adoption(beta: float, alpha: float) -> tuple[float, float]:
    """
    Validate 0 <= alpha <= beta <= 1. alpha = 0 is allowed (reported as a warning).
    """
    beta, alpha = float(beta), float(alpha)
    if not (0.0 <= beta <= 1.0):
        raise ValueError(f"beta must lie in [0, 1]. Got {beta!r}.")
    if alpha < 0.0:
        raise ValueError(f"alpha must be >= 0. Got {alpha!r}.")
    if alpha > beta:
        raise ValueError(f"alpha must be <= beta. Got alpha={alpha!r}, beta={beta!r}.")
    return beta, alpha


def check_structure(params: ModelParams) -> ModelParams:
    """
    Raise ValueError when params are structurally invalid; return them otherwise.
    """
    if params.m < 2:
        raise ValueError(f"m must be >= 2. Got {params.m}.")
    validate_eta(params.eta, params.m)
    validate_mu(params.mu)
    validate_adoption(params.beta, params.alpha)
    return params


def validate_p0(p0: Sequence[float], m: int) -> tuple[float, ...]:
    """
    Validate an initial distribution: m non-negative entries summing to 1.
    """
    p0 = tuple(float(x) for x in p0)
    if len(p0) != m:
        raise ValueError(f"p0 must have m={m} entries. Got {len(p0)}.")
    if any(x < 0 for x in p0):
        raise ValueError("p0 entries must be >= 0.")
    if abs(sum(p0) - 1.0) > 1e-9:
        raise ValueError(f"p0 must sum to 1. Got {sum(p0)!r}.")
    return p0


# -----------------------------------------------------------------------------
# Precondition report
# -----------------------------------------------------------------------------
@dataclass(frozen=True, slots=True)
class Check:
    name: str
    holds: Optional[bool]
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "holds": self.holds, "detail": self.detail}


@dataclass(slots=True)
class ValidationReport:
    """Per-precondition outcome plus free-form warnings."""
    checks: list[Check] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def violations(self) -> list[str]:
        return [c.name for c in self.checks if c.holds is False]

    @property
    def all_hold(self) -> bool:
        return not self.violations

    def get(self, name: str) -> Optional[Check]:
        for c in self.checks:
            if c.name == name:
                return c
        return None

    def to_dict(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "warnings": list(self.warnings),
            "violations": self.violations,
        }


def validate(
    params: ModelParams,
    n: Optional[int] = None,
    t_max: Optional[int] = None,
    *,
    p0: Optional[Sequence[float]] = None,
    delta_pp_constant: float = DEFAULT_DELTA_PP_CONSTANT,
) -> ValidationReport:
    """
    Check structural validity (raising ValueError) and report, per theorem
    precondition, whether it holds.
    """
    check_structure(params)
    report = ValidationReport()
    delta = params.delta

    report.checks.append(Check(
        "beta_range",
        0.5 < params.beta <= BETA_MAX,
        f"1/2 < beta <= e/(e+1) ({BETA_MAX:.6f}); beta={params.beta}",
    ))
    report.checks.append(Check(
        "mu_vs_delta",
        delta > 0 and 6.0 * params.mu <= delta ** 2,
        f"6 mu = {6.0 * params.mu:.6g} vs delta^2 = {delta ** 2:.6g}",
    ))
    report.checks.append(Check(
        "eta_gap",
        params.eta_gap > 0,
        f"eta_1 - eta_2 = {params.eta_gap:.6g}",
    ))
    report.checks.append(Check(
        "symmetric_regime",
        params.symmetric_regime,
        f"alpha = 1 - beta (alpha={params.alpha}, 1-beta={1.0 - params.beta})",
    ))

    if t_max is not None:
        hmin = horizon_min(params)
        report.checks.append(Check(
            "horizon_lower",
            hmin is not None and t_max >= hmin,
            f"T >= ln m/delta^2 = {hmin if hmin is not None else 'undefined'}; T={t_max}",
        ))

    floor = None
    if p0 is not None:
        p0 = validate_p0(p0, params.m)
        floor = popularity_floor(params)
        report.checks.append(Check(
            "p0_floor",
            min(p0) >= floor,
            f"min p0 = {min(p0):.6g} vs zeta = {floor:.6g}",
        ))

    if n is not None:
        for cond in population_conditions(params, n, t_max, delta_pp_constant, floor):
            report.checks.append(Check(cond.name, cond.holds, cond.detail))

    if delta == 0:
        report.warnings.append(DELTA_ZERO_WARNING)
    if params.alpha <= 0:
        report.warnings.append(ALPHA_ZERO_WARNING)
    return report
