"""
core.bounds
Derived constants and closed-form regret bounds.

All logarithms are natural; lengths round up. Quantities that blow up
(N^10, m^(1/delta^2)) are compared in log space so the population-size
conditions can be reported honestly at any N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .models import DerivedBounds, ModelParams

DEFAULT_DELTA_PP_CONSTANT = 60.0
ALT_DELTA_PP_CONSTANT = 240.0


def _positive_delta(params: ModelParams) -> Optional[float]:
    d = params.delta
    return d if d > 0 else None


def _delta_pp(params: ModelParams, n: int, constant: float) -> float:
    one_minus_beta = 1.0 - params.beta
    if one_minus_beta <= 0 or params.mu <= 0:
        return math.inf
    return math.sqrt(constant * params.m * math.log(n) / (one_minus_beta * params.mu * n))


def popularity_floor(params: ModelParams) -> float:
    """zeta = mu(1-beta)/(4m)."""
    return params.mu * (1.0 - params.beta) / (4.0 * params.m)


def epoch_length(params: ModelParams, floor: Optional[float] = None) -> Optional[int]:
    """ceil(ln(1/zeta)/delta^2); None when delta = 0 or zeta = 0."""
    delta = _positive_delta(params)
    zeta = popularity_floor(params) if floor is None else floor
    if delta is None or zeta <= 0:
        return None
    if math.isinf(delta):
        return 1
    return max(1, math.ceil(math.log(1.0 / zeta) / delta ** 2))


def horizon_min(params: ModelParams) -> Optional[float]:
    """ln m / delta^2, the shortest horizon the regret theorems cover."""
    delta = _positive_delta(params)
    if delta is None:
        return None
    return math.log(params.m) / delta ** 2


def intermediate_bound(params: ModelParams, t_max: int) -> Optional[float]:
    """ln m/(delta T) + 2 delta, valid for every T >= 1 under the theorem's preconditions."""
    delta = _positive_delta(params)
    if delta is None or t_max < 1:
        return None
    return math.log(params.m) / (delta * t_max) + 2.0 * delta


def delta_prime(params: ModelParams) -> float:
    """(1-mu)(e^delta - 1)/(1 + mu*delta) computed from delta_alpha."""
    d = params.delta_alpha
    if math.isinf(d):
        return math.inf
    return (1.0 - params.mu) * math.expm1(d) / (1.0 + params.mu * d)


def derived_bounds(
    params: ModelParams,
    n: int,
    delta_pp_constant: float = DEFAULT_DELTA_PP_CONSTANT,
) -> DerivedBounds:
    """
    Compute every derived constant for (params, N). Pure: identical inputs
    give bit-identical outputs.

    delta_pp uses the configured constant (60 by default); delta_pp_alt uses
    the other published constant so reports can print both variants.
    """
    if n < 2:
        raise ValueError(f"population size must be >= 2. Got {n}")
    alt_constant = (
        ALT_DELTA_PP_CONSTANT
        if delta_pp_constant != ALT_DELTA_PP_CONSTANT
        else DEFAULT_DELTA_PP_CONSTANT
    )
    delta = params.delta
    pos = _positive_delta(params)
    one_minus_beta = 1.0 - params.beta

    if params.mu > 0:
        delta_p = math.sqrt(30.0 * params.m * math.log(n) / (params.mu * n))
    else:
        delta_p = math.inf
    if one_minus_beta > 0 and params.mu > 0:
        c = 240.0 * params.m / (one_minus_beta * params.mu)
    else:
        c = math.inf

    share = None
    if pos is not None and params.eta_gap > 0:
        share = 1.0 - 3.0 * pos / params.eta_gap

    return DerivedBounds(
        n=int(n),
        delta=delta,
        delta_pp=_delta_pp(params, n, delta_pp_constant),
        delta_pp_alt=_delta_pp(params, n, alt_constant),
        delta_pp_constant=float(delta_pp_constant),
        delta_p=delta_p,
        delta_prime=delta_prime(params),
        zeta=popularity_floor(params),
        epoch_len=epoch_length(params),
        regret_bound_inf=3.0 * pos if pos is not None else None,
        regret_bound_fin=6.0 * pos if pos is not None else None,
        share_lower_bound=share,
        c=c,
    )


# -----------------------------------------------------------------------------
# Finite-population theorem conditions (log space)
# -----------------------------------------------------------------------------
@dataclass(frozen=True, slots=True)
class Condition:
    name: str
    holds: Optional[bool]
    lhs_log: Optional[float]
    rhs_log: Optional[float]
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "holds": self.holds,
            "lhs_log": self.lhs_log,
            "rhs_log": self.rhs_log,
            "detail": self.detail,
        }


def population_conditions(
    params: ModelParams,
    n: int,
    t_max: Optional[int] = None,
    delta_pp_constant: float = DEFAULT_DELTA_PP_CONSTANT,
    floor: Optional[float] = None,
) -> list[Condition]:
    """
    The N and T conditions of the finite-population theorem, in log space.

    With floor=None the uniform-start form is used (m^(2 ln 5/delta^2) scale);
    with a floor zeta the nonuniform-start form uses (1/zeta) in place of m.
    """
    delta = _positive_delta(params)
    one_minus_beta = 1.0 - params.beta
    if delta is None or math.isinf(delta) or one_minus_beta <= 0 or params.mu <= 0 or n < 2:
        detail = "undefined at these parameters"
        names = ["population_size", "population_tail"]
        if t_max is not None:
            names.append("horizon_upper")
        return [Condition(name, False, None, None, detail) for name in names]

    b = derived_bounds(params, n, delta_pp_constant)
    ln_n = math.log(n)
    exponent = 2.0 * math.log(5.0) / delta ** 2
    if floor is None:
        size_scale = exponent * math.log(b.c * 4.0 * params.m / (params.mu * one_minus_beta))
        tail_rhs = math.log(24.0 * params.m * math.log(params.m)) - math.log(
            params.mu * one_minus_beta * delta ** 3
        )
    else:
        size_scale = math.log(b.c) + exponent * math.log(1.0 / floor)
        tail_rhs = math.log(6.0 * math.log(params.m) / (floor * delta ** 3))

    size_lhs = ln_n - math.log(ln_n)
    size_rhs = size_scale - 2.0 * math.log(b.delta_pp)
    tail_lhs = 10.0 * ln_n

    out = [
        Condition("population_size", size_lhs >= size_rhs, size_lhs, size_rhs,
                  "N/ln N >= (c 4m/(mu(1-beta)))^(2 ln 5/delta^2)/delta''^2"),
        Condition("population_tail", tail_lhs >= tail_rhs, tail_lhs, tail_rhs,
                  "N^10 >= 24 m ln m/(mu(1-beta) delta^3)"),
    ]
    if t_max is not None:
        upper_rhs = 10.0 * ln_n - math.log(params.m) - math.log(delta)
        upper_lhs = math.log(max(t_max, 1))
        out.append(Condition("horizon_upper", upper_lhs <= upper_rhs, upper_lhs, upper_rhs,
                             "T <= N^10/(m delta)"))
    return out
