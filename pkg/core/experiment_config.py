"""
core.experiment_config
Experiment files: flat key=value text, comma-separated lists.

Example:
    experiment=regret
    mode=infinite
    eta=0.95,0.05,0.05
    mu=0.0067
    beta=0.55
    t=58
    trials=2000

Files are parsed with python-dotenv's dotenv_values, normalized, then
validated by _build_config(). Anything malformed raises ConfigError.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import dotenv_values

from . import validators as V
from .bounds import DEFAULT_DELTA_PP_CONSTANT
from .exact_oracle import MAX_M, MAX_N, MAX_T
from .finite_dynamics import SAMPLING_MODES
from .models import ModelParams
from .rewards import REWARD_MODES, RewardStream

logger = logging.getLogger(__name__)

EXPERIMENTS = ("simulate", "regret", "couple", "sweep", "oracle-check", "audit")
FORMATS = ("csv", "json")

# Modes each experiment accepts; the first one is the default.
EXPERIMENT_MODES: dict[str, tuple[str, ...]] = {
    "simulate": ("finite", "infinite"),
    "regret": ("finite", "infinite"),
    "couple": ("coupled",),
    "sweep": ("finite", "infinite", "coupled"),
    "oracle-check": ("oracle",),
    "audit": ("infinite",),
}

DEFAULT_TRIALS = {
    "simulate": 1,
    "regret": 100,
    "couple": 100,
    "sweep": 100,
    "oracle-check": 1_000_000,
    "audit": 1000,
}

SWEEP_AXES = ("mu", "beta", "alpha", "n", "t", "trials")
PARAM_AXES = ("mu", "beta", "alpha")
MAX_SWEEP_AXES = 2
MAX_SWEEP_CELLS = 10_000

KNOWN_KEYS = frozenset({
    "m", "eta", "mu", "beta", "alpha", "n", "t", "trials", "seed", "mode",
    "experiment", "out", "format", "workers", "delta_pp_constant",
    "reward_mode", "sampling", "p0", "epochs", "strict", "random_params",
    "thin", "sweep_axes", "reward_trace", "dump_trace",
})


class ConfigError(ValueError):
    """Missing, unknown or malformed experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    mode: str
    params: Optional[ModelParams]
    n_values: tuple[int, ...] = ()
    t_max: int = 100
    trials: int = 1
    seed: int = 0
    out: Optional[Path] = None
    fmt: str = "csv"
    workers: int = 1
    delta_pp_constant: float = DEFAULT_DELTA_PP_CONSTANT
    reward_mode: str = "independent"
    sampling: str = "count"
    p0: Optional[tuple[float, ...]] = None
    epochs: Optional[int] = None
    strict: bool = False
    random_params: bool = False
    thin: int = 1
    sweep: tuple[tuple[str, tuple[float, ...]], ...] = ()
    reward_trace: Optional[Path] = None
    dump_trace: bool = False

    @property
    def n(self) -> Optional[int]:
        return self.n_values[0] if self.n_values else None

    @property
    def output_path(self) -> Path:
        if self.out is not None:
            return self.out
        return Path("results") / f"{self.experiment}.{self.fmt}"

    @property
    def n_cells(self) -> int:
        cells = 1
        for _, values in self.sweep:
            cells *= len(values)
        return cells

    def cells(self) -> list[dict[str, float]]:
        """Cartesian product of the sweep axes, in file order; [{}] without a sweep."""
        if not self.sweep:
            return [{}]
        names = [name for name, _ in self.sweep]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.sweep))]

    def cell_params(self, cell: Mapping[str, float]) -> Optional[ModelParams]:
        changes = {name: value for name, value in cell.items() if name in PARAM_AXES}
        if self.params is None or not changes:
            return self.params
        return self.params.replace(**changes)

    def to_dict(self) -> dict[str, Any]:
        """
        Resolved configuration embedded in every artifact. The worker count
        is left out: it never changes results and lives in the sidecar.
        """
        return {
            "experiment": self.experiment,
            "mode": self.mode,
            "params": self.params.to_params() if self.params is not None else None,
            "n": list(self.n_values),
            "t": self.t_max,
            "trials": self.trials,
            "seed": self.seed,
            "out": str(self.output_path),
            "format": self.fmt,
            "delta_pp_constant": self.delta_pp_constant,
            "reward_mode": self.reward_mode,
            "sampling": self.sampling,
            "p0": list(self.p0) if self.p0 is not None else None,
            "epochs": self.epochs,
            "strict": self.strict,
            "random_params": self.random_params,
            "thin": self.thin,
            "sweep": {name: list(values) for name, values in self.sweep},
            "reward_trace": str(self.reward_trace) if self.reward_trace is not None else None,
            "dump_trace": self.dump_trace,
        }


# -----------------------------------------------------------------------------
# Field parsers
# -----------------------------------------------------------------------------
def _text(raw: Mapping[str, Optional[str]], key: str) -> Optional[str]:
    value = raw.get(key)
    if value is None:
        return None
    value = value.strip()
    return value or None


def _int(key: str, value: str) -> int:
    try:
        return int(float(value)) if "e" in value.lower() else int(value)
    except ValueError as e:
        raise ConfigError(f"{key} must be an integer. Got {value!r}") from e


def _float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as e:
        raise ConfigError(f"{key} must be a number. Got {value!r}") from e


def _bool(key: str, value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be true or false. Got {value!r}")


def _list(key: str, value: str, cast=float) -> tuple:
    parts = [p.strip() for p in value.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key} must be a non-empty comma-separated list.")
    if cast is int:
        return tuple(_int(key, p) for p in parts)
    return tuple(_float(key, p) for p in parts)


def _choice(key: str, value: str, allowed: tuple[str, ...]) -> str:
    if value not in allowed:
        raise ConfigError(f"{key} must be one of {allowed}. Got {value!r}")
    return value


# -----------------------------------------------------------------------------
# Build
# -----------------------------------------------------------------------------
def _sweep_axes(raw: Mapping[str, Optional[str]]) -> tuple[tuple[str, tuple[float, ...]], ...]:
    names_raw = _text(raw, "sweep_axes")
    names = [n.strip() for n in names_raw.split(",") if n.strip()] if names_raw else []
    declared = {k[len("sweep_"):] for k in raw if k.startswith("sweep_") and k != "sweep_axes"}

    if len(names) > MAX_SWEEP_AXES:
        raise ConfigError(f"at most {MAX_SWEEP_AXES} sweep axes are supported. Got {names}")
    if len(set(names)) != len(names):
        raise ConfigError(f"sweep_axes lists an axis twice: {names}")
    for name in names:
        if name not in SWEEP_AXES:
            raise ConfigError(f"sweep axis {name!r} is not a sweepable parameter {SWEEP_AXES}.")
    stray = declared - set(names)
    if stray:
        raise ConfigError(f"unknown configuration keys: {sorted('sweep_' + s for s in stray)}")

    axes = []
    cells = 1
    for name in names:
        value = _text(raw, f"sweep_{name}")
        if value is None:
            raise ConfigError(f"sweep axis {name!r} needs a sweep_{name} value list.")
        values = _list(f"sweep_{name}", value, int if name in ("n", "t", "trials") else float)
        cells *= len(values)
        axes.append((name, values))
    if cells > MAX_SWEEP_CELLS:
        raise ConfigError(f"sweep has {cells} cells; the limit is {MAX_SWEEP_CELLS}.")
    return tuple(axes)


def _build_params(raw: Mapping[str, Optional[str]]) -> ModelParams:
    missing = [k for k in ("eta", "mu", "beta") if _text(raw, k) is None]
    if missing:
        raise ConfigError(f"missing required keys: {missing}")
    eta = _list("eta", _text(raw, "eta"))
    m_raw = _text(raw, "m")
    m = _int("m", m_raw) if m_raw is not None else len(eta)
    alpha_raw = _text(raw, "alpha")
    params = ModelParams(
        m=m,
        eta=eta,
        mu=_float("mu", _text(raw, "mu")),
        beta=_float("beta", _text(raw, "beta")),
        alpha=_float("alpha", alpha_raw) if alpha_raw is not None else None,
    )
    try:
        V.check_structure(params)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return params


def _build_config(raw: Mapping[str, Optional[str]], default_workers: int = 1) -> ExperimentConfig:
    """
    Normalize and validate raw key/value pairs into an ExperimentConfig.
    """
    raw = {k.strip().lower(): v for k, v in raw.items()}
    unknown = [k for k in raw if k not in KNOWN_KEYS and not k.startswith("sweep_")]
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    experiment = _text(raw, "experiment")
    if experiment is None:
        raise ConfigError("missing required key: experiment (or pass a subcommand).")
    experiment = _choice("experiment", experiment, EXPERIMENTS)

    allowed_modes = EXPERIMENT_MODES[experiment]
    mode = _choice("mode", _text(raw, "mode") or allowed_modes[0], allowed_modes)

    random_params = _bool("random_params", _text(raw, "random_params") or "false")
    if random_params and experiment != "audit":
        raise ConfigError("random_params is only supported by the audit experiment.")
    params = None if random_params else _build_params(raw)

    sweep = _sweep_axes(raw) if experiment == "sweep" else ()
    if experiment != "sweep" and (_text(raw, "sweep_axes") or any(k.startswith("sweep_") and k != "sweep_axes" for k in raw)):
        raise ConfigError("sweep_* keys are only valid for the sweep experiment.")
    swept = {name for name, _ in sweep}

    n_raw = _text(raw, "n")
    n_values: tuple[int, ...] = _list("n", n_raw, int) if n_raw is not None else ()
    needs_n = mode in ("finite", "coupled", "oracle") and "n" not in swept
    if needs_n and not n_values:
        raise ConfigError(f"mode {mode} needs a population size n.")
    if len(n_values) > 1 and mode != "coupled":
        raise ConfigError(f"a list of population sizes is only valid in coupled mode. Got n={n_raw}")
    if any(n < 2 for n in n_values):
        raise ConfigError(f"population sizes must be >= 2. Got {list(n_values)}")

    t_default = "2" if experiment == "oracle-check" else "100"
    t_max = _int("t", _text(raw, "t") or t_default)
    trials = _int("trials", _text(raw, "trials") or str(DEFAULT_TRIALS[experiment]))
    if t_max < 1 or trials < 1:
        raise ConfigError(f"t and trials must be >= 1. Got t={t_max}, trials={trials}")

    if experiment == "oracle-check":
        if n_values[0] > MAX_N or params.m > MAX_M or t_max > MAX_T:
            raise ConfigError(
                f"oracle-check is limited to N <= {MAX_N}, m <= {MAX_M}, t <= {MAX_T}. "
                f"Got N={n_values[0]}, m={params.m}, t={t_max}"
            )

    seed = _int("seed", _text(raw, "seed") or "0")
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer. Got {seed}")

    workers = _int("workers", _text(raw, "workers") or str(default_workers))
    if workers < 1:
        raise ConfigError(f"workers must be >= 1. Got {workers}")

    p0 = None
    p0_raw = _text(raw, "p0")
    if p0_raw is not None:
        if params is None:
            raise ConfigError("p0 cannot be combined with random_params.")
        try:
            p0 = V.validate_p0(_list("p0", p0_raw), params.m)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    epochs_raw = _text(raw, "epochs")
    epochs = _int("epochs", epochs_raw) if epochs_raw is not None else None
    if epochs is not None and (epochs < 1 or mode != "finite"):
        raise ConfigError("epochs must be >= 1 and needs mode=finite.")

    thin = _int("thin", _text(raw, "thin") or "1")
    if thin < 1:
        raise ConfigError(f"thin must be >= 1. Got {thin}")

    reward_trace = None
    trace_raw = _text(raw, "reward_trace")
    if trace_raw is not None:
        if experiment not in ("simulate", "regret") or epochs is not None:
            raise ConfigError("reward_trace is only supported by simulate and regret (without epochs).")
        reward_trace = Path(trace_raw)
        try:
            stream = RewardStream.from_trace(reward_trace)
        except (OSError, ValueError) as e:
            raise ConfigError(f"reward_trace {trace_raw!r} cannot be read: {e}") from e
        steps, width = stream.trace.shape
        if width != params.m or steps < t_max:
            raise ConfigError(
                f"reward_trace {trace_raw!r} holds {steps} steps of {width} options; "
                f"need t={t_max} steps of m={params.m}."
            )

    dump_trace = _bool("dump_trace", _text(raw, "dump_trace") or "false")
    if dump_trace and (experiment != "simulate" or thin != 1):
        raise ConfigError("dump_trace needs experiment=simulate and thin=1.")

    out_raw = _text(raw, "out")
    config = ExperimentConfig(
        experiment=experiment,
        mode=mode,
        params=params,
        n_values=n_values,
        t_max=t_max,
        trials=trials,
        seed=seed,
        out=Path(out_raw) if out_raw else None,
        fmt=_choice("format", _text(raw, "format") or "csv", FORMATS),
        workers=workers,
        delta_pp_constant=_float("delta_pp_constant", _text(raw, "delta_pp_constant") or str(DEFAULT_DELTA_PP_CONSTANT)),
        reward_mode=_choice("reward_mode", _text(raw, "reward_mode") or "independent", REWARD_MODES),
        sampling=_choice("sampling", _text(raw, "sampling") or "count", SAMPLING_MODES),
        p0=p0,
        epochs=epochs,
        strict=_bool("strict", _text(raw, "strict") or "false"),
        random_params=random_params,
        thin=thin,
        sweep=sweep,
        reward_trace=reward_trace,
        dump_trace=dump_trace,
    )
    if config.delta_pp_constant <= 0:
        raise ConfigError(f"delta_pp_constant must be > 0. Got {config.delta_pp_constant}")
    _check_sweep_cells(config)
    return config


def _check_sweep_cells(config: ExperimentConfig) -> None:
    """Every cell must be a runnable experiment on its own; the first bad one is reported."""
    for k, cell in enumerate(config.cells()):
        if not cell:
            continue
        if cell.get("n", 2) < 2 or cell.get("t", 1) < 1 or cell.get("trials", 1) < 1:
            raise ConfigError(f"sweep cell {k} {cell}: n must be >= 2, t and trials >= 1.")
        try:
            params = config.cell_params(cell)
            if params is not None:
                V.check_structure(params)
        except ValueError as e:
            raise ConfigError(f"sweep cell {k} {cell}: {e}") from e


def read_config_file(path: Path | str) -> dict[str, Optional[str]]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return dict(dotenv_values(path))


def load_config(
    path: Optional[Path | str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    default_workers: int = 1,
) -> ExperimentConfig:
    """
    Read `path` (if any), apply non-None overrides (CLI flags win over the
    file) and build the config.
    """
    raw: dict[str, Optional[str]] = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = str(value)
    config = _build_config(raw, default_workers)
    logger.info("Loaded %s config from '%s' (mode=%s, seed=%d).",
                config.experiment, path, config.mode, config.seed)
    return config
