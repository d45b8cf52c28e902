"""
core.cli
Command-line front end: simulate, regret, couple, sweep, oracle-check, audit.

Exit statuses:
    0  success
    1  configuration error (nothing is written)
    2  runtime error
    3  a pass/fail check failed (oracle-check, audit)

Every error is also written to stderr as one JSON line
{"error": <type>, "message": <text>, "exit": <code>}.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

import pandas as pd

from . import __version__
from .artifacts import (
    summary_frame,
    to_json,
    trace_path,
    trajectory_frame,
    write_csv,
    write_json,
    write_sidecar,
)
from .config import get_settings
from .coupling import CouplingReport, InsufficientDataError, run_coupled, scaling_fit
from .exact_oracle import (
    dump_table,
    exact_distribution,
    exact_regret,
    simulated_distribution,
    simulated_regret,
    total_variation,
)
from .experiment_config import EXPERIMENTS, FORMATS, ConfigError, ExperimentConfig, load_config
from .log import setup_logging
from .regret import bound_table, epoch_experiment, estimate_regret
from .rewards import cell_seed, dump_trace
from .trials import AuditTask, TrialSpec, audit_trial, map_trials, simulate_trial
from .validators import validate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_CHECK_FAILED = 3

ORACLE_TV_TOLERANCE = 0.005
ORACLE_SE_MULTIPLIER = 3.0


class CheckFailed(Exception):
    """A pass/fail experiment ran to completion and failed its check."""

    def __init__(self, message: str, path: Path):
        super().__init__(message)
        self.path = path


def _emit_error(exc: BaseException, code: int) -> None:
    sys.stderr.write(to_json({"error": type(exc).__name__, "message": str(exc), "exit": code}) + "\n")


def _validation(config: ExperimentConfig, n: Optional[int] = None) -> Optional[dict]:
    if config.params is None:
        return None
    n = config.n if n is None else n
    report = validate(
        config.params, n, config.t_max, p0=config.p0, delta_pp_constant=config.delta_pp_constant,
    )
    return report.to_dict()


def _trace_path(config: ExperimentConfig) -> Optional[str]:
    return str(config.reward_trace) if config.reward_trace is not None else None


def _records(frame: pd.DataFrame) -> list[dict]:
    """Rows as JSON-ready dicts; pandas missing values become None."""
    return frame.astype(object).where(frame.notna(), None).to_dict(orient="records")


def _write(config: ExperimentConfig, frame: pd.DataFrame, result: Any, validation: Optional[dict]) -> Path:
    """Frame goes to CSV, result (JSON-ready) to JSON, by configured format."""
    path = config.output_path
    if config.fmt == "csv":
        return write_csv(path, frame, config.to_dict(), validation)
    return write_json(path, result, config.to_dict(), validation)


# -----------------------------------------------------------------------------
# Experiments
# -----------------------------------------------------------------------------
def run_simulate(config: ExperimentConfig) -> Path:
    """Trajectory dump of every trial: one row per (t, j)."""
    n = config.n if config.mode == "finite" else None
    specs = [
        TrialSpec(config.mode, config.params, n, config.t_max, config.seed, i, config.p0,
                  config.sampling, config.reward_mode, config.strict, True, config.thin,
                  _trace_path(config))
        for i in range(config.trials)
    ]
    records = map_trials(simulate_trial, specs, config.workers)
    if config.dump_trace:
        for i, record in enumerate(records):
            dump_trace(trace_path(config.output_path, i), record.r_path[1:])
    frames = []
    for i, record in enumerate(records):
        frame = trajectory_frame(record)
        if config.trials > 1:
            frame["trial"] = i
        frames.append(frame)
    frame = pd.concat(frames, ignore_index=True)
    result = [
        {
            "trial": i,
            "regret": r.regret(config.params.eta[0]),
            "degenerate_resets": r.degenerate_resets,
            "per_capita": r.per_capita,
            "reward_digest": r.reward_digest,
            "trajectory": _records(f),
        }
        for i, (r, f) in enumerate(zip(records, frames))
    ]
    return _write(config, frame, result, _validation(config))


def run_regret(config: ExperimentConfig) -> Path:
    n = config.n if config.mode == "finite" else None
    if config.epochs is not None:
        summaries = epoch_experiment(
            config.params, n, config.epochs, config.seed,
            trials=config.trials, workers=config.workers,
            sampling=config.sampling, reward_mode=config.reward_mode,
        )
        extra = [{"label": s.label} for s in summaries]
    else:
        summaries = [estimate_regret(
            config.mode, config.params, n, config.t_max, config.trials, config.seed,
            workers=config.workers, p0=config.p0, sampling=config.sampling,
            reward_mode=config.reward_mode, strict=config.strict,
            reward_trace=_trace_path(config),
        )]
        extra = None
    frame = summary_frame(summaries, extra)
    result: dict[str, Any] = {"summaries": _records(frame)}
    if n is not None:
        result["bounds"] = [r.to_dict() for r in bound_table(config.params, n, config.t_max, config.delta_pp_constant)]
    return _write(config, frame, result, _validation(config))


def _coupling_frame(report: CouplingReport) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for r in report.rows])


def run_couple(config: ExperimentConfig) -> Path:
    report = run_coupled(
        config.params, list(config.n_values), config.t_max, config.trials, config.seed,
        workers=config.workers, delta_pp_constant=config.delta_pp_constant,
        reward_mode=config.reward_mode,
    )
    return _write(config, _coupling_frame(report), report.to_dict(), _validation(config))


def run_sweep(config: ExperimentConfig) -> Path:
    """
    One row per cell of the Cartesian product of the sweep axes. Cell k runs
    with master seed cell_seed(seed, k) and carries its own validation report.
    """
    cells = config.cells()
    t0 = time.perf_counter()
    logger.info("Sweep: %d cells, mode=%s.", len(cells), config.mode)
    frames = []
    reports = []
    coupled_rows = []
    for k, cell in enumerate(cells):
        seed = cell_seed(config.seed, k)
        params = config.cell_params(cell)
        n = int(cell.get("n", config.n or 0)) or None
        t_max = int(cell.get("t", config.t_max))
        trials = int(cell.get("trials", config.trials))
        report = validate(params, n if config.mode != "infinite" else None, t_max,
                          p0=config.p0, delta_pp_constant=config.delta_pp_constant)
        reports.append(report.to_dict())
        labels = {
            "cell": k,
            "cell_seed": seed,
            **{f"sweep_{name}": v for name, v in cell.items()},
            "violations": ";".join(report.violations),
        }

        if config.mode == "coupled":
            coupled = run_coupled(
                params, [n], t_max, trials, seed, workers=config.workers,
                delta_pp_constant=config.delta_pp_constant, reward_mode=config.reward_mode,
            )
            row = coupled.rows_at(t_max)[0]
            coupled_rows.append(row)
            frames.append(pd.DataFrame([{**labels, **row.to_dict()}]))
        else:
            summary = estimate_regret(
                config.mode, params, n if config.mode == "finite" else None, t_max, trials, seed,
                workers=config.workers, p0=config.p0, sampling=config.sampling,
                reward_mode=config.reward_mode, strict=config.strict,
            )
            frames.append(summary_frame([summary], [labels]))

    frame = pd.concat(frames, ignore_index=True)
    records = _records(frame)
    for record, report in zip(records, reports):
        record["validation"] = report
    result: dict[str, Any] = {"cells": records}
    swept = [name for name, _ in config.sweep]
    if config.mode == "coupled" and swept == ["n"]:
        combined = CouplingReport(config.params, sorted({r.n for r in coupled_rows}), config.t_max,
                                  config.trials, config.seed, config.delta_pp_constant, coupled_rows)
        try:
            result["scaling_fit"] = scaling_fit(combined).to_dict()
        except InsufficientDataError as e:
            logger.warning("Sweep scaling fit skipped: %s", e)
    logger.info("Sweep finished in %.3f seconds.", time.perf_counter() - t0)
    return _write(config, frame, result, _validation(config))


def run_oracle_check(config: ExperimentConfig) -> Path:
    """
    Exact one-step distribution against `trials` simulated samples (TV
    tolerance 0.005), and exact Regret_N(t) against its Monte Carlo
    estimate (within 3 standard errors).
    """
    params, n = config.params, config.n
    exact = exact_distribution(params, n, 1)
    simulated = simulated_distribution(params, n, config.trials, config.seed)
    tv = total_variation(exact.probs, simulated)

    regret_exact = float(exact_regret(params, n, config.t_max))
    regret_mean, regret_se = simulated_regret(params, n, config.t_max, config.trials, config.seed)
    regret_gap = abs(regret_mean - regret_exact)

    tv_ok = tv < ORACLE_TV_TOLERANCE
    regret_ok = regret_gap <= ORACLE_SE_MULTIPLIER * regret_se + 1e-12
    frame = dump_table(exact)
    frame["simulated"] = [simulated.get(d, 0.0) for d in sorted(exact.probs)]
    result = {
        "total_variation": tv,
        "tv_tolerance": ORACLE_TV_TOLERANCE,
        "exact_regret": regret_exact,
        "simulated_regret": regret_mean,
        "simulated_regret_se": regret_se,
        "passed": tv_ok and regret_ok,
        "table": _records(frame),
    }
    path = _write(config, frame, result, _validation(config))
    logger.info("Oracle check: TV=%.6f, regret exact=%.6f sim=%.6f +/- %.6f.",
                tv, regret_exact, regret_mean, regret_se)
    if not (tv_ok and regret_ok):
        raise CheckFailed(
            f"oracle check failed: TV={tv:.6f} (tolerance {ORACLE_TV_TOLERANCE}), "
            f"regret gap {regret_gap:.6f} vs {ORACLE_SE_MULTIPLIER} SE = {ORACLE_SE_MULTIPLIER * regret_se:.6f}.",
            path,
        )
    return path


def run_audit(config: ExperimentConfig) -> Path:
    """Potential audit of `trials` infinite trajectories of length t."""
    tasks = [
        AuditTask(config.params, config.t_max, config.seed, i, config.reward_mode)
        for i in range(config.trials)
    ]
    rows = map_trials(audit_trial, tasks, config.workers)
    frame = pd.DataFrame(rows)
    failing = [r["trial"] for r in rows if not r["passed"]]
    result = {"trajectories": rows, "violating_trials": failing, "passed": not failing}
    path = _write(config, frame, result, _validation(config))
    if failing:
        raise CheckFailed(f"potential audit: {len(failing)} trajectories violate the bounds (first: trial {failing[0]}).", path)
    return path


RUNNERS = {
    "simulate": run_simulate,
    "regret": run_regret,
    "couple": run_couple,
    "sweep": run_sweep,
    "oracle-check": run_oracle_check,
    "audit": run_audit,
}


def run(config: ExperimentConfig) -> int:
    """Dispatch one experiment; write its artifact and sidecar; return the exit status."""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    status = EXIT_OK
    try:
        path = RUNNERS[config.experiment](config)
    except CheckFailed as e:
        path = e.path
        status = EXIT_CHECK_FAILED
        logger.warning("%s", e)
        _emit_error(e, status)
    except Exception as e:
        logger.exception("Experiment %s failed.", config.experiment)
        _emit_error(e, EXIT_RUNTIME)
        return EXIT_RUNTIME

    elapsed = time.perf_counter() - t0
    write_sidecar(path, {
        "started_at": started.isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": elapsed,
        "workers": config.workers,
        "version": __version__,
        "exit": status,
    })
    logger.info("Experiment %s finished with status %d in %.3f seconds -> %s",
                config.experiment, status, elapsed, path)
    return status


# -----------------------------------------------------------------------------
# Argument parsing
# -----------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value experiment file")
    common.add_argument("--seed", type=int, help="master seed (overrides the file)")
    common.add_argument("--out", type=Path, help="artifact path")
    common.add_argument("--format", choices=FORMATS, help="artifact format")
    common.add_argument("--workers", type=int, help="worker processes for trials")

    parser = argparse.ArgumentParser(
        prog="run_experiment",
        description="Social-learning simulations, regret estimates and verification checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings()
        setup_logging()
        overrides = {
            "experiment": args.experiment,
            "seed": args.seed,
            "out": args.out,
            "format": args.format,
            "workers": args.workers,
        }
        config = load_config(args.config, overrides, default_workers=settings.workers)
    except (ConfigError, ValueError) as e:
        logger.error("Configuration error: %s", e)
        _emit_error(e, EXIT_CONFIG)
        return EXIT_CONFIG
    return run(config)
