"""
core.artifacts
Output files: atomic writes, versioned CSV/JSON artifacts and the
timestamp sidecar.

Artifact bodies depend only on the resolved config, so reruns with the same
config are bit-identical; wall-clock data lives in <target>.meta.json.
"""

from __future__ import annotations

import io
import json
import logging
import os
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__

logger = logging.getLogger(__name__)

# -----------------------------------------------------------------------------
# Schema versioning for CSV artifacts
# -----------------------------------------------------------------------------
SCHEMA_VERSION: int = 1

TRAJECTORY_COLUMNS = ["t", "j", "S_j", "D_j", "Q_j", "R_j", "group_reward"]
SUMMARY_COLUMNS = [
    "process", "m", "n", "mu", "beta", "T", "trials", "regret_mean", "regret_se",
    "bound", "bound_name", "leader_share_mean", "floor_violations", "seed",
    "per_capita_mean",
]


class SchemaError(ValueError):
    """Raised when an artifact declares a schema this version cannot read."""


def _json_default(obj: Any) -> Any:
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def to_json(obj: Any) -> str:
    """Canonical JSON: sorted keys, no whitespace variation."""
    return json.dumps(obj, sort_keys=True, default=_json_default, separators=(",", ":"))


def atomic_write_text(path: Path, text: str) -> Path:
    """
    Write text to <path>.tmp, fsync, then move it into place.
    An interrupted write never leaves a partial file at `path`.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
    return path


def write_csv(
    path: Path,
    frame: pd.DataFrame,
    config: Mapping[str, Any],
    validation: Optional[Mapping[str, Any]] = None,
) -> Path:
    """
    Versioned CSV: '# schema=1', '# version=...', '# config=<json>',
    '# validation=<json>' when a report is given, then the body.
    """
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA_VERSION}\n")
    buf.write(f"# version={__version__}\n")
    buf.write(f"# config={to_json(dict(config))}\n")
    if validation is not None:
        buf.write(f"# validation={to_json(dict(validation))}\n")
    frame.to_csv(buf, index=False, lineterminator="\n")
    out = atomic_write_text(path, buf.getvalue())
    logger.info("Wrote CSV artifact '%s' (%d rows).", out, len(frame))
    return out


def read_csv(path: Path) -> tuple[dict[str, str], pd.DataFrame]:
    """
    Read a versioned CSV artifact. Returns (header fields, body).
    Rejects missing or unknown schema versions.
    """
    header: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines(keepends=True)
    body_start = 0
    for i, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = i
            break
        key, _, value = line[1:].strip().partition("=")
        header[key.strip()] = value.strip()
    else:
        body_start = len(lines)

    schema = header.get("schema")
    if schema is None:
        raise SchemaError(f"{path}: missing '# schema=' header line.")
    if schema != str(SCHEMA_VERSION):
        raise SchemaError(
            f"{path}: schema {schema} is not supported (expected {SCHEMA_VERSION})."
        )
    frame = pd.read_csv(io.StringIO("".join(lines[body_start:])))
    return header, frame


def write_json(
    path: Path,
    result: Any,
    config: Mapping[str, Any],
    validation: Optional[Mapping[str, Any]] = None,
) -> Path:
    payload = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "config": dict(config),
        "validation": validation,
        "result": result,
    }
    out = atomic_write_text(path, to_json(payload) + "\n")
    logger.info("Wrote JSON artifact '%s'.", out)
    return out


# -----------------------------------------------------------------------------
# Sidecar with wall-clock metadata
# -----------------------------------------------------------------------------
def sidecar_path(target: Path) -> Path:
    """
    Example:
        regret.csv -> regret.csv.meta.json
    """
    target = Path(target)
    return target.with_suffix(target.suffix + ".meta.json")


def trace_path(target: Path, trial: int) -> Path:
    """
    Example:
        traj.csv, trial 2 -> traj.trial2.trace
    """
    target = Path(target)
    return target.with_name(f"{target.stem}.trial{trial}.trace")


def write_sidecar(target: Path, meta: Mapping[str, Any]) -> Optional[Path]:
    """
    Write the metadata sidecar next to an artifact.
    Failure is logged, never fatal: the artifact itself is already in place.
    """
    path = sidecar_path(target)
    try:
        return atomic_write_text(path, json.dumps(dict(meta), sort_keys=True, indent=2, default=_json_default) + "\n")
    except OSError as exc:
        logger.warning("Failed to write sidecar file '%s': %s", path, exc)
        return None


# -----------------------------------------------------------------------------
# Frames
# -----------------------------------------------------------------------------
def trajectory_frame(record) -> pd.DataFrame:
    """
    One row per (t, j): t, j, S_j, D_j, Q_j, R_j, group_reward.
    Q_j is the popularity after step t; R_j and group_reward belong to step t.
    S and D are empty for the infinite process. Row t=0 holds the start.
    """
    if record.q_path is None or record.path_steps is None:
        raise ValueError("trajectory_frame() needs a record with recorded paths.")
    steps = np.asarray(record.path_steps)
    q = np.asarray(record.q_path)
    m = q.shape[1]
    rows: list[dict[str, Any]] = []
    for k, t in enumerate(steps):
        for j in range(m):
            rows.append({
                "t": int(t),
                "j": j + 1,
                "S_j": int(record.s_path[k, j]) if record.s_path is not None and t > 0 else None,
                "D_j": int(record.d_path[k, j]) if record.d_path is not None and t > 0 else None,
                "Q_j": float(q[k, j]),
                "R_j": int(record.r_path[k, j]) if record.r_path is not None and t > 0 else None,
                "group_reward": float(record.group_rewards[t - 1]) if t > 0 else None,
            })
    frame = pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)
    return frame.astype({"S_j": "Int64", "D_j": "Int64", "R_j": "Int64"})


def summary_frame(summaries: Sequence[Any], extra: Optional[Sequence[Mapping[str, Any]]] = None) -> pd.DataFrame:
    """
    Summary rows in SUMMARY_COLUMNS order; `extra` adds per-row columns
    (sweep cell values, epoch labels) after the documented ones.
    """
    rows = []
    for i, s in enumerate(summaries):
        row = s.to_row()
        if extra is not None:
            row.update(extra[i])
        rows.append(row)
    cols = list(SUMMARY_COLUMNS)
    if extra:
        cols += [k for k in extra[0].keys() if k not in cols]
    return pd.DataFrame(rows, columns=cols)
