"""
Tests for core.experiment_config and core.cli (config files, exit statuses,
artifacts).

How to run:
  python -m tests.test_cli
"""

from __future__ import annotations

import contextlib
import io
import json
import os
import tempfile
from pathlib import Path

from core.artifacts import SchemaError, read_csv, sidecar_path
from core.config import refresh_settings
from core.experiment_config import ConfigError, load_config
from core import cli

_TMP = tempfile.mkdtemp(prefix="socialmwu-tests-")
os.environ["LOG_DIR"] = str(Path(_TMP) / "logs")
refresh_settings()


# ---------- Helpers ----------

def _write_config(name: str, text: str) -> Path:
    path = Path(_TMP) / name
    path.write_text(text.strip() + "\n", encoding="utf-8")
    return path


def _run(argv: list[str]) -> tuple[int, str]:
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        code = cli.main(argv)
    return code, err.getvalue()


_REGRET = """
experiment=regret
mode=infinite
eta=0.8,0.2
mu=0.05
beta=0.65
t=20
trials=10
seed=3
"""


# ---------- Tests ----------

def test_00_load_config() -> None:
    cfg = load_config(_write_config("regret.env", _REGRET))
    assert cfg.experiment == "regret" and cfg.mode == "infinite"
    assert cfg.params.m == 2 and abs(cfg.params.alpha - 0.35) < 1e-12
    assert cfg.t_max == 20 and cfg.trials == 10 and cfg.seed == 3
    assert cfg.fmt == "csv"

    over = load_config(_write_config("regret.env", _REGRET), {"seed": 99, "format": "json"})
    assert over.seed == 99 and over.fmt == "json"
    assert "workers" not in over.to_dict()
    print("[OK] Config files load; CLI overrides win.")


def test_10_config_errors() -> None:
    bad = {
        "missing_eta.env": "experiment=regret\nmode=infinite\nmu=0.05\nbeta=0.6",
        "unknown_key.env": _REGRET + "colour=blue",
        "bad_number.env": _REGRET.replace("mu=0.05", "mu=abc"),
        "bad_axis.env": _REGRET.replace("experiment=regret", "experiment=sweep") + "sweep_axes=m\nsweep_m=2,3",
        "three_axes.env": _REGRET.replace("experiment=regret", "experiment=sweep")
        + "sweep_axes=mu,beta,t\nsweep_mu=0.01\nsweep_beta=0.6\nsweep_t=5",
        "finite_without_n.env": _REGRET.replace("mode=infinite", "mode=finite"),
        "oracle_too_big.env": "experiment=oracle-check\neta=1,0\nmu=0.2\nbeta=0.75\nn=5",
    }
    for name, text in bad.items():
        raised = False
        try:
            load_config(_write_config(name, text))
        except ConfigError:
            raised = True
        assert raised, name
    print("[OK] Malformed configs raise ConfigError.")


def test_20_config_error_exit_status() -> None:
    out = Path(_TMP) / "never.csv"
    path = _write_config("missing.env", "experiment=regret\nmu=0.05\nbeta=0.6")
    code, err = _run(["regret", "--config", str(path), "--out", str(out)])
    assert code == 1
    assert not out.exists()
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "ConfigError" and payload["exit"] == 1
    print("[OK] Config errors exit 1 with a JSON error line and no artifact.")


def test_30_regret_artifact_reproducible() -> None:
    path = _write_config("regret.env", _REGRET)
    out_a = Path(_TMP) / "a.csv"
    out_b = Path(_TMP) / "b.csv"
    assert _run(["regret", "--config", str(path), "--out", str(out_a)])[0] == 0
    first = out_a.read_text(encoding="utf-8")
    assert _run(["regret", "--config", str(path), "--out", str(out_a)])[0] == 0
    assert out_a.read_text(encoding="utf-8") == first
    assert sidecar_path(out_a).exists()

    assert _run(["regret", "--config", str(path), "--out", str(out_b), "--workers", "2"])[0] == 0
    header, frame_a = read_csv(out_a)
    _, frame_b = read_csv(out_b)
    assert frame_a.equals(frame_b)
    assert header["schema"] == "1"
    assert json.loads(header["config"])["seed"] == 3
    assert frame_a.loc[0, "bound_name"] == "infinite-3delta"
    print("[OK] Reruns are bit-identical; worker count does not change results.")


def test_40_schema_guard() -> None:
    path = Path(_TMP) / "future.csv"
    path.write_text("# schema=2\na,b\n1,2\n", encoding="utf-8")
    raised = False
    try:
        read_csv(path)
    except SchemaError:
        raised = True
    assert raised
    print("[OK] Unknown schema versions are rejected.")


def test_50_simulate_and_couple() -> None:
    sim = _write_config("sim.env", """
experiment=simulate
mode=finite
eta=0.9,0.3,0.3
mu=0.025
beta=0.6
n=1000
t=10
""")
    out = Path(_TMP) / "traj.csv"
    assert _run(["simulate", "--config", str(sim), "--out", str(out)])[0] == 0
    _, frame = read_csv(out)
    assert list(frame.columns) == ["t", "j", "S_j", "D_j", "Q_j", "R_j", "group_reward"]
    assert len(frame) == 11 * 3

    couple = _write_config("couple.env", """
experiment=couple
eta=0.7,0.3
mu=0.1
beta=0.6
n=1000,10000
t=2
trials=10
format=json
""")
    out = Path(_TMP) / "couple.json"
    assert _run(["couple", "--config", str(couple), "--out", str(out)])[0] == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["schema"] == 1
    assert len(payload["result"]["per_t"]) == 2 * 3
    assert payload["validation"] is not None
    print("[OK] simulate and couple artifacts.")


def test_60_sweep() -> None:
    sweep = _write_config("sweep.env", _REGRET.replace("experiment=regret", "experiment=sweep")
                          + "sweep_axes=beta\nsweep_beta=0.6,0.7")
    out = Path(_TMP) / "sweep.csv"
    assert _run(["sweep", "--config", str(sweep), "--out", str(out)])[0] == 0
    _, frame = read_csv(out)
    assert len(frame) == 2
    assert list(frame["sweep_beta"]) == [0.6, 0.7]
    assert frame["cell_seed"].nunique() == 2
    print("[OK] Sweep writes one row per cell.")


def test_70_pass_fail_checks() -> None:
    oracle = _write_config("oracle.env", """
experiment=oracle-check
eta=1,0
mu=0.2
beta=0.75
alpha=0.25
n=3
t=2
format=json
""")
    out = Path(_TMP) / "oracle.json"
    code, _ = _run(["oracle-check", "--config", str(oracle), "--out", str(out)])
    assert code == 0
    result = json.loads(out.read_text(encoding="utf-8"))["result"]
    assert result["passed"] and result["total_variation"] < 0.005

    audit = _write_config("audit.env", "experiment=audit\nrandom_params=true\nt=50\ntrials=20")
    out = Path(_TMP) / "audit.csv"
    assert _run(["audit", "--config", str(audit), "--out", str(out)])[0] == 0
    _, frame = read_csv(out)
    assert len(frame) == 20 and frame["passed"].all()
    print("[OK] oracle-check and audit pass on valid inputs.")


def test_80_sweep_cells_are_validated() -> None:
    """A cell with alpha above beta or mu=0 is rejected before anything runs."""
    sweep = _REGRET.replace("experiment=regret", "experiment=sweep")
    bad = {
        "sweep_alpha.env": sweep + "sweep_axes=alpha\nsweep_alpha=0.5,0.9",
        "sweep_mu.env": sweep + "sweep_axes=mu\nsweep_mu=0.05,0",
        "sweep_n.env": sweep.replace("mode=infinite", "mode=finite") + "n=100\nsweep_axes=n\nsweep_n=100,1",
    }
    for name, text in bad.items():
        path = _write_config(name, text)
        raised = False
        try:
            load_config(path)
        except ConfigError as e:
            raised = True
            assert "sweep cell 1" in str(e), str(e)
        assert raised, name

        out = Path(_TMP) / f"{name}.csv"
        code, err = _run(["sweep", "--config", str(path), "--out", str(out)])
        assert code == 1, (name, err)
        assert not out.exists()
    print("[OK] Invalid sweep cells exit 1 without an artifact.")


def test_85_validation_in_every_artifact() -> None:
    path = _write_config("regret.env", _REGRET)
    out = Path(_TMP) / "validated.csv"
    assert _run(["regret", "--config", str(path), "--out", str(out)])[0] == 0
    header, _ = read_csv(out)
    report = json.loads(header["validation"])
    assert "checks" in report and "violations" in report

    sweep = _write_config("sweep_checked.env", _REGRET.replace("experiment=regret", "experiment=sweep")
                          + "sweep_axes=beta\nsweep_beta=0.6,0.7")
    out = Path(_TMP) / "sweep_checked.csv"
    assert _run(["sweep", "--config", str(sweep), "--out", str(out)])[0] == 0
    header, frame = read_csv(out)
    assert "validation" in header
    assert "violations" in frame.columns

    out = Path(_TMP) / "sweep_checked.json"
    assert _run(["sweep", "--config", str(sweep), "--out", str(out), "--format", "json"])[0] == 0
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["validation"] is not None
    cells = payload["result"]["cells"]
    assert len(cells) == 2
    for cell in cells:
        assert "checks" in cell["validation"]
        assert cell["violations"] == ";".join(cell["validation"]["violations"])
    print("[OK] CSV headers, sweep rows and sweep cells carry validation reports.")


def test_90_reward_trace_dump_and_replay() -> None:
    sim = _write_config("dump.env", _REGRET.replace("experiment=regret", "experiment=simulate")
                        .replace("trials=10", "trials=1") + "dump_trace=true")
    out = Path(_TMP) / "dumped.csv"
    assert _run(["simulate", "--config", str(sim), "--out", str(out)])[0] == 0
    trace = Path(_TMP) / "dumped.trial0.trace"
    assert trace.exists()
    assert len(trace.read_text(encoding="utf-8").splitlines()) == 20
    _, frame = read_csv(out)
    steps = frame[(frame["t"] > 0) & (frame["j"] == 1)]
    simulated_regret = 0.8 - steps["group_reward"].mean()

    replay = _write_config("replay.env", _REGRET.replace("trials=10", "trials=3") + f"reward_trace={trace}")
    cfg = load_config(replay)
    assert cfg.reward_trace == trace
    out = Path(_TMP) / "replayed.csv"
    assert _run(["regret", "--config", str(replay), "--out", str(out)])[0] == 0
    _, summary = read_csv(out)
    # the infinite process is deterministic given the rewards
    assert abs(summary.loc[0, "regret_mean"] - simulated_regret) < 1e-9
    assert summary.loc[0, "regret_se"] < 1e-12

    bad = {
        "trace_short.env": _REGRET.replace("t=20", "t=25") + f"reward_trace={trace}",
        "trace_width.env": _REGRET.replace("eta=0.8,0.2", "eta=0.8,0.2,0.2") + f"reward_trace={trace}",
        "trace_missing.env": _REGRET + f"reward_trace={Path(_TMP) / 'nope.trace'}",
        "trace_couple.env": _REGRET.replace("experiment=regret", "experiment=couple") + f"n=100\nreward_trace={trace}",
        "dump_regret.env": _REGRET + "dump_trace=true",
    }
    for name, text in bad.items():
        raised = False
        try:
            load_config(_write_config(name, text))
        except ConfigError:
            raised = True
        assert raised, name
    print("[OK] Dumped reward traces replay through the config file.")


# ---------- Runner ----------

def main() -> None:
    tests = [
        test_00_load_config,
        test_10_config_errors,
        test_20_config_error_exit_status,
        test_30_regret_artifact_reproducible,
        test_40_schema_guard,
        test_50_simulate_and_couple,
        test_60_sweep,
        test_70_pass_fail_checks,
        test_80_sweep_cells_are_validated,
        test_85_validation_in_every_artifact,
        test_90_reward_trace_dump_and_replay,
    ]
    for fn in tests:
        fn()
    print("\nAll CLI tests passed.")


if __name__ == "__main__":
    main()
