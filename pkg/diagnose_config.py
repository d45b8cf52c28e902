from core.config import get_settings
from core.experiment_config import load_config
from core.bounds import derived_bounds
from core.regret import bound_frame, bound_table
from core.validators import validate
from pathlib import Path
import sys


# Auxiliary function to check if a directory is writable
def is_writable_dir(path: Path) -> bool:
    try:
        path.mkdir(parents=True, exist_ok=True)
        test = path / ".__w_test.tmp"
        test.write_bytes(b"ok")
        test.unlink()
        return True
    except Exception:
        return False

# Main diagnostic function
def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        s = get_settings()
    except Exception as e:
        print("Error loading settings:\n", e)
        return 1

    # Print settings snapshot
    print("\n=== SETTINGS SNAPSHOT ===")
    print(f"Log dir            : {s.log_dir}")
    print(f"  - exists?        : {s.log_dir.exists()}")
    print(f"  - writable?      : {is_writable_dir(s.log_dir)}")
    print(f"Log level          : {s.log_level}")
    print(f"Default workers    : {s.workers}")

    if not argv:
        print("\n(no experiment file given: python diagnose_config.py PATH)")
        return 0

    try:
        config = load_config(Path(argv[0]), default_workers=s.workers)
    except ValueError as e:
        print(f"\nError loading experiment file {argv[0]}:\n {e}")
        return 1

    print("\n=== EXPERIMENT CONFIG ===")
    for key, value in config.to_dict().items():
        print(f"{key:<18} : {value}")
    print(f"{'output path':<18} : {config.output_path}")
    print(f"  - dir writable?  : {is_writable_dir(config.output_path.parent)}")

    if config.params is None:
        print("\n(random parameters: no derived bounds)")
        return 0

    print("\n=== VALIDATION ===")
    report = validate(config.params, config.n, config.t_max, p0=config.p0,
                      delta_pp_constant=config.delta_pp_constant)
    for check in report.checks:
        mark = "ok " if check.holds else "NO "
        print(f"  [{mark}] {check.name:<16} {check.detail}")
    for warning in report.warnings:
        print(f"  warning: {warning}")

    # N-dependent constants only make sense for a population size
    for n in config.n_values:
        print(f"\n=== DERIVED BOUNDS (N={n}) ===")
        for key, value in derived_bounds(config.params, n, config.delta_pp_constant).to_params().items():
            print(f"{key:<18} : {value}")
        print()
        print(bound_frame(bound_table(config.params, n, config.t_max, config.delta_pp_constant)).to_string(index=False))
    return 0

if __name__ == "__main__":
    raise SystemExit(main())
