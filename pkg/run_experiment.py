"""
Entry point for the experiment command line.

Examples:
    python run_experiment.py regret --config configs/infinite_regret.env
    python run_experiment.py oracle-check --config configs/oracle_reference.env --seed 7
    python run_experiment.py sweep --config configs/beta_sweep.env --format json --workers 4
"""

from core.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
