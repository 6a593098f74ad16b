"""Run every experiment once and write one report per experiment.

    python3 scripts/run_experiments.py --out results/

Exits nonzero if any report has a failed property.
"""

import argparse
from pathlib import Path

from opseq.config import EXPERIMENTS, parse_config
from opseq.report import render_report, run_experiment

SETTINGS = {
    "lemma-fuzz": "dim = 16\nn_max = 1000",
    "sandwich": "dim = 8\nn_max = 200\nseed = 3",
    "shift-demo": "n_max = 64",
    "classify": "n_max = 60\nrate = geometric",
    "dominated-product": "n_max = 200",
    "interval-counterexample": "dim = 2\nn_max = 10000",
}


def main():
    parser = argparse.ArgumentParser(description="Run all experiments.")
    parser.add_argument("--out", type=Path, default=Path("results"))
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    failed = []
    for name in EXPERIMENTS:
        cfg = parse_config(f"experiment = {name}\n{SETTINGS[name]}")
        bundle = run_experiment(cfg)
        (args.out / f"{name}.txt").write_text(render_report(bundle), encoding="utf-8", newline="\n")
        status = "pass" if bundle.passed else "FAIL"
        print(f"{name:<24} {len(bundle.rows):>6} rows  {status}")
        if not bundle.passed:
            failed.append(name)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
