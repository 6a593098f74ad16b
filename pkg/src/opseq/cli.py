"""``opseq <experiment> --config FILE [overrides]``"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from opseq.config import EXPERIMENTS, ConfigError, parse_config
from opseq.report import render_report, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opseq", description="Run one operator-sequence verification experiment."
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--seed", type=int)
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--dim", type=int)
        p.add_argument("--tol", type=float)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, experiment=args.experiment).with_overrides(
            out=args.out, seed=args.seed, n_max=args.n_max, dim=args.dim, tol=args.tol
        )
    except (OSError, ConfigError) as exc:
        print(f"opseq: {exc}", file=sys.stderr)
        return 2
    bundle = run_experiment(cfg)
    text = render_report(bundle)
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    if not bundle.passed:
        failed = ", ".join(k for k, ok in bundle.summary.items() if not ok)
        print(f"opseq: failed properties: {failed}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
