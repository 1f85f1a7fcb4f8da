#!/usr/bin/env python3
"""Regenerate the outage and comparison data for the four shipped examples.

Usage: python3 scripts/run_examples.py [--out results] [--workers N] [--smoke]

Examples 1 and 2 produce Monte Carlo and analytic outage curves for
M = K in {25, 50, 150, 250}; Examples 3 and 4 compare against TDMA over
the configured SNR list. ``--smoke`` swaps in the reduced comparison
configs and cuts the trial count of Examples 1 and 2 to 1000.
"""

import argparse
import sys
from pathlib import Path

from comac.cli import main as comac

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(command, config, out, workers, extra=()):
    args = [command, "--config", str(CONFIGS / f"{config}.json"), "--out", str(out),
            "--workers", str(workers)]
    for item in extra:
        args += ["--set", item]
    print(f"$ comac {' '.join(args)}", flush=True)
    code = comac(args)
    if code != 0:
        sys.exit(code)


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--smoke", action="store_true")
    return parser.parse_args()


if __name__ == "__main__":
    args = parse_args()
    out = Path(args.out)
    trials = ["experiment.n_trials=1000"] if args.smoke else []
    for name in ("example1", "example2"):
        run("simulate", name, out / name, args.workers, trials)
        run("analyze", name, out / name, args.workers)
    for name in ("example3", "example4"):
        run("compare", f"smoke_{name}" if args.smoke else name, out / name, args.workers)
