"""Command-line interface: ``comac simulate|analyze|compare|validate``.

Exit codes: 0 success, 1 runtime failure (or failed validation checks),
2 configuration errors. CSV floats use ``repr`` so they parse back to the
identical binary value.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_run_config
from .experiments import (ExperimentSpec, OutageCurve, analytic_curve, dominance_violations,
                          run_comparison, run_outage)
from .model import ConfigurationError
from .validation import ValidationConfig, run_validation_suite

log = logging.getLogger("comac")

OUTAGE_HEADER = ["epsilon", "outage", "ci_lo", "ci_hi", "analytic", "n_trials", "seed"]
ANALYTIC_HEADER = ["epsilon", "analytic", "analytic_ci_half_width", "n_samples", "seed"]
SUMMARY_HEADER = ["snr_db", "sigma_N_sq", "dominance", "n_violations", "comac_file", "tdma_file"]


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_outage_csv(path: Path, curve: OutageCurve) -> None:
    analytic = curve.analytic if curve.analytic is not None else [None] * len(curve.epsilon)
    rows = [(e, o, lo, hi, a, curve.n_trials, curve.seed)
            for e, o, lo, hi, a in zip(curve.epsilon, curve.outage, curve.ci_lo, curve.ci_hi, analytic)]
    _write_csv(path, OUTAGE_HEADER, rows)


def read_outage_csv(path) -> dict[str, list]:
    """Parse an outage CSV back into columns (empty cells become None)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [None if r[k] == "" else float(r[k]) for r in rows] for k in rows[0]} if rows else {}


def _suffix(run: RunConfig, spec: ExperimentSpec) -> str:
    return "" if len(run.specs) == 1 else f"_K{spec.network.K}_M{spec.network.M}"


def _snr_tag(snr: float) -> str:
    return f"{snr:g}".replace("-", "m")


def cmd_simulate(run: RunConfig, out: Path, workers: int) -> int:
    for spec in run.specs:
        curve = run_outage(spec, workers)
        path = out / f"outage_{run.name}{_suffix(run, spec)}.csv"
        write_outage_csv(path, curve)
        print(f"wrote {path}")
    return 0


def cmd_analyze(run: RunConfig, out: Path, workers: int) -> int:
    for spec in run.specs:
        if spec.scheme == "tdma":
            raise ConfigurationError("experiment.scheme: analyze has no analytic curve for tdma")
        value, half = analytic_curve(spec)
        rows = [(e, v, h, spec.analytic_samples, spec.network.seed)
                for e, v, h in zip(spec.epsilon_grid, value, half)]
        path = out / f"analytic_{run.name}{_suffix(run, spec)}.csv"
        _write_csv(path, ANALYTIC_HEADER, rows)
        print(f"wrote {path}")
    return 0


def cmd_compare(run: RunConfig, out: Path, workers: int) -> int:
    if run.snr_db_list is None or run.tdma is None:
        raise ConfigurationError("experiment.snr_db_list: compare needs snr_db_list and a tdma section")
    for spec in run.specs:
        comac = spec.replace(scheme="comac")
        tdma = spec.replace(scheme="tdma")
        points = run_comparison(comac, tdma, run.snr_db_list, workers)
        tag = f"{run.name}{_suffix(run, spec)}"
        summary = []
        for p in points:
            files = {}
            for scheme, curve in (("comac", p.comac), ("tdma", p.tdma)):
                path = out / f"compare_{tag}_snr{_snr_tag(p.snr_db)}_{scheme}.csv"
                write_outage_csv(path, curve)
                files[scheme] = path.name
            n_viol = len(dominance_violations(p.comac, p.tdma))
            summary.append((p.snr_db, p.sigma_N_sq, n_viol == 0, n_viol, files["comac"], files["tdma"]))
            print(f"SNR_f={p.snr_db:g} dB dominance={'true' if n_viol == 0 else 'false'}"
                  f" violations={n_viol}")
        path = out / f"summary_{tag}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            for row in summary:
                w.writerow([fmt(v) for v in row[:4]] + list(row[4:]))
        print(f"wrote {path}")
    return 0


def cmd_validate(run: RunConfig, out: Path, workers: int) -> int:
    fn = run.specs[0].function
    s_prime = fn.s_prime if fn.s_prime is not None else min(0.5, run.specs[0].network.readings.x_min)
    ok = True
    reports = []
    for spec in run.specs:
        net = spec.network
        vc = ValidationConfig(net, net.readings.x_min, net.readings.x_max, a=fn.a, s_prime=s_prime,
                              Q=run.tdma.Q if run.tdma else 10)
        report = run_validation_suite(vc)
        print(f"[K={net.K} M={net.M}]")
        print(report.text())
        reports.append({"K": net.K, "M": net.M, **report.to_dict()})
        ok &= report.passed
    path = out / f"validation_{run.name}.json"
    path.write_text(json.dumps({"passed": ok, "runs": reports}, indent=2, default=float) + "\n")
    print(f"wrote {path}")
    return 0 if ok else 1


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze,
            "compare": cmd_compare, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="comac", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", required=True, help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, default=None, help="override network.seed")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. --set experiment.n_trials=1000")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for trials")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        run = load_run_config(args.config, args.overrides, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](run, out, args.workers)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, FileNotFoundError) else 1
    except Exception as exc:  # runtime failure inside an experiment
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
