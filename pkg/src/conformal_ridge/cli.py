"""Command-line entry point: ``conformal-ridge {predict,coverage,theorem1,curves}``.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error.
Statistical checks that fail do not change the exit code; the JSON
report carries the pass/fail flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import secrets
import sys
from pathlib import Path

import numpy as np

from . import asymptotics, bayes, conformal
from .dataset import Dataset
from .errors import DomainError
from .linalg import RidgeConfig
from .simulation import (
    GenerativeSpec,
    ObjectLaw,
    WeightLaw,
    coverage_experiment,
    endpoint_diff_experiment,
)

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3


class ConfigError(Exception):
    pass


class InputError(Exception):
    pass


def _fmt(v: float) -> str:
    # repr is the shortest string that round-trips; infinities print as inf / -inf
    return repr(float(v))


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conformal-ridge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--a", type=float, default=1.0, help="ridge parameter (default 1)")
        p.add_argument("--sigma", type=float, default=1.0, help="noise std (default 1)")
        p.add_argument("--epsilon", type=float, default=0.1, help="significance level (default 0.1)")
        p.add_argument("--seed", type=int, default=None,
                       help="64-bit seed; drawn at random and printed when omitted")
        p.add_argument("--output", type=Path, default=None, help="output path (default stdout)")

    p = sub.add_parser("predict", help="BRR and CRR intervals for the unlabelled rows of a CSV")
    common(p)
    p.add_argument("--input", type=Path, required=True,
                   help="CSV with columns x1..xp,y; rows with empty y are predicted")
    p.add_argument("--grid-min", type=float, default=None)
    p.add_argument("--grid-max", type=float, default=None)
    p.add_argument("--grid-steps", type=int, default=None,
                   help="grid used for CRR when the analytic predictor does not apply")

    for name, helptext in (("coverage", "Monte Carlo coverage of CRR and BRR"),
                           ("theorem1", "Monte Carlo of the BRR/CRR endpoint differences")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--n", type=int, default=200 if name == "coverage" else 2000)
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--p", type=int, default=1, help="number of attributes")
        p.add_argument("--object-law", choices=[law.value for law in ObjectLaw],
                       default=ObjectLaw.STANDARD_GAUSSIAN.value)
        p.add_argument("--object-mean", type=float, nargs="+", default=None,
                       help="mean vector for GAUSSIAN_WITH_MEAN")
        p.add_argument("--fixed-w", type=float, nargs="+", default=None,
                       help="use these fixed weights instead of the Gaussian prior")
        p.add_argument("--smoothed", action="store_true",
                       help="also evaluate the smoothed conformal predictor")
        p.add_argument("--per-trial", action="store_true", help="include per-trial arrays in the JSON")
        p.add_argument("--summary-csv", type=Path, default=None,
                       help="append a one-line CSV summary to this file")
        p.add_argument("--workers", type=_positive_int, default=1)
        if name == "theorem1":
            p.add_argument("--std-tolerance", type=float, default=0.10)

    p = sub.add_parser("curves", help="limiting standard deviation curves as CSV")
    p.add_argument("--panel", choices=["left", "right"], default="left",
                   help="left: eps in [0.01, 0.99]; right: eps in (0, 0.05]")
    p.add_argument("--grid-min", type=float, default=None)
    p.add_argument("--grid-max", type=float, default=None)
    p.add_argument("--grid-steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="accepted for uniformity; unused")
    p.add_argument("--output", type=Path, default=None)
    return parser


def _resolve_seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(64)
        print(f"seed: {args.seed}", file=sys.stderr)
    elif not 0 <= args.seed < 2 ** 64:
        raise ConfigError("--seed must be a 64-bit unsigned integer")
    return args.seed


def _grid(args, required: bool):
    parts = (args.grid_min, args.grid_max, args.grid_steps)
    if all(v is None for v in parts):
        if required:
            raise ConfigError("--grid-min, --grid-max and --grid-steps are required")
        return None
    if any(v is None for v in parts):
        raise ConfigError("--grid-min, --grid-max and --grid-steps go together")
    if args.grid_steps < 2 or not args.grid_min < args.grid_max:
        raise ConfigError("grid needs --grid-steps >= 2 and --grid-min < --grid-max")
    return np.linspace(args.grid_min, args.grid_max, args.grid_steps)


def _write(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


# -- predict --------------------------------------------------------------------

def read_observations(path: Path):
    """Parse the input CSV into (training Dataset, [(line number, test object)])."""
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "y" not in header:
        raise InputError(f"{path}: header has no 'y' column")
    p = len(header) - 1
    feature_names = [f"x{j}" for j in range(1, p + 1)]
    if p < 1 or sorted(h for h in header if h != "y") != sorted(feature_names):
        raise InputError(f"{path}: header must be x1..xp and y, got {','.join(header)}")
    cols = [header.index(name) for name in feature_names]
    ycol = header.index("y")
    X, y, tests = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            x = [float(row[c]) for c in cols]
            label = row[ycol].strip()
            yv = float(label) if label else None
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in x) or (yv is not None and not math.isfinite(yv)):
            raise InputError(f"{path}:{lineno}: non-finite value")
        if yv is None:
            tests.append((lineno, x))
        else:
            X.append(x)
            y.append(yv)
    if not X:
        raise InputError(f"{path}: no training rows (rows with a label)")
    return Dataset(np.array(X), np.array(y)), tests


PREDICT_COLUMNS = ("row", "brr_lower", "brr_upper", "crr_lower", "crr_upper", "crr_fallback", "error")


def predict_rows(train: Dataset, tests, cfg: RidgeConfig, grid=None) -> list[dict]:
    out = []
    for lineno, x in tests:
        rec = {"row": lineno, "brr_lower": "", "brr_upper": "", "crr_lower": "",
               "crr_upper": "", "crr_fallback": "", "error": ""}
        errors = []
        try:
            brr = bayes.brr_predict(train, x, cfg)
            rec["brr_lower"], rec["brr_upper"] = _fmt(brr.lower), _fmt(brr.upper)
        except ValueError as exc:
            errors.append(f"BRR {type(exc).__name__}: {exc}")
        try:
            crr = conformal.crr_predict(train, x, cfg.a, cfg.epsilon, grid=grid)
            rec["crr_lower"], rec["crr_upper"] = _fmt(crr.lower), _fmt(crr.upper)
            rec["crr_fallback"] = str(crr.fallback).lower()
        except ValueError as exc:
            errors.append(f"CRR {type(exc).__name__}: {exc}")
        rec["error"] = "; ".join(errors)
        out.append(rec)
    return out


def cmd_predict(args) -> int:
    _resolve_seed(args)
    cfg = _ridge_config(args)
    grid = _grid(args, required=False)
    if not args.input.exists():
        raise ConfigError(f"input file not found: {args.input}")
    train, tests = read_observations(args.input)
    rows = predict_rows(train, tests, cfg, grid)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=PREDICT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _write(buf.getvalue(), args.output)
    return EXIT_OK


def _ridge_config(args) -> RidgeConfig:
    try:
        return RidgeConfig(args.a, args.sigma, args.epsilon)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- simulations ------------------------------------------------------------------

def _generative_spec(args) -> GenerativeSpec:
    law = ObjectLaw(args.object_law)
    try:
        if args.fixed_w is not None:
            weights = dict(weight_law=WeightLaw.FIXED, w=tuple(args.fixed_w))
        else:
            # w ~ N(0, sigma^2/a I) matches the BRR prior when a > 0
            weights = dict(weight_law=WeightLaw.GAUSSIAN_PRIOR,
                           prior_a=args.a if args.a > 0 else 1.0)
        return GenerativeSpec(
            p=args.p, object_law=law, sigma=args.sigma, seed=args.seed,
            mean=tuple(args.object_mean) if args.object_mean is not None else None,
            **weights,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _validate_sim(args) -> None:
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    if args.n < 2:
        raise ConfigError("--n must be >= 2")


def _emit_report(report, args) -> int:
    _write(report.to_json(include_trials=args.per_trial) + "\n", args.output)
    if args.summary_csv is not None:
        try:
            new = not args.summary_csv.exists()
            with args.summary_csv.open("a", encoding="utf-8") as fh:
                if new:
                    fh.write(report.csv_header() + "\n")
                fh.write(report.to_csv_line() + "\n")
        except OSError as exc:
            raise InputError(f"cannot write {args.summary_csv}: {exc}") from exc
    return EXIT_OK


def cmd_coverage(args) -> int:
    _resolve_seed(args)
    _validate_sim(args)
    cfg = _ridge_config(args)
    spec = _generative_spec(args)
    report = coverage_experiment(spec, args.n, cfg.a, cfg.epsilon, args.trials,
                                 smoothed=args.smoothed, workers=args.workers)
    return _emit_report(report, args)


def cmd_theorem1(args) -> int:
    _resolve_seed(args)
    _validate_sim(args)
    if args.trials < 8:
        raise ConfigError("theorem1 needs --trials >= 8")
    cfg = _ridge_config(args)
    spec = _generative_spec(args)
    try:
        report = endpoint_diff_experiment(spec, args.n, cfg.a, cfg.epsilon, args.trials,
                                          std_tolerance=args.std_tolerance, workers=args.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return _emit_report(report, args)


def cmd_curves(args) -> int:
    _resolve_seed(args)
    grid = _grid(args, required=False)
    if grid is None:
        grid = asymptotics.left_panel_grid() if args.panel == "left" else asymptotics.right_panel_grid()
    try:
        table = asymptotics.curve_table(grid)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    _write(table.to_csv(), args.output)
    return EXIT_OK


COMMANDS = {
    "predict": cmd_predict,
    "coverage": cmd_coverage,
    "theorem1": cmd_theorem1,
    "curves": cmd_curves,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
