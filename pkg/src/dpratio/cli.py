"""Command-line interface.

Exit status: 0 on success (a PTR FAIL is a success), 1 on a domain or
numerical error, 2 on a usage or configuration error.

Every subcommand accepts ``--config FILE``, a flat JSON object whose keys are
flag names (``epsilon_grid`` or ``epsilon-grid``). Flags given on the command
line win over the file. ``--seed`` defaults to ``$DPRATIO_SEED``, else 0.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from dpratio import analysis, confidence, estimators, mechanisms, simulation
from dpratio.errors import ConfigError, DPRatioError
from dpratio.estimators import CountTable, Method
from dpratio.mechanisms import PrivacyBudget
from dpratio.numerics import RngHandle

SCHEMA_VERSION = 1
SEED_ENV = "DPRATIO_SEED"


class UsageError(Exception):
    pass


# -- value parsing (shared by flags and config entries) ----------------------


def _int(v):
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError(f"expected an integer, got {v}")
        return int(v)
    return int(v)


def _float(v):
    if isinstance(v, bool):
        raise ValueError("expected a number")
    out = float(v)
    if math.isnan(out):
        raise ValueError("NaN is not allowed")
    return out


def _str(v):
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _flag(v):
    if isinstance(v, bool):
        return v
    raise ValueError("expected true or false")


def _epsilon_grid(v):
    """'a:b:step' (inclusive), 'a,b,c', a number or a list of numbers."""
    if isinstance(v, (list, tuple)):
        return tuple(_float(e) for e in v)
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (float(v),)
    text = _str(v).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range must look like start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if not step > 0:
            raise ValueError("step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(np.round(start + i * step, 12)) for i in range(max(count, 0)))
    return tuple(float(p) for p in text.split(",") if p.strip())


def _tuples(width):
    def parse(v):
        if isinstance(v, (list, tuple)):
            rows = [tuple(_float(e) for e in row) for row in v]
        else:
            rows = [tuple(float(e) for e in chunk.split(",")) for chunk in _str(v).split(";") if chunk.strip()]
        for row in rows:
            if len(row) != width:
                raise ValueError(f"each entry needs {width} numbers, got {row}")
        return tuple(rows)

    parse.__name__ = f"tuples{width}"
    return parse


# -- option tables -----------------------------------------------------------

# (flag, type, default, required, choices, help)
_COMMON = [
    ("--seed", _int, None, False, None, f"RNG seed (default ${SEED_ENV} or 0)"),
]

_OPTIONS = {
    "estimate": [
        ("--x", _int, None, True, None, "numerator count"),
        ("--y", _int, None, True, None, "denominator count"),
        ("--nx", _int, None, True, None, "numerator group size"),
        ("--ny", _int, None, True, None, "denominator group size"),
        ("--epsilon", _float, None, True, None, "privacy parameter"),
        ("--delta", _float, 0.0, False, None, "privacy slack (smooth-sens and ptr only)"),
        ("--method", _str, "noised-counts", False, [m.value for m in Method], "estimator"),
        ("--proposal", _float, None, False, None, "proposed sensitivity bound for ptr"),
    ],
    "analyze": [
        ("--curve", _str, None, True, ["accuracy", "bias"], "which closed form to tabulate"),
        ("--x", _int, None, True, None, "numerator count"),
        ("--y", _int, None, True, None, "denominator count"),
        ("--nx", _int, None, False, None, "numerator group size (default max(150, x, y))"),
        ("--ny", _int, None, False, None, "denominator group size (default max(150, x, y))"),
        ("--alpha", _float, 0.1, False, None, "accuracy radius"),
        ("--epsilon-grid", _epsilon_grid, None, True, None, "start:stop:step or a comma list"),
        ("--method", _str, "noised-counts", False,
         ["noised-counts", "noised-log", "naive", "smooth-sens", "ptr"], "estimator for accuracy curves"),
        ("--delta", _float, None, False, None, "delta for smooth-sens and ptr (default 1/nx)"),
        ("--proposal", _float, None, False, None, "ptr proposal (default: best multiple of the true LS)"),
    ],
    "ci": [
        ("--x-tilde", _float, None, True, None, "numerator (noised) count, clamped at 1 by the caller"),
        ("--y-tilde", _float, None, True, None, "denominator (noised) count"),
        ("--nx", _int, None, True, None, "numerator group size"),
        ("--ny", _int, None, True, None, "denominator group size"),
        ("--level", _float, 0.95, False, None, "confidence level"),
        ("--method", _str, "asymptotic", False, ["classic", "asymptotic", "conservative"], "construction"),
        ("--noise-variance", _float, 0.0, False, None, "per-count noise variance (conservative)"),
        ("--noise", _str, "gaussian", False, ["gaussian", "laplace"], "noise law tag (conservative)"),
        ("--truncate", _flag, False, False, None, "clip a negative lower bound at 0"),
    ],
    "calibrate": [
        ("--epsilon", _float, None, True, None, "privacy parameter"),
        ("--delta", _float, None, True, None, "privacy slack"),
        ("--sensitivity", _float, 1.0, False, None, "L2 sensitivity"),
        ("--method", _str, "balle", False, ["dwork", "balle"], "calibration"),
    ],
    "simulate": [
        ("--experiment", _str, None, True, [k.value for k in simulation.ExperimentKind], "experiment kind"),
        ("--out", _str, None, True, None, "CSV output path ('-' for stdout)"),
        ("--workers", _int, 1, False, None, "worker processes"),
        ("--nx", _int, None, False, None, "group size of x"),
        ("--ny", _int, None, False, None, "group size of y"),
        ("--pairs", _tuples(2), None, False, None, "'a,b;c,d': counts (accuracy) or probabilities"),
        ("--epsilon-grid", _epsilon_grid, None, False, None, "start:stop:step or a comma list"),
        ("--delta", _float, None, False, None, "privacy slack"),
        ("--replications", _int, None, False, None, "Monte Carlo replicates per cell"),
        ("--level", _float, None, False, None, "CI level (coverage)"),
        ("--alpha", _float, None, False, None, "accuracy radius"),
        ("--cdf-cells", _tuples(3), None, False, None, "'mu1,mu2,b;...' (cdf)"),
        ("--calibration", _str, None, False, ["balle", "dwork"], "Gaussian calibration (coverage)"),
        ("--budget-scope", _str, None, False, ["pair", "count"],
         "whether epsilon covers both counts or each count (coverage)"),
    ],
}


def _dest(flag):
    return flag.lstrip("-").replace("-", "_")


def _build_parser():
    parser = argparse.ArgumentParser(prog="dpratio", description="Differentially private ratio statistics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, options in _OPTIONS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file of flag values")
        for flag, kind, _default, _req, choices, help_text in options + _COMMON:
            if kind is _flag:
                p.add_argument(flag, action="store_const", const=True, default=None, help=help_text)
            else:
                p.add_argument(flag, type=kind, choices=choices, default=None, help=help_text)
    return parser


def _load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _resolve(args, command):
    """Merge flags, config entries and defaults; check required inputs."""
    options = _OPTIONS[command] + _COMMON
    table = {_dest(flag): (kind, default, req, choices) for flag, kind, default, req, choices, _ in options}
    config = _load_config(args.config) if args.config else {}
    for key, raw in config.items():
        dest = key.replace("-", "_")
        if dest not in table:
            raise ConfigError(key, "unknown key")
        if getattr(args, dest) is not None:
            continue
        kind, _, _, choices = table[dest]
        try:
            value = kind(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, str(exc)) from exc
        if choices is not None and value not in choices:
            raise ConfigError(key, f"must be one of {', '.join(choices)}")
        setattr(args, dest, value)
    for dest, (_, default, req, _) in table.items():
        if getattr(args, dest) is None:
            if req:
                raise UsageError(f"--{dest.replace('_', '-')} is required")
            setattr(args, dest, default)
    if args.seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = _int(env) if env else 0
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer") from exc
    if not 0 <= args.seed < 2**64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    return args


# -- formatting --------------------------------------------------------------


def fmt(value):
    """Ten significant digits for floats, empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


def write_csv(stream, header, rows):
    stream.write(f"#schema={SCHEMA_VERSION}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def records_to_csv(records):
    out = io.StringIO()
    header = records[0].columns() if records else []
    write_csv(out, header, (r.values() for r in records))
    return out.getvalue()


# -- subcommands -------------------------------------------------------------


def cmd_estimate(args, out):
    method = Method(args.method)
    local = method in (Method.SMOOTH_SENS, Method.PTR)
    if local and not args.delta > 0:
        raise UsageError(f"--method {method.value} needs --delta in (0, 1)")
    if not local and args.delta != 0:
        raise UsageError(f"--method {method.value} is pure DP; drop --delta")
    if method is Method.PTR and args.proposal is None:
        raise UsageError("--method ptr needs --proposal")
    if method is not Method.PTR and args.proposal is not None:
        raise UsageError("--proposal only applies to --method ptr")
    t = CountTable(args.x, args.y, args.nx, args.ny)
    budget = PrivacyBudget(args.epsilon, args.delta)
    rng = RngHandle(args.seed)
    res = estimators.estimate(rng, t, budget, method, proposed=args.proposal)
    fields = [("method", method.value)]
    if method is Method.PTR:
        fields.append(("gamma_hat", res.gamma_hat))
        fields.append(("threshold", res.threshold))
        fields.append(("value", "FAIL" if res.failed else res.estimate.value))
    else:
        fields.append(("value", res.value))
        if res.x_tilde is not None:
            fields += [("x_tilde", res.x_tilde), ("y_tilde", res.y_tilde)]
    fields += [("epsilon", budget.epsilon), ("delta", budget.delta)]
    out.write(" ".join(f"{k}={fmt(v)}" for k, v in fields) + "\n")


def _analyze_table(args):
    n_default = max(150, args.x, args.y)
    return CountTable(args.x, args.y, args.nx or n_default, args.ny or n_default)


def cmd_analyze(args, out):
    if not args.epsilon_grid:
        raise UsageError("epsilon grid is empty")
    if any(not e > 0 for e in args.epsilon_grid):
        raise UsageError("epsilons must be positive")
    t = _analyze_table(args)
    rows = []
    if args.curve == "accuracy":
        header = ["epsilon", "method", "alpha", "beta", "accuracy", "proposal", "reason"]
        delta = args.delta if args.delta is not None else 1.0 / t.n_x
        for eps in args.epsilon_grid:
            proposal, beta, reason = None, None, ""
            try:
                if args.method == "ptr":
                    budget = PrivacyBudget(eps, delta)
                    if args.proposal is None:
                        proposal, beta = simulation.optimal_ptr_proposal(t, budget, args.alpha)
                    else:
                        proposal = args.proposal
                        beta = analysis.ptr_accuracy(t, budget, args.alpha, proposal).beta
                else:
                    budget = PrivacyBudget(eps, delta if args.method == "smooth-sens" else 0.0)
                    beta = analysis.closed_form_accuracy(args.method, t, budget, args.alpha).beta
            except DPRatioError as exc:
                reason = exc.code
            acc = None if beta is None else 1.0 - beta
            rows.append([eps, args.method, args.alpha, beta, acc, proposal, reason])
    else:
        header = ["epsilon", "exact", "approx", "ratio", "relative_gap", "reason"]
        for eps in args.epsilon_grid:
            budget = PrivacyBudget(eps)
            exact = approx = gap = None
            reasons = []
            try:
                exact = analysis.noised_counts_bias_exact(t, budget)
            except DPRatioError as exc:
                reasons.append(exc.code)
            try:
                approx = analysis.noised_counts_bias_approx(t, budget)
            except DPRatioError as exc:
                reasons.append(exc.code)
            if exact is not None and approx is not None:
                gap = abs(exact - approx) / abs(exact)
            rows.append([eps, exact, approx, t.ratio, gap, ";".join(reasons)])
    write_csv(out, header, rows)


def cmd_ci(args, out):
    if args.method == "classic":
        ci = confidence.classic_ci(CountTable(args.x_tilde, args.y_tilde, args.nx, args.ny), args.level)
        if args.truncate:
            ci = confidence.ConfidenceInterval(max(ci.lower, 0.0), ci.upper, ci.level, ci.method)
    else:
        variance = args.noise_variance if args.method == "conservative" else 0.0
        pp = confidence.ProportionPair(args.x_tilde, args.y_tilde, args.nx, args.ny, variance)
        if args.method == "asymptotic":
            ci = confidence.private_asymptotic_ci(pp, args.level, truncate=args.truncate)
        else:
            ci = confidence.conservative_ci(pp, args.level, noise=args.noise, truncate=args.truncate)
    write_csv(out, ["lower", "upper", "width", "level", "method"],
              [[ci.lower, ci.upper, ci.width, ci.level, ci.method.value]])


def cmd_calibrate(args, out):
    budget = PrivacyBudget(args.epsilon, args.delta)
    if args.method == "dwork":
        sigma = mechanisms.calibrate_gaussian_dwork(budget, args.sensitivity).sigma
    else:
        sigma = mechanisms.calibrate_gaussian_balle(budget, args.sensitivity).sigma
    out.write(fmt(sigma) + "\n")


_GRID_KEYS = {
    "nx": "n_x",
    "ny": "n_y",
    "pairs": "pairs",
    "epsilon_grid": "epsilons",
    "delta": "delta",
    "replications": "replications",
    "level": "level",
    "alpha": "alpha",
    "cdf_cells": "cdf_cells",
    "calibration": "gaussian_calibration",
    "budget_scope": "budget_scope",
}


def cmd_simulate(args, out):
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    overrides = {field: getattr(args, dest) for dest, field in _GRID_KEYS.items() if getattr(args, dest) is not None}
    grid = simulation.ExperimentGrid.protocol(args.experiment, seed=args.seed, **overrides)
    if args.out == "-":
        records = simulation.run_experiment(grid, args.workers)
        out.write(records_to_csv(records))
        return
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        records = simulation.run_experiment(grid, args.workers)
        fh.write(records_to_csv(records))


_COMMANDS = {
    "estimate": cmd_estimate,
    "analyze": cmd_analyze,
    "ci": cmd_ci,
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
}


def main(argv=None, out=None, err=None):
    """Run the CLI and return its exit status."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = _resolve(args, args.command)
        _COMMANDS[args.command](args, out)
    except (UsageError, ConfigError) as exc:
        err.write(f"usage error: {exc}\n")
        return 2
    except DPRatioError as exc:
        err.write(f"{exc.code}: {exc}\n")
        return 1
    except OSError as exc:
        err.write(f"io: {exc.strerror or exc}: {exc.filename or ''}\n")
        return 1
    return 0


def run():
    sys.exit(main())
