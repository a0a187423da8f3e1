"""
Command-line front end for the negative binomial approximation experiments.

Subcommands:
    median-scan     exact vs asymptotic jittered NB median over an r grid
    estimator-sim   bias and RMSE of the robust and ML estimators of p
    llt-error       bulk errors of the local expansion and the tail corrections
    tv-scaling      TV distance between the jittered law and the normal law
    poisson-median  exact vs asymptotic jittered Poisson median

Data goes to --out (default: standard output) as CSV or JSON; status lines
and logs go to standard error. Exit codes: 0 success, 1 I/O failure,
2 usage error.
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from nbapprox import __version__
from nbapprox.config import command_defaults
from nbapprox.correction import CorrectionVariant, max_bulk_cdf_error
from nbapprox.errors import DomainError
from nbapprox.exactdist import NBParams
from nbapprox.llt import BulkSpec, max_bulk_ratio_error
from nbapprox.median import median_scan, poisson_median_scan
from nbapprox.metrics import COMMAND_SECONDS, write_metrics
from nbapprox.montecarlo import SimConfig, run_bias_rmse_experiment
from nbapprox.rates import loglog_slope
from nbapprox.tvdist import tv_jittered_vs_normal

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2

SUMMARY_LABEL = "slope"


@dataclass
class Table:
    """Rows keyed by column name, in output order."""

    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)


@dataclass(frozen=True)
class OutputSpec:
    """Destination path (None for standard output) and serialization format."""

    path: Optional[Path]
    format: str = "csv"


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value: Any) -> Any:
    # JSON has no nan or infinity.
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render(table: Table, fmt: str) -> str:
    """CSV with shortest round-trip floats, or a JSON list of row objects."""
    if fmt == "json":
        return json.dumps([{c: _json_value(row.get(c)) for c in table.columns} for row in table.rows],
                          indent=2, allow_nan=False) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(row.get(c)) for c in table.columns])
    return buffer.getvalue()


def write_table(table: Table, out: OutputSpec) -> None:
    text = render(table, out.format)
    if out.path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out.path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


# ---------------------------------------------------------------------------
# Grids and settings
# ---------------------------------------------------------------------------

def build_grid(lo: float, hi: float, step: float) -> List[float]:
    """lo, lo + step, ... up to and including hi (within rounding)."""
    if not (step > 0):
        raise DomainError(f"grid step must be positive, got {step!r}")
    if hi < lo:
        raise DomainError(f"grid maximum {hi!r} is below minimum {lo!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def _settings(command: str, args: argparse.Namespace) -> Dict[str, Any]:
    settings = command_defaults(command)
    for key, value in vars(args).items():
        if value is not None:
            settings[key] = value
    return settings


def _require(settings: Dict[str, Any], key: str) -> Any:
    """Setting named key; a missing or empty one is a usage error."""
    value = settings.get(key)
    if value is None:
        flag = "--" + key.replace("_", "-")
        raise DomainError(f"missing setting '{key}': pass {flag} or add it to the defaults file")
    return value


def _r_grid(settings: Dict[str, Any]) -> List[float]:
    if settings.get("r_list"):
        return [float(r) for r in settings["r_list"]]
    return build_grid(float(_require(settings, "r_min")), float(_require(settings, "r_max")),
                      float(_require(settings, "r_step")))


def _slope(xs: Sequence[float], ys: Sequence[float], label: str) -> float:
    try:
        return loglog_slope(xs, ys)
    except DomainError as e:
        logger.warning("No %s slope: %s", label, e)
        return float("nan")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_median_scan(settings: Dict[str, Any]) -> Table:
    table = Table(["r", "integer_median_minus_mean", "jittered_median", "asymptotic", "residual"])
    for report in median_scan(float(_require(settings, "p")), _r_grid(settings)):
        table.rows.append({
            "r": report.params.r,
            "integer_median_minus_mean": report.integer_offset,
            "jittered_median": report.exact,
            "asymptotic": report.asymptotic,
            "residual": report.residual,
        })
    return table


def cmd_estimator_sim(settings: Dict[str, Any]) -> Table:
    cfg = SimConfig(
        n=int(_require(settings, "n")),
        reps=int(_require(settings, "reps")),
        p=float(_require(settings, "p")),
        r_grid=tuple(_r_grid(settings)),
        seed=int(_require(settings, "seed")),
        jitter_ml=bool(settings.get("jitter_ml", True)),
        workers=int(settings.get("workers", 1)),
    )
    report = run_bias_rmse_experiment(cfg)
    table = Table(["r", "bias_robust", "bias_ml", "rmse_robust", "rmse_ml", "rmse_ratio",
                   "degenerate_count"])
    for row in report.rows:
        table.rows.append({
            "r": row.r,
            "bias_robust": row.bias_robust,
            "bias_ml": row.bias_ml,
            "rmse_robust": row.rmse_robust,
            "rmse_ml": row.rmse_ml,
            "rmse_ratio": row.rmse_ratio,
            "degenerate_count": row.degenerate_count,
        })
    return table


def cmd_llt_error(settings: Dict[str, Any]) -> Table:
    p = float(_require(settings, "p"))
    spec = BulkSpec(float(_require(settings, "eta")))
    delta_cap = settings.get("delta_cap")
    delta_cap = None if delta_cap is None else float(delta_cap)
    variant = CorrectionVariant(settings.get("variant", "edgeworth"))
    columns = ["r", "max_abs_err_ratio_expansion", "max_abs_err_corrected_cdf",
               "max_abs_err_classical_cdf", "fitted_slope"]
    table = Table(columns)
    for r in _r_grid(settings):
        params = NBParams(r, p)
        table.rows.append({
            "r": r,
            "max_abs_err_ratio_expansion": max_bulk_ratio_error(params, spec, delta_cap),
            "max_abs_err_corrected_cdf": max_bulk_cdf_error(
                params, spec, "corrected", delta_cap, variant),
            "max_abs_err_classical_cdf": max_bulk_cdf_error(
                params, spec, "classical", delta_cap),
            "fitted_slope": None,
        })

    rs = [row["r"] for row in table.rows]
    summary: Dict[str, Any] = {"r": SUMMARY_LABEL}
    for column in columns[1:4]:
        summary[column] = _slope(rs, [row[column] for row in table.rows], column)
    summary["fitted_slope"] = summary["max_abs_err_corrected_cdf"]
    table.rows.append(summary)
    return table


def cmd_tv_scaling(settings: Dict[str, Any]) -> Table:
    p = float(_require(settings, "p"))
    width = float(settings.get("width", 40.0))
    table = Table(["r", "tv", "quad_error_bound", "tail_mass_bound"])
    for r in _r_grid(settings):
        report = tv_jittered_vs_normal(NBParams(r, p), width)
        table.rows.append({
            "r": r,
            "tv": report.tv,
            "quad_error_bound": report.quad_error_bound,
            "tail_mass_bound": report.tail_mass_bound,
        })
    rs = [row["r"] for row in table.rows]
    table.rows.append({
        "r": SUMMARY_LABEL,
        "tv": _slope(rs, [row["tv"] for row in table.rows], "tv"),
        "quad_error_bound": None,
        "tail_mass_bound": None,
    })
    return table


def cmd_poisson_median(settings: Dict[str, Any]) -> Table:
    grid = build_grid(float(_require(settings, "lambda_min")), float(_require(settings, "lambda_max")),
                      float(_require(settings, "lambda_step")))
    table = Table(["lambda", "integer_median_minus_lambda", "jittered_median_minus_lambda",
                   "residual_vs_one_third", "eq12_ok"])
    for report in poisson_median_scan(grid):
        lam = report.params.lam
        offset = report.integer_offset
        table.rows.append({
            "lambda": lam,
            "integer_median_minus_lambda": offset,
            "jittered_median_minus_lambda": report.exact - lam,
            "residual_vs_one_third": report.residual,
            "eq12_ok": -math.log(2.0) <= offset < 1.0 / 3.0,
        })
    return table


COMMANDS: Dict[str, Callable[[Dict[str, Any]], Table]] = {
    "median-scan": cmd_median_scan,
    "estimator-sim": cmd_estimator_sim,
    "llt-error": cmd_llt_error,
    "tv-scaling": cmd_tv_scaling,
    "poisson-median": cmd_poisson_median,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_r_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--r-min", type=float, help="Smallest r of the grid")
    parser.add_argument("--r-max", type=float, help="Largest r of the grid")
    parser.add_argument("--r-step", type=float, help="Grid spacing")
    parser.add_argument("--r-list", type=float, nargs="+", help="Explicit r values (overrides the grid)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="Output file (default: standard output)")
    common.add_argument("--format", choices=["csv", "json"], default="csv", help="Output format")
    common.add_argument("--metrics-file", type=Path,
                        help="Write Prometheus metrics in text format to this file")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="Log progress to stderr (-vv for debug output)")

    parser = argparse.ArgumentParser(
        prog="nbapprox",
        description="Gaussian approximation experiments for the negative binomial distribution",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("median-scan", parents=[common], help="Jittered NB median over an r grid")
    p.add_argument("--p", type=float, help="Success probability in (0, 1)")
    _add_r_grid(p)

    p = sub.add_parser("estimator-sim", parents=[common], help="Bias/RMSE of the estimators of p")
    p.add_argument("--p", type=float, help="True success probability")
    _add_r_grid(p)
    p.add_argument("--n", type=int, help="Sample size per dataset")
    p.add_argument("--reps", type=int, help="Datasets per r value")
    p.add_argument("--seed", type=int, help="Base seed (64-bit unsigned)")
    p.add_argument("--workers", type=int, help="Worker processes across the r grid")
    ml_input = p.add_mutually_exclusive_group()
    ml_input.add_argument("--raw-ml", dest="jitter_ml", action="store_false", default=None,
                          help="Feed raw counts to the ML estimator")
    ml_input.add_argument("--jittered-ml", dest="jitter_ml", action="store_true", default=None,
                          help="Feed jittered values to the ML estimator")

    p = sub.add_parser("llt-error", parents=[common], help="Bulk errors of the expansions")
    p.add_argument("--p", type=float, help="Success probability in (0, 1)")
    _add_r_grid(p)
    p.add_argument("--eta", type=float, help="Bulk width parameter in (0, 1)")
    p.add_argument("--delta-cap", type=float, help="Restrict the bulk to |delta| <= cap")
    p.add_argument("--no-delta-cap", action="store_true",
                   help="Use the whole bulk")
    p.add_argument("--variant", choices=[v.value for v in CorrectionVariant],
                   help="Coefficient set of the refined correction")

    p = sub.add_parser("tv-scaling", parents=[common], help="TV distance to the normal law")
    p.add_argument("--p", type=float, help="Success probability in (0, 1)")
    _add_r_grid(p)
    p.add_argument("--width", type=float, help="Truncation window in standard deviations")

    p = sub.add_parser("poisson-median", parents=[common], help="Jittered Poisson median")
    p.add_argument("--lambda-min", type=float, help="Smallest lambda")
    p.add_argument("--lambda-max", type=float, help="Largest lambda")
    p.add_argument("--lambda-step", type=float, help="Lambda spacing")

    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger("nbapprox").setLevel(level)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and write its table."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)

    command = args.command
    out = OutputSpec(path=args.out, format=args.format)
    metrics_file = args.metrics_file
    for key in ("command", "out", "format", "metrics_file", "verbose"):
        delattr(args, key)
    uncapped = bool(getattr(args, "no_delta_cap", False))
    if hasattr(args, "no_delta_cap"):
        delattr(args, "no_delta_cap")

    try:
        settings = _settings(command, args)
        if uncapped:
            settings["delta_cap"] = None
        with COMMAND_SECONDS.labels(command).time():
            table = COMMANDS[command](settings)
    except DomainError as e:
        print(f"✗ Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        write_table(table, out)
        if metrics_file is not None:
            write_metrics(metrics_file)
    except OSError as e:
        print(f"✗ Error: could not write output: {e}", file=sys.stderr)
        return EXIT_IO

    destination = out.path if out.path is not None else "stdout"
    print(f"✓ Wrote {len(table.rows)} rows to {destination}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
