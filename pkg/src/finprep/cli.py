"""Command-line entry point: ``finprep <command> [options]``.

Exit status: 0 on success, 1 for usage errors, 2 for data or numeric errors.
Tables and CSV/SVG output go to stdout (or ``--out``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import fixtures
from .experiment import (
    CellOutcome,
    ComparisonGrid,
    ExperimentConfig,
    evaluate,
    run_comparison,
    run_sweep,
)
from .metrics import MetricsReport
from .preprocess import PreprocessSpec, Technique, run_preprocess
from .report import cell_plot, emit_svg_plot, fetch_csv, render_grid, render_sweep, series_plot
from .series import TimeSeries, parse_csv

log = logging.getLogger("finprep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--income", type=Path, help="quarterly income CSV (default: bundled Apple fixture)")
    p.add_argument("--price", type=Path, help="daily close CSV (default: bundled Apple fixture)")
    p.add_argument("--income-column", default="net_income", help="value column in the income CSV")
    p.add_argument("--price-column", default="close", help="value column in the price CSV")
    p.add_argument("--seed", type=int, help="split/CV seed (default 42)")
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override it")
    p.add_argument("--out", type=Path, help="write output here instead of stdout")
    p.add_argument("--format", choices=("csv", "markdown"), default="markdown")
    p.add_argument("--full-precision", action="store_true", help="print every digit instead of 5 decimals")
    p.add_argument("--jobs", type=int, help="worker threads for independent cells")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    techniques = [t.value for t in Technique]
    parser = _Parser(prog="finprep", description="Align quarterly income with daily prices and compare regressions.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("preprocess", parents=[common], help="emit the aligned date,x,y dataset")
    p.add_argument("--technique", choices=techniques, required=True)

    p = sub.add_parser("fit", parents=[common], help="run one technique/degree cell")
    p.add_argument("--technique", choices=techniques, required=True)
    p.add_argument("--degree", type=int, default=2)

    sub.add_parser("compare", parents=[common], help="technique x model comparison grid")

    p = sub.add_parser("sweep", parents=[common], help="polynomial degree sweep")
    p.add_argument("--technique", choices=techniques)
    p.add_argument("--degrees", help="comma-separated degrees, e.g. 2,3,4,10")

    p = sub.add_parser("plot", parents=[common], help="SVG of a fitted cell or of a raw series")
    p.add_argument("--technique", choices=techniques, default="linear")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--raw", choices=("income", "price"), help="plot the raw series instead of a fit")

    p = sub.add_parser("fetch", parents=[common], help="download a CSV verbatim")
    p.add_argument("url")
    return parser


def _load(path: Path | None, column: str, bundled, name: str, unit: str) -> TimeSeries:
    if path is None:
        return bundled()
    raw = path.read_bytes()
    header = raw.decode("utf-8-sig").splitlines()[0].split(",") if raw else []
    header = [h.strip() for h in header]
    if column not in header:
        others = [h for h in header if h != "date"]
        if len(others) == 1:
            column = others[0]
    return parse_csv(raw, column, name=name, unit=unit)


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.jobs is not None:
        cfg = replace(cfg, workers=args.jobs)
    if getattr(args, "degrees", None):
        try:
            degrees = tuple(int(d) for d in args.degrees.split(","))
        except ValueError:
            raise UsageError(f"--degrees must be comma-separated integers, got {args.degrees!r}") from None
        cfg = replace(cfg, sweep_degrees=degrees)
    return cfg


def _spec(cfg: ExperimentConfig, name: str) -> PreprocessSpec:
    tech = Technique(name)
    for spec in cfg.techniques:
        if spec.technique is tech:
            return spec
    return PreprocessSpec(tech)


def _write(args, text: str) -> None:
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fit_table(technique: Technique, degree: int, report: MetricsReport, seed: int, fmt: str, full: bool) -> str:
    kind = {1: "linear", 2: "polynomial"}.get(degree)
    grid = ComparisonGrid({(technique, kind or f"degree {degree}"): report}, {}, seed)
    text = render_grid(grid, fmt, full)
    if fmt == "markdown":
        text = text.rsplit("\n\n", 1)[0] + (
            f"\n\nSeed {seed}; degree {degree}; n_test = {report.n_test}; predictors = {report.n_predictors}.\n"
        )
    return text


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")

    if args.command == "fetch":
        if args.out is None:
            raise UsageError("fetch requires --out <path>")
        path = fetch_csv(args.url, args.out)
        print(f"saved {args.url} -> {path}", file=sys.stderr)
        return 0

    cfg = _config(args)
    if args.command == "plot" and args.raw:
        ts = (
            _load(args.income, args.income_column, fixtures.load_income, "Apple income", "USD million")
            if args.raw == "income"
            else _load(args.price, args.price_column, fixtures.load_price, "Close price", "USD")
        )
        _write(args, emit_svg_plot(series_plot(ts)))
        return 0

    income = _load(args.income, args.income_column, fixtures.load_income, "Apple income", "USD million")
    price = _load(args.price, args.price_column, fixtures.load_price, "Close price", "USD")

    if args.command == "preprocess":
        _write(args, run_preprocess(_spec(cfg, args.technique), income, price).to_csv())
    elif args.command == "fit":
        spec = _spec(cfg, args.technique)
        outcome = evaluate(run_preprocess(spec, income, price), args.degree, cfg)
        if outcome.ill_conditioned:
            log.warning("degree %d: rank-deficient design; results are unreliable", args.degree)
        _write(args, _fit_table(spec.technique, args.degree, outcome.report, cfg.seed, args.format, args.full_precision))
    elif args.command == "compare":
        grid = run_comparison(income, price, cfg)
        _write(args, render_grid(grid, args.format, args.full_precision))
        best = grid.ranking()
        if best:
            log.info("best by adjusted R-squared: %s / %s", best[0][0].label, best[0][1])
        print(f"seed {grid.seed}", file=sys.stderr)
    elif args.command == "sweep":
        spec = _spec(cfg, args.technique) if args.technique else cfg.sweep_technique
        sweep = run_sweep(income, price, spec, cfg)
        _write(args, render_sweep(sweep, args.format, args.full_precision))
        print(f"seed {sweep.seed}", file=sys.stderr)
    elif args.command == "plot":
        spec = _spec(cfg, args.technique)
        outcome: CellOutcome = evaluate(run_preprocess(spec, income, price), args.degree, cfg)
        title = f"Polynomial regression (degree {args.degree}) using {spec.technique.label.lower()}"
        _write(args, emit_svg_plot(cell_plot(outcome, title)))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"finprep: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
