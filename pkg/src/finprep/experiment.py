"""Comparison grid (technique x model) and polynomial degree sweep."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence, TypeVar

import numpy as np

from .metrics import MetricsReport, build_report, mse
from .model import (
    DEFAULT_RCOND,
    DEFAULT_SEED,
    FittedModel,
    SplitSpec,
    cross_val_neg_mse,
    fit_model,
    shuffle_split,
)
from .preprocess import PreprocessSpec, Technique, run_preprocess
from .series import AlignedDataset, TimeSeries

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

MODEL_KINDS = ("linear", "polynomial")
DEFAULT_SWEEP_DEGREES = (2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 32, 33, 34)


class ExperimentError(ValueError):
    pass


def _default_techniques() -> tuple[PreprocessSpec, ...]:
    return tuple(PreprocessSpec(t) for t in Technique)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = DEFAULT_SEED
    test_fraction: float = 0.25
    cv_folds: int = 5
    techniques: tuple[PreprocessSpec, ...] = field(default_factory=_default_techniques)
    model_degrees: Mapping[str, int] = field(default_factory=lambda: {"linear": 1, "polynomial": 2})
    sweep_degrees: tuple[int, ...] = DEFAULT_SWEEP_DEGREES
    sweep_technique: PreprocessSpec = PreprocessSpec(Technique.LINEAR)
    collapse_threshold: float = 0.10
    rcond: float = DEFAULT_RCOND
    workers: int = 1

    def __post_init__(self):
        degrees = tuple(int(d) for d in self.sweep_degrees)
        if not degrees or any(d < 1 for d in degrees) or any(b <= a for a, b in zip(degrees, degrees[1:])):
            raise ExperimentError("sweep_degrees must be strictly increasing integers >= 1")
        object.__setattr__(self, "sweep_degrees", degrees)
        object.__setattr__(self, "techniques", tuple(self.techniques))
        if not self.techniques:
            raise ExperimentError("at least one technique is required")
        if self.cv_folds < 2:
            raise ExperimentError("cv_folds must be >= 2")
        SplitSpec(self.test_fraction, self.seed)

    @property
    def split(self) -> SplitSpec:
        return SplitSpec(self.test_fraction, self.seed)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Overlay a JSON-style mapping onto ``base`` (defaults when omitted)."""
        base = base or cls()
        known = {
            "seed", "test_fraction", "cv_folds", "techniques", "model_degrees", "sweep_degrees",
            "sweep_technique", "collapse_threshold", "rcond", "workers",
        }
        unknown = set(data) - known
        if unknown:
            raise ExperimentError(f"unknown config keys: {sorted(unknown)}")
        changes: dict[str, Any] = {k: v for k, v in data.items() if k in known}
        if "techniques" in changes:
            changes["techniques"] = tuple(_technique_spec(t) for t in changes["techniques"])
        if "sweep_technique" in changes:
            changes["sweep_technique"] = _technique_spec(changes["sweep_technique"])
        if "model_degrees" in changes:
            changes["model_degrees"] = {**base.model_degrees, **changes["model_degrees"]}
        return replace(base, **changes)

    @classmethod
    def from_json(cls, path: str | Path, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh), base)


def _technique_spec(item: Any) -> PreprocessSpec:
    if isinstance(item, PreprocessSpec):
        return item
    if isinstance(item, str):
        return PreprocessSpec(Technique(item))
    if isinstance(item, Mapping):
        return PreprocessSpec(**item)
    raise ExperimentError(f"cannot read technique from {item!r}")


# --- single cell ---------------------------------------------------------------


@dataclass(frozen=True)
class CellError:
    code: str
    message: str


@dataclass(frozen=True)
class CellOutcome:
    report: MetricsReport
    model: FittedModel
    train_mse: float
    x_test_scaled: np.ndarray
    y_test_scaled: np.ndarray

    @property
    def ill_conditioned(self) -> bool:
        return self.model.ill_conditioned


def evaluate(ds: AlignedDataset, degree: int, cfg: ExperimentConfig) -> CellOutcome:
    """Split, scale on train, fit, cross-validate on train and score the test rows (scaled units)."""
    if len(ds) < 4:
        raise ExperimentError(f"dataset has {len(ds)} rows; at least 4 are required")
    train, test = shuffle_split(ds, cfg.split)
    x, y = ds.x, ds.y
    model = fit_model(x[train], y[train], degree, cfg.rcond)
    validation = cross_val_neg_mse(x[train], y[train], degree, cfg.cv_folds, cfg.seed, cfg.rcond)
    xs_test = model.x_scaler.apply(x[test])
    ys_test = model.y_scaler.apply(y[test])
    report = build_report(validation, ys_test, model.predict_scaled(xs_test), n_predictors=degree + 1)
    train_mse = mse(model.y_scaler.apply(y[train]), model.predict_scaled(model.x_scaler.apply(x[train])))
    return CellOutcome(report, model, train_mse, xs_test, ys_test)


def run_cell(
    income: TimeSeries,
    price: TimeSeries,
    technique: PreprocessSpec,
    degree: int,
    cfg: ExperimentConfig | None = None,
) -> MetricsReport:
    cfg = cfg or ExperimentConfig()
    return evaluate(run_preprocess(technique, income, price), degree, cfg).report


def _map(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _safe(fn: Callable[[], CellOutcome]) -> CellOutcome | CellError:
    try:
        return fn()
    except ValueError as exc:
        logger.warning("cell failed: %s", exc)
        return CellError(type(exc).__name__, str(exc))


# --- comparison grid ------------------------------------------------------------


CellKey = tuple[Technique, str]


@dataclass(frozen=True)
class ComparisonGrid:
    cells: dict[CellKey, MetricsReport | CellError]
    row_counts: dict[Technique, int]
    seed: int = DEFAULT_SEED

    def ranking(self, by: str = "adjusted_r_squared") -> list[CellKey]:
        """Successful cells best-first. Every supported statistic is "higher is better" or is negated."""
        sign = {"adjusted_r_squared": 1, "r_squared": 1, "validation_mse": 1, "mse": -1, "mae": -1, "rmse": -1}
        if by not in sign:
            raise ExperimentError(f"cannot rank by {by!r}")
        ok = [(k, r) for k, r in self.cells.items() if isinstance(r, MetricsReport)]
        ok.sort(key=lambda kr: -sign[by] * getattr(kr[1], by))
        return [k for k, _ in ok]


def run_comparison(income: TimeSeries, price: TimeSeries, cfg: ExperimentConfig | None = None) -> ComparisonGrid:
    cfg = cfg or ExperimentConfig()
    datasets: dict[Technique, AlignedDataset | CellError] = {}
    for spec in cfg.techniques:
        try:
            datasets[spec.technique] = run_preprocess(spec, income, price)
        except ValueError as exc:
            datasets[spec.technique] = CellError(type(exc).__name__, str(exc))

    keys = [(spec.technique, kind) for spec in cfg.techniques for kind in MODEL_KINDS]

    def cell(key: CellKey) -> MetricsReport | CellError:
        ds = datasets[key[0]]
        if isinstance(ds, CellError):
            return ds
        out = _safe(lambda: evaluate(ds, cfg.model_degrees[key[1]], cfg))
        return out.report if isinstance(out, CellOutcome) else out

    results = _map(cell, keys, cfg.workers)
    counts = {t: len(ds) for t, ds in datasets.items() if isinstance(ds, AlignedDataset)}
    return ComparisonGrid(dict(zip(keys, results)), counts, cfg.seed)


# --- degree sweep ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    degree: int
    outcome: CellOutcome | CellError

    @property
    def report(self) -> MetricsReport | None:
        return self.outcome.report if isinstance(self.outcome, CellOutcome) else None

    @property
    def ill_conditioned(self) -> bool:
        return isinstance(self.outcome, CellOutcome) and self.outcome.ill_conditioned

    @property
    def train_mse(self) -> float | None:
        return self.outcome.train_mse if isinstance(self.outcome, CellOutcome) else None


@dataclass(frozen=True)
class SweepResult:
    technique: Technique
    rows: tuple[SweepRow, ...]
    peak_degree: int | None
    collapse_degree: int | None
    row_count: int
    seed: int = DEFAULT_SEED

    def row(self, degree: int) -> SweepRow:
        for r in self.rows:
            if r.degree == degree:
                return r
        raise KeyError(degree)


def sweep_landmarks(points: Iterable[tuple[int, float]], threshold: float = 0.10) -> tuple[int | None, int | None]:
    """``(peak_degree, collapse_degree)`` from ``(degree, adjusted R^2)`` pairs in sweep order.

    The collapse degree is the first degree whose value falls more than
    ``threshold`` below the best value seen at any earlier degree.
    """
    peak = collapse = None
    best = -np.inf
    running = -np.inf
    for degree, value in points:
        if collapse is None and running - value > threshold:
            collapse = degree
        running = max(running, value)
        if value > best:
            best, peak = value, degree
    return peak, collapse


def run_sweep(
    income: TimeSeries,
    price: TimeSeries,
    technique: PreprocessSpec | None = None,
    cfg: ExperimentConfig | None = None,
) -> SweepResult:
    """Every sweep degree on one fixed split, so rows are comparable."""
    cfg = cfg or ExperimentConfig()
    technique = technique or cfg.sweep_technique
    ds = run_preprocess(technique, income, price)
    outcomes = _map(lambda d: _safe(lambda: evaluate(ds, d, cfg)), list(cfg.sweep_degrees), cfg.workers)
    rows = tuple(SweepRow(d, o) for d, o in zip(cfg.sweep_degrees, outcomes))
    for r in rows:
        if r.ill_conditioned:
            logger.warning("degree %d: rank-deficient design, result flagged", r.degree)
    peak, collapse = sweep_landmarks(
        ((r.degree, r.report.adjusted_r_squared) for r in rows if r.report is not None),
        cfg.collapse_threshold,
    )
    return SweepResult(technique.technique, rows, peak, collapse, len(ds), cfg.seed)
