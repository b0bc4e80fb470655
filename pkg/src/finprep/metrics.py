"""Test-set statistics reported for every (technique, model) cell."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class MetricsError(ValueError):
    pass


def _pair(y_true, y_pred) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(y_true, dtype=float).ravel()
    b = np.asarray(y_pred, dtype=float).ravel()
    if a.size == 0:
        raise MetricsError("empty input")
    if a.shape != b.shape:
        raise MetricsError(f"length mismatch: {a.size} vs {b.size}")
    return a, b


def mse(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    return float(np.mean((b - a) ** 2))


def mae(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    return float(np.mean(np.abs(b - a)))


def rmse(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    d = np.abs(b - a)
    # scale first so tiny residuals do not underflow when squared
    top = float(d.max())
    if top == 0.0 or not np.isfinite(top):
        return float(np.sqrt(np.mean(d**2)))
    return top * float(np.sqrt(np.mean((d / top) ** 2)))


def r_squared(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    if a.size < 2:
        raise MetricsError("R-squared needs at least 2 observations")
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise MetricsError("R-squared is undefined for a constant target")
    return 1.0 - float(np.sum((a - b) ** 2)) / ss_tot


def adjusted_r_squared(r2: float, n: int, p: int) -> float:
    """``1 - (1 - r2) * (n - 1) / (n - p - 1)`` with ``p`` counting every design column."""
    if p < 1:
        raise MetricsError("p must be >= 1")
    if n <= p + 1:
        raise MetricsError(f"adjusted R-squared needs n > p + 1 (n={n}, p={p})")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


COLUMNS = ("Validation MSE", "MSE", "MAE", "RMSE", "R-squared", "Adjusted R-squared")


@dataclass(frozen=True)
class MetricsReport:
    validation_mse: float
    mse: float
    mae: float
    rmse: float
    r_squared: float
    adjusted_r_squared: float
    n_test: int
    n_predictors: int

    def values(self) -> tuple[float, ...]:
        """The six statistics in table column order."""
        return (
            self.validation_mse,
            self.mse,
            self.mae,
            self.rmse,
            self.r_squared,
            self.adjusted_r_squared,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def build_report(validation: float, y_true, y_pred, n_predictors: int) -> MetricsReport:
    a, b = _pair(y_true, y_pred)
    r2 = r_squared(a, b)
    return MetricsReport(
        validation_mse=float(validation),
        mse=mse(a, b),
        mae=mae(a, b),
        rmse=rmse(a, b),
        r_squared=r2,
        adjusted_r_squared=adjusted_r_squared(r2, a.size, n_predictors),
        n_test=int(a.size),
        n_predictors=int(n_predictors),
    )
