"""Single-predictor polynomial regression on z-scored data.

The design matrix is the raw power basis ``[1, x, x**2, ..., x**d]`` of the
standardized predictor, bias column included, and no separate intercept is
fitted. Least squares goes through a thin SVD and returns the minimum-norm
solution over singular values above ``rcond * s_max``, so very high degrees
yield a degraded fit instead of an exception.

Whether a fit is trustworthy is judged with the usual numerical-rank
tolerance ``s_max * max(rows, cols) * eps``; a design short of full rank by
that measure raises :class:`ConditioningWarning`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .series import AlignedDataset

DEFAULT_SEED = 42
#: LAPACK's machine-precision cutoff for "zero" singular values.
DEFAULT_RCOND = float(np.finfo(float).eps)


class ModelError(ValueError):
    pass


class ConditioningWarning(RuntimeWarning):
    """The least-squares system is rank-deficient at working precision."""


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream seeded with an unsigned 64-bit integer."""
    if not 0 <= seed < 2**64:
        raise ModelError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


# --- splitting -----------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.25
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ModelError("test_fraction must lie in (0, 1)")

    def test_size(self, n: int) -> int:
        # round before ceil so 0.25 * 60 does not become 15.000000000000002
        return math.ceil(round(self.test_fraction * n, 9))


def shuffle_split(ds: AlignedDataset | int, spec: SplitSpec = SplitSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(train_idx, test_idx)`` row indices.

    The rows are permuted with a seeded Fisher-Yates shuffle; the first
    ``ceil(test_fraction * n)`` permuted rows are the test set.
    """
    n = ds if isinstance(ds, int) else len(ds)
    if n < 4:
        raise ModelError(f"need at least 4 rows to split, got {n}")
    n_test = spec.test_size(n)
    if n_test >= n:
        raise ModelError(f"test_fraction {spec.test_fraction} leaves no training rows for n={n}")
    perm = make_rng(spec.seed).permutation(n)
    return perm[n_test:], perm[:n_test]


# --- scaling -------------------------------------------------------------------


@dataclass(frozen=True)
class ScalerParams:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ModelError("scaler std must be positive")

    def apply(self, v):
        return (np.asarray(v, dtype=float) - self.mean) / self.std

    def invert(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean


IDENTITY_SCALER = ScalerParams(0.0, 1.0)


def fit_scaler(values) -> ScalerParams:
    """Mean and population (divisor ``n``) standard deviation."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ModelError("need at least 2 values to fit a scaler")
    mean = float(v.mean())
    std = float(np.sqrt(np.mean((v - mean) ** 2)))
    if std == 0.0 or std <= 1e-15 * max(abs(mean), 1.0):
        raise ModelError("constant column: zero variance")
    return ScalerParams(mean, std)


def apply_scaler(params: ScalerParams, v):
    out = params.apply(v)
    return float(out) if out.ndim == 0 else out


# --- features and least squares -----------------------------------------------


def expand_poly(x, degree: int) -> np.ndarray:
    """``[x**0, x**1, ..., x**degree]``; one row per element when ``x`` is a vector."""
    if degree < 0:
        raise ModelError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    return x[..., None] ** np.arange(degree + 1)


def numerical_rank(singular_values: np.ndarray, shape: tuple[int, int]) -> int:
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] == 0:
        return 0
    tol = s[0] * max(shape) * np.finfo(float).eps
    return int(np.sum(s > tol))


@dataclass(frozen=True)
class LstsqResult:
    coefficients: np.ndarray
    rank: int
    singular_values: np.ndarray
    numerical_rank: int

    @property
    def rank_deficient(self) -> bool:
        return self.numerical_rank < len(self.coefficients)


def solve_least_squares(design, targets, rcond: float = DEFAULT_RCOND) -> LstsqResult:
    A = np.asarray(design, dtype=float)
    b = np.asarray(targets, dtype=float)
    if A.ndim != 2:
        raise ModelError("design must be a 2-D matrix")
    rows, cols = A.shape
    if rows < cols:
        raise ModelError(f"underdetermined system: {rows} rows < {cols} columns")
    if b.shape != (rows,):
        raise ModelError("targets length does not match design rows")
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rcond * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    coef = vt[keep].T @ ((u[:, keep].T @ b) / s[keep])
    return LstsqResult(coef, int(keep.sum()), s, numerical_rank(s, A.shape))


def fit_ols(design, targets, rcond: float = DEFAULT_RCOND) -> np.ndarray:
    """Least-squares coefficients; warns if singular values had to be dropped."""
    res = solve_least_squares(design, targets, rcond)
    if res.rank_deficient:
        warnings.warn(
            f"design is rank-deficient at working precision (numerical rank {res.numerical_rank} of "
            f"{len(res.coefficients)}); returning the minimum-norm solution",
            ConditioningWarning,
            stacklevel=2,
        )
    return res.coefficients


# --- fitted model -------------------------------------------------------------


@dataclass(frozen=True)
class FittedModel:
    degree: int
    coefficients: np.ndarray
    x_scaler: ScalerParams = IDENTITY_SCALER
    y_scaler: ScalerParams = IDENTITY_SCALER
    #: numerical rank of the training design; ``None`` when built by hand
    rank: int | None = None

    @property
    def ill_conditioned(self) -> bool:
        return self.rank is not None and self.rank < self.degree + 1

    def predict_scaled(self, x_scaled):
        out = expand_poly(x_scaled, self.degree) @ np.asarray(self.coefficients, dtype=float)
        return float(out) if out.ndim == 0 else out

    def predict(self, x_raw):
        out = self.y_scaler.invert(self.predict_scaled(self.x_scaler.apply(x_raw)))
        return float(out) if out.ndim == 0 else out


def fit_model(x_raw, y_raw, degree: int, rcond: float = DEFAULT_RCOND, warn: bool = True) -> FittedModel:
    """Fit both scalers on the given rows, then OLS in scaled space."""
    if degree < 1:
        raise ModelError("degree must be >= 1")
    xs, ys = fit_scaler(x_raw), fit_scaler(y_raw)
    res = solve_least_squares(expand_poly(xs.apply(x_raw), degree), ys.apply(y_raw), rcond)
    if warn and res.rank_deficient:
        warnings.warn(
            f"degree {degree}: numerical rank {res.numerical_rank} of {degree + 1}; fit is unreliable",
            ConditioningWarning,
            stacklevel=2,
        )
    return FittedModel(degree, res.coefficients, xs, ys, res.numerical_rank)


def cross_val_neg_mse(
    x_train,
    y_train,
    degree: int,
    k: int = 5,
    seed: int = DEFAULT_SEED,
    rcond: float = DEFAULT_RCOND,
) -> float:
    """Mean of the per-fold negative MSEs, each scored in that fold's scaled space.

    Folds are contiguous, near-equal slices of a seeded shuffle of the rows.
    """
    x = np.asarray(x_train, dtype=float)
    y = np.asarray(y_train, dtype=float)
    n = len(x)
    if k < 2:
        raise ModelError("k must be >= 2")
    if k > n:
        raise ModelError(f"k={k} exceeds the {n} available rows")
    folds = np.array_split(make_rng(seed).permutation(n), k)
    scores = []
    for i, held in enumerate(folds):
        rest = np.concatenate([f for j, f in enumerate(folds) if j != i])
        m = fit_model(x[rest], y[rest], degree, rcond, warn=False)
        err = m.y_scaler.apply(y[held]) - m.predict_scaled(m.x_scaler.apply(x[held]))
        scores.append(-float(np.mean(err**2)))
    return float(np.mean(scores))
