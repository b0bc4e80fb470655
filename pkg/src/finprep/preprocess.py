"""The five alignment techniques that turn (quarterly income, daily price)
into a single regression dataset.

All interpolators work on ordinal days and refuse to extrapolate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .series import (
    AlignedDataset,
    SeriesError,
    TimeSeries,
    daily_calendar,
    date_to_ordinal,
    inner_join,
)


class Technique(str, enum.Enum):
    AGGREGATION = "aggregation"
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    CUBIC_SPLINE = "cubic_spline"
    LAGGED = "lagged"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Technique.AGGREGATION: "Aggregation",
    Technique.LINEAR: "Linear interpolation",
    Technique.QUADRATIC: "Polynomial interpolation",
    Technique.CUBIC_SPLINE: "Cubic spline interpolation",
    Technique.LAGGED: "Lagged variables",
}

INTERPOLATIONS = (Technique.LINEAR, Technique.QUADRATIC, Technique.CUBIC_SPLINE)


@dataclass(frozen=True)
class PreprocessSpec:
    """Which technique to run, plus its knobs.

    ``quadratic_window`` selects how the quadratic technique builds its
    curve: ``None`` fits one global least-squares polynomial to every knot,
    an integer ``w`` fits a polynomial to each run of ``w`` consecutive
    knots (``w == polynomial_fit_degree + 1`` passes through every knot).
    """

    technique: Technique
    lag_steps: int = 1
    polynomial_fit_degree: int = 2
    quadratic_window: int | None = 3

    def __post_init__(self):
        object.__setattr__(self, "technique", Technique(self.technique))
        if self.lag_steps < 1:
            raise ValueError("lag_steps must be >= 1")
        if self.polynomial_fit_degree < 1:
            raise ValueError("polynomial_fit_degree must be >= 1")
        if self.quadratic_window is not None and self.quadratic_window < self.polynomial_fit_degree + 1:
            raise ValueError("quadratic_window must hold at least degree + 1 knots")


class InterpolationRangeError(SeriesError):
    pass


def _target_ordinals(knots: TimeSeries, targets: Sequence[date]) -> np.ndarray:
    t = np.array([date_to_ordinal(d) for d in targets], dtype=float)
    if len(t):
        lo, hi = knots.start, knots.end
        if t.min() < date_to_ordinal(lo) or t.max() > date_to_ordinal(hi):
            raise InterpolationRangeError(f"targets fall outside the knot range [{lo}, {hi}] of {knots.name!r}")
    return t


# --- aggregation -----------------------------------------------------------


def aggregate_quarterly_mean(daily: TimeSeries, quarter_end_dates: Sequence[date]) -> TimeSeries:
    """Mean daily value per bucket ``(previous quarter end, quarter end]``.

    The first bucket is open on the left. Buckets without observations are
    dropped.
    """
    ends = list(quarter_end_dates)
    if any(b <= a for a, b in zip(ends, ends[1:])):
        raise SeriesError("quarter_end_dates must be strictly increasing")
    if not len(daily):
        raise SeriesError("daily series is empty")

    ords = daily.ordinals
    edges = np.array([date_to_ordinal(d) for d in ends])
    bucket = np.searchsorted(edges, ords, side="left")
    out_dates, out_values = [], []
    for q, end in enumerate(ends):
        members = daily.values[bucket == q]
        if members.size:
            out_dates.append(end)
            out_values.append(float(members.mean()))
    return daily.with_values(out_dates, out_values)


# --- linear ------------------------------------------------------------------


def interpolate_linear(knots: TimeSeries, targets: Sequence[date]) -> TimeSeries:
    """Straight line between the two knots bracketing each target date."""
    if len(knots) < 2:
        raise SeriesError("linear interpolation needs at least 2 knots")
    t = _target_ordinals(knots, targets)
    kt = knots.ordinals.astype(float)
    kv = knots.values
    # right-hand knot index; a target on the last knot reuses the final interval
    j = np.clip(np.searchsorted(kt, t, side="right"), 1, len(kt) - 1)
    t1, t2 = kt[j - 1], kt[j]
    v1, v2 = kv[j - 1], kv[j]
    out = v1 + (v2 - v1) / (t2 - t1) * (t - t1)
    on_knot = t == t2
    out[on_knot] = v2[on_knot]
    return knots.with_values(targets, out)


# --- quadratic (Vandermonde least squares) -----------------------------------


@dataclass(frozen=True)
class QuadraticFit:
    """Polynomial in scaled time ``s = (t - time_offset) / time_scale``.

    ``coefficients`` are ordered from the highest power down, so the degree-2
    case reads ``a*s**2 + b*s + c``.
    """

    coefficients: tuple[float, ...]
    time_offset: float
    time_scale: float

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def a(self) -> float:
        return self.coefficients[-3] if self.degree >= 2 else 0.0

    @property
    def b(self) -> float:
        return self.coefficients[-2]

    @property
    def c(self) -> float:
        return self.coefficients[-1]

    def scaled(self, t) -> np.ndarray:
        return (np.asarray(t, dtype=float) - self.time_offset) / self.time_scale

    def __call__(self, t) -> np.ndarray:
        s = self.scaled(t)
        out = np.zeros_like(s, dtype=float)
        for c in self.coefficients:
            out = out * s + c
        return out


def vandermonde(s: np.ndarray, degree: int) -> np.ndarray:
    """Rows ``[s**degree, ..., s, 1]``."""
    return np.vander(np.asarray(s, dtype=float), degree + 1)


def fit_polynomial_knots(t: np.ndarray, v: np.ndarray, degree: int) -> QuadraticFit:
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if len(t) < degree + 1:
        raise SeriesError(f"a degree-{degree} fit needs at least {degree + 1} knots, got {len(t)}")
    span = t[-1] - t[0]
    if span <= 0:
        raise SeriesError("knots span zero time")
    s = (t - t[0]) / span
    V = vandermonde(s, degree)
    q, r = np.linalg.qr(V)
    coef = np.linalg.solve(r, q.T @ v)
    return QuadraticFit(tuple(float(c) for c in coef), float(t[0]), float(span))


def fit_quadratic(knots: TimeSeries, degree: int = 2) -> QuadraticFit:
    """Global least-squares polynomial through all knots (overdetermined in general)."""
    return fit_polynomial_knots(knots.ordinals, knots.values, degree)


def interpolate_quadratic(
    knots: TimeSeries, targets: Sequence[date], degree: int = 2, window: int | None = None
) -> TimeSeries:
    """Evaluate a least-squares polynomial fit at each target date.

    With ``window=None`` a single polynomial is fitted to all knots. With an
    integer window each knot interval ``[k_i, k_i+1]`` is served by the fit
    to ``window`` consecutive knots starting at ``k_i`` (shifted left near
    the end of the series).
    """
    t = _target_ordinals(knots, targets)
    if window is None:
        return knots.with_values(targets, fit_quadratic(knots, degree)(t))

    n = len(knots)
    if n < window:
        raise SeriesError(f"a window of {window} knots needs at least {window} knots, got {n}")
    kt = knots.ordinals.astype(float)
    kv = knots.values
    interval = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, n - 2)
    out = np.empty_like(t)
    for i in np.unique(interval):
        lo = min(i, n - window)
        fit = fit_polynomial_knots(kt[lo:lo + window], kv[lo:lo + window], degree)
        mask = interval == i
        out[mask] = fit(t[mask])
    exact = np.isin(t, kt)
    out[exact] = kv[np.searchsorted(kt, t[exact])]
    return knots.with_values(targets, out)


# --- natural cubic spline ----------------------------------------------------


@dataclass(frozen=True)
class SplineSegment:
    """``a + b*(t - left_knot) + c*(t - left_knot)**2 + d*(t - left_knot)**3``."""

    left_knot: float
    right_knot: float
    a: float
    b: float
    c: float
    d: float

    def __call__(self, t):
        h = np.asarray(t, dtype=float) - self.left_knot
        return self.a + h * (self.b + h * (self.c + h * self.d))

    def derivative(self, t, order: int = 1):
        h = np.asarray(t, dtype=float) - self.left_knot
        if order == 1:
            return self.b + h * (2 * self.c + 3 * self.d * h)
        if order == 2:
            return 2 * self.c + 6 * self.d * h
        raise ValueError("order must be 1 or 2")


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas algorithm. ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = len(diag)
    c = np.zeros(n)
    d = np.zeros(n)
    c[0] = upper[0] / diag[0] if n > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * c[i - 1]
        if i < n - 1:
            c[i] = upper[i] / m
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m
    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def natural_spline_segments(t, v) -> list[SplineSegment]:
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    n = len(t)
    if n < 3:
        raise SeriesError(f"a cubic spline needs at least 3 knots, got {n}")
    h = np.diff(t)
    slope = np.diff(v) / h
    # second derivatives M at interior knots; M_0 = M_{n-1} = 0
    m = np.zeros(n)
    m[1:-1] = solve_tridiagonal(
        h[:-1],
        2.0 * (h[:-1] + h[1:]),
        h[1:],
        6.0 * np.diff(slope),
    )
    segments = []
    for i in range(n - 1):
        segments.append(
            SplineSegment(
                left_knot=float(t[i]),
                right_knot=float(t[i + 1]),
                a=float(v[i]),
                b=float(slope[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0),
                c=float(m[i] / 2.0),
                d=float((m[i + 1] - m[i]) / (6.0 * h[i])),
            )
        )
    return segments


def fit_natural_cubic_spline(knots: TimeSeries) -> list[SplineSegment]:
    """C2 piecewise cubic through every knot with zero end curvature."""
    return natural_spline_segments(knots.ordinals, knots.values)


def evaluate_spline(segments: Sequence[SplineSegment], t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lefts = np.array([s.left_knot for s in segments])
    coef = np.array([(s.a, s.b, s.c, s.d) for s in segments])
    i = np.clip(np.searchsorted(lefts, t, side="right") - 1, 0, len(segments) - 1)
    h = t - lefts[i]
    a, b, c, d = coef[i].T
    return a + h * (b + h * (c + h * d))


def interpolate_cubic_spline(knots: TimeSeries, targets: Sequence[date]) -> TimeSeries:
    t = _target_ordinals(knots, targets)
    segments = fit_natural_cubic_spline(knots)
    out = evaluate_spline(segments, t)
    kt = knots.ordinals.astype(float)
    exact = np.isin(t, kt)
    out[exact] = knots.values[np.searchsorted(kt, t[exact])]
    return knots.with_values(targets, out)


# --- lags --------------------------------------------------------------------


def lag_shift(ts: TimeSeries, steps: int) -> TimeSeries:
    """Each row takes the value from ``steps`` rows earlier; the first ``steps`` rows are dropped."""
    if steps < 0:
        raise SeriesError("lag steps must be >= 0")
    if steps >= len(ts):
        raise SeriesError(f"cannot lag {len(ts)} observations by {steps}")
    if steps == 0:
        return ts
    return ts.with_values(ts.dates[steps:], ts.values[:-steps])


# --- dispatch ----------------------------------------------------------------


def _resample(ts: TimeSeries, targets: list[date], spec: PreprocessSpec) -> TimeSeries:
    if spec.technique is Technique.LINEAR:
        return interpolate_linear(ts, targets)
    if spec.technique is Technique.QUADRATIC:
        return interpolate_quadratic(ts, targets, spec.polynomial_fit_degree, spec.quadratic_window)
    return interpolate_cubic_spline(ts, targets)


def run_preprocess(spec: PreprocessSpec, income: TimeSeries, price: TimeSeries) -> AlignedDataset:
    """Build the aligned (income -> x, price -> y) dataset for one technique."""
    if not len(income) or not len(price):
        raise SeriesError("income and price series must be nonempty")
    start = max(income.start, price.start)
    end = min(income.end, price.end)
    if start > end:
        raise SeriesError(
            f"no date overlap: {income.name} covers [{income.start}, {income.end}], "
            f"{price.name} covers [{price.start}, {price.end}]"
        )

    tech = spec.technique
    if tech is Technique.AGGREGATION:
        return inner_join(income, aggregate_quarterly_mean(price, income.dates))
    if tech is Technique.LAGGED:
        return inner_join(lag_shift(income, spec.lag_steps), lag_shift(price, spec.lag_steps))

    calendar = daily_calendar(start, end)
    return inner_join(_resample(income, calendar, spec), _resample(price, calendar, spec))
