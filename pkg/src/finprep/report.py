"""Tables, SVG plots and CSV download for the experiment results."""

from __future__ import annotations

import io
import math
import os
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Sequence
from urllib.parse import urlparse
from xml.sax.saxutils import escape

import numpy as np

from .experiment import CellError, CellOutcome, ComparisonGrid, SweepResult
from .metrics import COLUMNS, MetricsReport
from .series import TimeSeries

GRID_HEADER = ("Data processing technique", "Regression models") + COLUMNS
SWEEP_HEADER = ("Model", "Degree") + COLUMNS + ("Flag",)
MODEL_LABELS = {"linear": "Linear", "polynomial": "Polynomial"}

_Q5 = Decimal("0.00001")


class ReportError(ValueError):
    pass


def format_value(value: float, full_precision: bool = False) -> str:
    """Five decimals, ties to even; ``repr`` digits when ``full_precision``."""
    if full_precision:
        return repr(float(value))
    if not math.isfinite(value):
        return str(value)
    q = Decimal(repr(float(value))).quantize(_Q5, rounding=ROUND_HALF_EVEN)
    if q == 0:
        q = abs(q)
    return f"{q:.5f}"


def _stat_cells(result: MetricsReport | CellError | None, full_precision: bool) -> list[str]:
    if isinstance(result, MetricsReport):
        return [format_value(v, full_precision) for v in result.values()]
    code = result.code if isinstance(result, CellError) else "missing"
    return [f"ERR({code})"] * len(COLUMNS)


def _emit(header: Sequence[str], rows: list[list[str]], fmt: str, caption: str | None) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        for row in [list(header)] + rows:
            buf.write(",".join(_csv_cell(c) for c in row) + "\n")
    elif fmt == "markdown":
        buf.write("| " + " | ".join(header) + " |\n")
        buf.write("|" + "|".join("---" for _ in header) + "|\n")
        for row in rows:
            buf.write("| " + " | ".join(row) + " |\n")
        if caption:
            buf.write(f"\n{caption}\n")
    else:
        raise ReportError(f"unknown table format {fmt!r}")
    return buf.getvalue()


def _csv_cell(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def render_grid(grid: ComparisonGrid, fmt: str = "markdown", full_precision: bool = False) -> str:
    rows = []
    for (technique, kind), result in grid.cells.items():
        rows.append([technique.label, MODEL_LABELS.get(kind, kind)] + _stat_cells(result, full_precision))
    counts = ", ".join(f"{t.label} {n}" for t, n in grid.row_counts.items())
    return _emit(GRID_HEADER, rows, fmt, f"Seed {grid.seed}. Rows per technique: {counts}.")


def render_sweep(sweep: SweepResult, fmt: str = "markdown", full_precision: bool = False) -> str:
    rows = []
    for r in sweep.rows:
        if isinstance(r.outcome, CellError):
            flag = "error"
        else:
            flag = "rank-deficient" if r.ill_conditioned else ""
        rows.append(["polynomial regression", str(r.degree)] + _stat_cells(r.report or r.outcome, full_precision) + [flag])
    caption = (
        f"Seed {sweep.seed}; {sweep.technique.label}, {sweep.row_count} rows. "
        f"Peak adjusted R-squared at degree {sweep.peak_degree}; "
        + (f"collapse at degree {sweep.collapse_degree}." if sweep.collapse_degree is not None else "no collapse detected.")
    )
    return _emit(SWEEP_HEADER, rows, fmt, caption)


def render_table(obj: ComparisonGrid | SweepResult, fmt: str = "markdown", full_precision: bool = False) -> str:
    if isinstance(obj, ComparisonGrid):
        return render_grid(obj, fmt, full_precision)
    if isinstance(obj, SweepResult):
        return render_sweep(obj, fmt, full_precision)
    raise ReportError(f"cannot render {type(obj).__name__}")


# --- SVG ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlotSpec:
    points: Sequence[tuple[float, float]] = ()
    curve: Sequence[tuple[float, float]] = ()
    title: str = ""
    x_label: str = "x"
    y_label: str = "y"
    width: int = 720
    height: int = 480
    point_label: str = "Actual"
    curve_label: str = "Predicted"

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        crv = tuple((float(x), float(y)) for x, y in self.curve)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "curve", crv)
        if not all(math.isfinite(v) for p in pts + crv for v in p):
            raise ReportError("plot coordinates must be finite")
        if any(b[0] <= a[0] for a, b in zip(crv, crv[1:])):
            raise ReportError("curve x-values must be strictly increasing")
        if self.width <= 0 or self.height <= 0:
            raise ReportError("plot size must be positive")


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round-number ticks (steps of 1, 2 or 5 times a power of ten) inside [lo, hi]."""
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + step * 1e-9:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


def _tick_label(v: float) -> str:
    return f"{v:g}"


def emit_svg_plot(spec: PlotSpec) -> str:
    """Standalone SVG 1.1: one circle per point, one polyline for the curve, labelled axes."""
    coords = list(spec.points) + list(spec.curve)
    if not coords:
        raise ReportError("nothing to plot: no points and no curve")
    xs = [c[0] for c in coords]
    ys = [c[1] for c in coords]

    def padded(lo, hi):
        span = hi - lo
        pad = 0.05 * span if span > 0 else max(abs(lo) * 0.05, 0.5)
        return lo - pad, hi + pad

    x0, x1 = padded(min(xs), max(xs))
    y0, y1 = padded(min(ys), max(ys))
    left, right, top, bottom = 70, 20, 40, 55
    pw = spec.width - left - right
    ph = spec.height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (y1 - y) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}">',
        f"<title>{escape(spec.title)}</title>",
        f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="white"/>',
        f'<text x="{spec.width / 2:.1f}" y="22" text-anchor="middle" font-size="15" font-family="sans-serif">'
        f"{escape(spec.title)}</text>",
        '<g class="axes" stroke="black" stroke-width="1">',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}"/>',
        "</g>",
        '<g class="ticks" font-size="11" font-family="sans-serif">',
    ]
    for t in nice_ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{top + ph}" x2="{px(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in nice_ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{_tick_label(t)}</text>')
    out.append("</g>")
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{spec.height - 12}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif">{escape(spec.x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="13" font-family="sans-serif" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(spec.y_label)}</text>'
    )
    if spec.points:
        out.append(f'<g class="points" fill="steelblue" fill-opacity="0.6"><title>{escape(spec.point_label)}</title>')
        out.extend(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5"/>' for x, y in spec.points)
        out.append("</g>")
    if spec.curve:
        path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in spec.curve)
        out.append(
            f'<polyline class="curve" fill="none" stroke="red" stroke-width="2" points="{path}">'
            f"<title>{escape(spec.curve_label)}</title></polyline>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cell_plot(outcome: CellOutcome, title: str, samples: int = 400) -> PlotSpec:
    """Test scatter plus the fitted curve, both in standardized units."""
    xs, ys = outcome.x_test_scaled, outcome.y_test_scaled
    grid = np.linspace(float(xs.min()), float(xs.max()), samples)
    curve = outcome.model.predict_scaled(grid)
    return PlotSpec(
        points=list(zip(xs.tolist(), ys.tolist())),
        curve=list(zip(grid.tolist(), np.atleast_1d(curve).tolist())),
        title=title,
        x_label="Apple income (standardized)",
        y_label="Close price (standardized)",
    )


def series_plot(ts: TimeSeries, title: str | None = None) -> PlotSpec:
    """A raw series against decimal years."""
    years = [d.year + (d.timetuple().tm_yday - 1) / 365.25 for d in ts.dates]
    label = f"{ts.name} ({ts.unit})" if ts.unit else ts.name
    return PlotSpec(
        curve=list(zip(years, ts.values.tolist())),
        title=title or ts.name,
        x_label="Year",
        y_label=label,
        curve_label=ts.name,
    )


# --- download ---------------------------------------------------------------------


class FetchError(OSError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


def fetch_csv(url: str, destination: str | Path, timeout: float = 30.0) -> Path:
    """Download ``url`` verbatim to ``destination``; nothing is written on failure."""
    parsed = urlparse(url)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        raise FetchError(f"not an http(s) URL: {url!r}")
    dest = Path(destination)
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            status = resp.status
            if not 200 <= status < 300:
                raise FetchError(f"HTTP {status} for {url}", status)
            body = resp.read()
    except urllib.error.HTTPError as exc:
        raise FetchError(f"HTTP {exc.code} for {url}", exc.code) from None
    except urllib.error.URLError as exc:
        raise FetchError(f"cannot reach {url}: {exc.reason}") from None

    fd, tmp = tempfile.mkstemp(prefix=".fetch-", dir=dest.parent if str(dest.parent) else ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(body)
        os.replace(tmp, dest)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return dest
