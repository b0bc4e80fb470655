"""Bundled Apple reference series (see ``scripts/build_fixtures.py``)."""

from __future__ import annotations

from importlib import resources

from .series import TimeSeries, parse_csv

INCOME_FILE = "apple_quarterly_income.csv"
PRICE_FILE = "apple_daily_close.csv"


def fixture_bytes(filename: str) -> bytes:
    return resources.files("finprep").joinpath("data", filename).read_bytes()


def load_income() -> TimeSeries:
    """Quarterly net income, USD million, 2009-03-31 .. 2023-12-31 (60 rows)."""
    return parse_csv(fixture_bytes(INCOME_FILE), "net_income", name="Apple income", unit="USD million")


def load_price() -> TimeSeries:
    """Daily close, USD, 2009-01-02 .. 2023-12-29 (3774 sessions)."""
    return parse_csv(fixture_bytes(PRICE_FILE), "close", name="Close price", unit="USD")
