"""NYSE full-day closures 2009-2023, enough to rebuild the session calendar."""

from datetime import date, timedelta

from dateutil.easter import easter

SPECIAL_CLOSURES = {
    date(2012, 10, 29),  # Hurricane Sandy
    date(2012, 10, 30),
    date(2018, 12, 5),  # national day of mourning
}


def _nth_weekday(year, month, weekday, n):
    d = date(year, month, 1)
    d += timedelta(days=(weekday - d.weekday()) % 7)
    return d + timedelta(weeks=n - 1)


def _last_weekday(year, month, weekday):
    d = date(year, month + 1, 1) - timedelta(days=1)
    return d - timedelta(days=(d.weekday() - weekday) % 7)


def _observed(d, saturday_rule=True):
    if d.weekday() == 5:
        return d - timedelta(days=1) if saturday_rule else None
    if d.weekday() == 6:
        return d + timedelta(days=1)
    return d


def holidays(year):
    out = {
        _observed(date(year, 1, 1), saturday_rule=False),
        _nth_weekday(year, 1, 0, 3),
        _nth_weekday(year, 2, 0, 3),
        easter(year) - timedelta(days=2),
        _last_weekday(year, 5, 0),
        _observed(date(year, 7, 4)),
        _nth_weekday(year, 9, 0, 1),
        _nth_weekday(year, 11, 3, 4),
        _observed(date(year, 12, 25)),
    }
    if year >= 2022:
        out.add(_observed(date(year, 6, 19)))
    out.discard(None)
    return out


def sessions(start, end):
    closed = set(SPECIAL_CLOSURES)
    for y in range(start.year, end.year + 1):
        closed |= holidays(y)
    d = start
    out = []
    while d <= end:
        if d.weekday() < 5 and d not in closed:
            out.append(d)
        d += timedelta(days=1)
    return out
