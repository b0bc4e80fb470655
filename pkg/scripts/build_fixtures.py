"""Rebuild the bundled Apple fixtures under src/finprep/data/.

The quarterly net income figures (USD million, calendar quarter-end labels)
are transcribed from Apple's public quarterly filings. The daily close
series is a reconstruction: split-adjusted closes at quarter ends and a few
well-known turning points are pinned, and the sessions in between are
filled with a seeded log-Brownian bridge on the NYSE session calendar.
Rerunning this script reproduces the files byte for byte.

    python scripts/build_fixtures.py
"""

from datetime import date
from pathlib import Path

import numpy as np

from nyse_calendar import sessions

OUT = Path(__file__).resolve().parents[1] / "src" / "finprep" / "data"

INCOME = [
    1620, 1827, 2532, 3378, 3074, 3253, 4308, 6004, 5987, 7308,
    6623, 13064, 11622, 8824, 8223, 13078, 9547, 6900, 7512, 13072,
    10223, 7748, 8467, 18024, 13569, 10677, 11124, 18361, 10516, 7796,
    9014, 17891, 11029, 8717, 10714, 20065, 13822, 11519, 14125, 19965,
    11561, 10044, 13686, 22236, 11249, 11253, 12673, 28755, 23630, 21744,
    20551, 34630, 25010, 19442, 20721, 29998, 24160, 19881, 22956, 33916,
]

# (session date, split-adjusted close)
ANCHORS = [
    ("2009-01-02", 3.241), ("2009-03-09", 2.979), ("2009-03-31", 3.754),
    ("2009-06-30", 5.087), ("2009-09-30", 6.620), ("2009-12-31", 7.526),
    ("2010-03-31", 8.393), ("2010-06-30", 8.983), ("2010-09-30", 10.134),
    ("2010-12-31", 11.520), ("2011-03-31", 12.447), ("2011-06-30", 11.988),
    ("2011-09-30", 13.619), ("2011-12-30", 14.464), ("2012-03-30", 21.413),
    ("2012-06-29", 20.857), ("2012-09-19", 25.087), ("2012-09-28", 23.825),
    ("2012-12-31", 19.006), ("2013-03-28", 15.809), ("2013-04-19", 13.948),
    ("2013-06-28", 14.162), ("2013-09-30", 17.027), ("2013-12-31", 20.036),
    ("2014-03-31", 19.169), ("2014-06-30", 23.233), ("2014-09-30", 25.188),
    ("2014-12-31", 27.595), ("2015-03-31", 31.108), ("2015-06-30", 31.357),
    ("2015-08-24", 25.780), ("2015-09-30", 27.575), ("2015-12-31", 26.315),
    ("2016-03-31", 27.248), ("2016-05-12", 22.585), ("2016-06-30", 23.900),
    ("2016-09-30", 28.263), ("2016-12-30", 28.955), ("2017-03-31", 35.915),
    ("2017-06-30", 36.005), ("2017-09-29", 38.530), ("2017-12-29", 42.308),
    ("2018-03-29", 41.945), ("2018-06-29", 46.278), ("2018-09-28", 56.435),
    ("2018-10-03", 58.017), ("2018-12-31", 39.435), ("2019-01-03", 35.548),
    ("2019-03-29", 47.487), ("2019-06-28", 49.480), ("2019-09-30", 55.993),
    ("2019-12-31", 73.413), ("2020-02-12", 81.800), ("2020-03-23", 56.093),
    ("2020-03-31", 63.573), ("2020-06-30", 91.200), ("2020-09-01", 134.180),
    ("2020-09-30", 115.810), ("2020-12-31", 132.690), ("2021-01-26", 143.160),
    ("2021-03-31", 122.150), ("2021-06-30", 136.960), ("2021-09-30", 141.500),
    ("2021-12-31", 177.570), ("2022-01-03", 182.010), ("2022-03-31", 174.610),
    ("2022-06-16", 130.060), ("2022-06-30", 136.720), ("2022-08-17", 174.550),
    ("2022-09-30", 138.200), ("2022-12-30", 129.930), ("2023-01-05", 125.020),
    ("2023-03-31", 164.900), ("2023-06-30", 193.970), ("2023-07-31", 196.450),
    ("2023-09-29", 171.210), ("2023-10-26", 166.890), ("2023-12-14", 198.110),
    ("2023-12-29", 192.530),
]

DAILY_VOL = 0.0175
SEED = 20090102


def quarter_ends():
    return [date(y, m, d) for y in range(2009, 2024) for m, d in ((3, 31), (6, 30), (9, 30), (12, 31))]


def bridge_prices(days, anchors, rng):
    index = {d: i for i, d in enumerate(days)}
    pins = [(index[date.fromisoformat(d)], np.log(p)) for d, p in anchors]
    logp = np.empty(len(days))
    for (i0, v0), (i1, v1) in zip(pins[:-1], pins[1:]):
        steps = i1 - i0
        walk = np.concatenate([[0.0], np.cumsum(rng.normal(0.0, DAILY_VOL, steps))])
        t = np.arange(steps + 1) / steps
        logp[i0:i1 + 1] = v0 + (v1 - v0) * t + walk - t * walk[-1]
    return np.exp(logp)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    qe = quarter_ends()
    assert len(qe) == len(INCOME) == 60
    with open(OUT / "apple_quarterly_income.csv", "w", newline="\n") as fh:
        fh.write("date,net_income\n")
        for d, v in zip(qe, INCOME):
            fh.write(f"{d.isoformat()},{v}\n")

    days = sessions(date(2009, 1, 2), date(2023, 12, 29))
    rng = np.random.Generator(np.random.PCG64(SEED))
    closes = bridge_prices(days, ANCHORS, rng)
    with open(OUT / "apple_daily_close.csv", "w", newline="\n") as fh:
        fh.write("date,close\n")
        for d, v in zip(days, closes):
            fh.write(f"{d.isoformat()},{v:.6f}\n")
    print(f"wrote {len(qe)} income rows and {len(days)} price rows to {OUT}")


if __name__ == "__main__":
    main()
