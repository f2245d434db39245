#!/usr/bin/env python3
"""Recompute a bench summary from its CSV rows alone.

Deliberately independent of the subsum package: parses the CSV with the
standard library and rebuilds every summary statistic, so a bench
summary can be audited to the last digit:

    python scripts/recompute_summary.py results.csv

prints a JSON object matching the statistics block of
``results.summary.json``.
"""

import csv
import json
import math
import sys


def wilson(successes, trials, z=1.959963984540054):
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    margin = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(center - margin, 0.0), min(center + margin, 1.0)


def percentile(values, q):
    if not values:
        return math.nan
    xs = sorted(values)
    h = (len(xs) - 1) * (q / 100.0)
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def recompute(path):
    rows = list(csv.DictReader(open(path, newline="")))
    trials = len(rows)
    failures = sum(1 for r in rows if r["success"] != "1")
    aborts = sum(1 for r in rows if r["aborted"] == "1")
    draws = [int(r["prop_draws"]) + int(r["unif_draws"]) for r in rows]
    lo, hi = wilson(failures, trials)
    return {
        "trials": trials,
        "failures": failures,
        "failure_rate": failures / trials if trials else math.nan,
        "failure_ci95_low": lo,
        "failure_ci95_high": hi,
        "aborts": aborts,
        "abort_rate": aborts / trials if trials else math.nan,
        "mean_draws": math.fsum(draws) / trials if trials else math.nan,
        "p95_draws": percentile(draws, 95.0),
        "mean_wall_time": math.fsum(float(r["wall_time"]) for r in rows) / trials
        if trials
        else math.nan,
    }


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit("usage: recompute_summary.py <bench.csv>")
    json.dump(recompute(sys.argv[1]), sys.stdout, indent=2, sort_keys=True)
    print()
