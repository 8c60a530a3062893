"""Unevenly-spaced series utilities: bucket resampling, the incremental
simple moving average, and inter-arrival spacing statistics."""

from dataclasses import dataclass

import numpy as np

from .codecs import mad
from .errors import ContractViolation

RESAMPLE_FNS = ("avg", "min", "max", "count", "sum")


def resample(rows, bucket, agg="avg", origin=0):
    """Bucket a (time, value) iterable and aggregate each non-empty bucket.

    Buckets are aligned to multiples of `bucket` since the epoch by
    default; pass `origin` to shift the grid. Returns (bucket start,
    aggregate) pairs in time order, empty buckets omitted.
    """
    if bucket <= 0:
        raise ContractViolation(f"bucket must be positive, got {bucket}")
    if isinstance(agg, str):
        if agg not in RESAMPLE_FNS:
            raise ContractViolation(f"unknown aggregate {agg!r}")
        fn = _FOLDS[agg]
    else:
        fn = agg
    buckets = {}
    for t, v in rows:
        start = origin + (t - origin) // bucket * bucket
        buckets.setdefault(start, []).append(v)
    return [(start, fn(buckets[start])) for start in sorted(buckets)]


_FOLDS = {
    "avg": lambda vs: sum(vs) / len(vs),
    "min": min,
    "max": max,
    "count": len,
    "sum": sum,
}


@dataclass(frozen=True)
class SmaSeries:
    """Observation times, values and a positive trailing horizon in ticks."""

    times: tuple
    values: tuple
    tau: int

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ContractViolation("times and values must have equal length")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ContractViolation("observation times must be non-decreasing")
        if self.tau <= 0:
            raise ContractViolation(f"time horizon must be positive, got {self.tau}")


def sma(series):
    """Trailing moving average of the last-observation-carried-forward step
    function over (t - tau, t], one output per observation.

    Incremental area maintenance: expand the window on the right with the
    carried value, drop the old truncated left strip, advance the left
    edge past expired observations and re-add the new truncated strip.
    Before the first observation the window is padded with the first
    value, so the first output equals it exactly.
    """
    if isinstance(series, SmaSeries):
        times, values, tau = series.times, series.values, series.tau
    else:
        times, values, tau = series
    n = len(times)
    if n == 0:
        raise ContractViolation("SMA of an empty series")
    if tau <= 0:
        raise ContractViolation(f"time horizon must be positive, got {tau}")
    out = [(times[0], values[0])]
    left = 0
    left_area = values[0] * tau
    area = left_area
    for right in range(1, n):
        area += values[right - 1] * (times[right] - times[right - 1])
        area -= left_area
        t_left_new = times[right] - tau
        while times[left] <= t_left_new:
            area -= values[left] * (times[left + 1] - times[left])
            left += 1
        left_area = values[max(0, left - 1)] * (times[left] - t_left_new)
        area += left_area
        out.append((times[right], area / tau))
    return out


@dataclass(frozen=True)
class SpacingReport:
    mad: float
    iqr: float
    classification: str


def spacing_report(times):
    """MAD and IQR of consecutive deltas; MAD of zero means evenly spaced.

    The median absolute deviation is robust to outliers: a handful of long
    gaps in an otherwise periodic series still reports as evenly spaced.
    """
    times = list(times)
    if len(times) < 2:
        raise ContractViolation("spacing report needs at least 2 observations")
    deltas = [b - a for a, b in zip(times, times[1:])]
    m = mad(deltas)
    q25, q75 = np.percentile(deltas, [25, 75])
    label = "evenly-spaced" if m == 0 else "unevenly-spaced"
    return SpacingReport(mad=float(m), iqr=float(q75 - q25), classification=label)
