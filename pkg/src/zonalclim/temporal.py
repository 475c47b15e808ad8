"""Frequency conversion and extreme-day counting on aggregated series."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import FrequencyError, UnsupportedVariableError, ValidationError
from .zonal import SeriesTable

_FINENESS = {"daily": 0, "monthly": 1, "annual": 2}
_PERIOD_PREFIX = {"month": 7, "year": 4}
THRESHOLD_MODES = ("absolute", "quantile")
PERIODS = ("month", "year")


@dataclass(frozen=True)
class ThresholdSpec:
    """Absolute (variable units) or quantile (q in [0, 1]) exceedance threshold,
    counted per calendar month or year."""

    mode: str
    value: float
    period: str

    def __post_init__(self):
        if self.mode not in THRESHOLD_MODES:
            raise ValidationError(f"unknown threshold mode {self.mode!r}")
        if self.period not in PERIODS:
            raise ValidationError(f"unknown threshold period {self.period!r}")
        if self.mode == "quantile" and not 0.0 <= self.value <= 1.0:
            raise ValidationError("quantile threshold must lie in [0, 1]")


def empirical_quantile(values, q: float) -> float:
    """Linear interpolation between order statistics: h = q*(n-1)."""
    v = sorted(values)
    if not v:
        raise ValidationError("quantile of an empty collection")
    if not 0.0 <= q <= 1.0:
        raise ValidationError("q must lie in [0, 1]")
    n = len(v)
    if n == 1:
        return float(v[0])
    h = q * (n - 1)
    lo = math.floor(h)
    if lo >= n - 1:
        return float(v[-1])
    return float(v[lo] + (h - lo) * (v[lo + 1] - v[lo]))


def upscale(table: SeriesTable, target: str, stat: str) -> SeriesTable:
    """Regroup a table to calendar months or years.

    mean/sum run over the group's present values, but any explicitly missing
    value poisons the whole group (strict completeness).
    """
    if target not in ("monthly", "annual"):
        raise FrequencyError(f"cannot upscale to {target!r}")
    if stat not in ("mean", "sum"):
        raise ValidationError(f"unknown statistic {stat!r}")
    if table.variable == "spei":
        raise UnsupportedVariableError("spei cannot be linearly aggregated")
    if _FINENESS[table.frequency] >= _FINENESS[target]:
        raise FrequencyError(
            f"target {target!r} is not coarser than source {table.frequency!r}")

    prefix = 7 if target == "monthly" else 4
    groups: dict[tuple[str, str], list[float | None]] = {}
    for rid, ts, v in table.rows:
        groups.setdefault((rid, ts[:prefix]), []).append(v)

    rows = []
    for (rid, period), vals in sorted(groups.items()):
        if any(v is None for v in vals):
            rows.append((rid, period, None))
        elif stat == "mean":
            rows.append((rid, period, math.fsum(vals) / len(vals)))
        else:
            rows.append((rid, period, math.fsum(vals)))
    return SeriesTable(table.level, table.variable, table.units,
                       table.weighting, table.base_year, target, tuple(rows))


def count_exceedance_days(daily: SeriesTable, spec: ThresholdSpec) -> SeriesTable:
    """Days per period on which a region's value strictly exceeds the threshold.

    Quantile thresholds are taken on each region's full daily history,
    irrespective of the counting period. Missing days neither count nor enter
    the historical distribution; a region with no present day at all has no
    quantile threshold and yields missing counts in quantile mode.
    """
    if daily.frequency != "daily":
        raise FrequencyError(
            f"exceedance counting needs daily input, got {daily.frequency!r}")
    prefix = _PERIOD_PREFIX[spec.period]
    periods = sorted({ts[:prefix] for _, ts, _ in daily.rows})

    by_region: dict[str, list[tuple[str, float | None]]] = {}
    for rid, ts, v in daily.rows:
        by_region.setdefault(rid, []).append((ts, v))

    rows: list[tuple[str, str, float | None]] = []
    for rid in sorted(by_region):
        present = [v for _, v in by_region[rid] if v is not None]
        if spec.mode == "absolute":
            threshold = spec.value
        elif present:
            threshold = empirical_quantile(present, spec.value)
        else:
            rows.extend((rid, p, None) for p in periods)
            continue
        counts = {p: 0 for p in periods}
        for ts, v in by_region[rid]:
            if v is not None and v > threshold:
                counts[ts[:prefix]] += 1
        rows.extend((rid, p, counts[p]) for p in periods)

    out_freq = "monthly" if spec.period == "month" else "annual"
    return SeriesTable(daily.level, daily.variable, "days", daily.weighting,
                       daily.base_year, out_freq, tuple(rows))
