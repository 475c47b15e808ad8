"""The weighted-aggregation kernel: raster values reduced over a coverage
matrix with a weight grid into per-region series.

For region i the value is

    y_i = sum_j a_j f_ij w_j x_j / sum_j a_j f_ij w_j

over the region's covered cells j with unmasked x; masked cells drop out of
both sums, and a zero denominator yields a missing value. Terms are
accumulated with exact (Shewchuk) summation in fixed row-major cell order,
so results are bit-identical regardless of how work is distributed.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ShapeError, ValidationError
from .geom import CoverageMatrix
from .grid import FREQUENCIES, Raster, RasterSeries, validate_timestamp
from .weights import WeightGrid

Value = Optional[float]
Row = tuple[str, str, Value]


@dataclass(frozen=True)
class SeriesTable:
    """Region x time table of aggregated values, kept in canonical
    (region_id, timestamp) order with missing values as None."""

    level: str
    variable: str
    units: str
    weighting: str
    base_year: int | None
    frequency: str
    rows: tuple[Row, ...]

    def __post_init__(self):
        if self.frequency not in FREQUENCIES:
            raise ValidationError(f"unknown frequency {self.frequency!r}")
        rows = tuple(sorted(self.rows))
        keys = [(rid, ts) for rid, ts, _ in rows]
        if len(set(keys)) != len(keys):
            raise ValidationError("duplicate (region_id, timestamp) rows")
        for _, ts, _ in rows:
            validate_timestamp(ts, self.frequency)
        object.__setattr__(self, "rows", rows)

    def region_ids(self) -> list[str]:
        return sorted({rid for rid, _, _ in self.rows})

    def timestamps(self) -> list[str]:
        return sorted({ts for _, ts, _ in self.rows})

    def value_at(self, region_id: str, timestamp: str) -> Value:
        for rid, ts, v in self.rows:
            if rid == region_id and ts == timestamp:
                return v
        raise KeyError((region_id, timestamp))

    def span(self) -> tuple[str, str]:
        ts = self.timestamps()
        return (ts[0], ts[-1])


def aggregate(x: Raster, cov: CoverageMatrix, w: WeightGrid) -> dict[str, Value]:
    """One frame of the weighted mean; returns region_id -> value or None."""
    if x.spec != cov.spec:
        raise ShapeError("raster grid spec does not match the coverage matrix")
    if w.spec != cov.spec:
        raise ShapeError("weight grid spec does not match the coverage matrix")
    out: dict[str, Value] = {}
    for rid, e in cov.entries.items():
        if len(e) == 0:
            out[rid] = None
            continue
        xv = x.values[e.rows, e.cols]
        keep = ~x.missing[e.rows, e.cols]
        terms = e.areas[keep] * e.fracs[keep] * w.values[e.rows[keep], e.cols[keep]]
        den = math.fsum(terms)
        if den == 0.0:
            out[rid] = None
            continue
        num = math.fsum(terms * xv[keep])
        out[rid] = num / den
    return out


def aggregate_series(xs: RasterSeries, cov: CoverageMatrix, w: WeightGrid,
                     jobs: int | None = None) -> SeriesTable:
    """Apply the kernel to every frame of a series."""
    if jobs is not None and jobs > 1 and len(xs.frames) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            frames = list(pool.map(lambda fr: aggregate(fr, cov, w), xs.frames))
    else:
        frames = [aggregate(fr, cov, w) for fr in xs.frames]
    rows: list[Row] = []
    for frame, values in zip(xs.frames, frames):
        for rid in sorted(values):
            rows.append((rid, frame.timestamp, values[rid]))
    return SeriesTable(
        level=cov.level,
        variable=xs.variable,
        units=xs.frames[0].units,
        weighting=w.kind,
        base_year=w.base_year,
        frequency=xs.frequency,
        rows=tuple(rows),
    )
