#!/usr/bin/env python3
"""Build the synthetic-world dataset store the frontend tests run against.

Usage: make_store.py <store_dir>
"""
import json
import math
import sys

import numpy as np

from zonalclim.catalog import DatasetKey, Store, make_meta
from zonalclim.geom import build_coverage, parse_geojson
from zonalclim.grid import GridSpec, Raster, RasterSeries
from zonalclim.temporal import upscale
from zonalclim.weights import population_weight, unweighted
from zonalclim.zonal import aggregate_series

SPEC = GridSpec(6, 6, 0.0, 3.0, 0.5, "corner")


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]


def feature(region_id, ring, level, parent=None):
    props = {"region_id": region_id, "name": region_id, "level": level}
    if parent:
        props["parent_id"] = parent
    return {"type": "Feature", "properties": props,
            "geometry": {"type": "Polygon", "coordinates": [ring]}}


GEOJSON = {
    "L0": json.dumps({"type": "FeatureCollection", "features": [
        feature("AAA", rect(0, 0, 1.5, 3), 0),
        feature("BBB", rect(1.5, 0, 3, 3), 0),
    ]}).encode(),
    "L1": json.dumps({"type": "FeatureCollection", "features": [
        feature("AAA.1", rect(0, 0, 1.5, 3), 1, "AAA"),
        feature("BBB.1", [[1.5, 1.5], [3.0, 3.0], [1.5, 3.0], [1.5, 1.5]], 1, "BBB"),
        feature("BBB.2", [[1.5, 0.0], [3.0, 0.0], [3.0, 3.0], [1.5, 1.5], [1.5, 0.0]],
                1, "BBB"),
    ]}).encode(),
}


def monthly_series():
    frames = []
    for t in range(24):
        year, month = 2000 + t // 12, t % 12 + 1
        vals = np.array([[10.0 + r + 2 * c + 0.25 * t for c in range(6)]
                         for r in range(6)])
        frames.append(Raster(SPEC, vals, np.zeros((6, 6), bool), "temperature",
                             f"{year}-{month:02d}"))
    return RasterSeries(SPEC, tuple(frames), "monthly")


def daily_series():
    import calendar
    frames = []
    t = 0
    for m in (1, 2):
        for d in range(1, calendar.monthrange(2003, m)[1] + 1):
            vals = np.array([[10.0 + r + 2 * c + 6.0 * math.sin(0.4 * t)
                              for c in range(6)] for r in range(6)])
            frames.append(Raster(SPEC, vals, np.zeros((6, 6), bool),
                                 "temperature", f"2003-{m:02d}-{d:02d}"))
            t += 1
    return RasterSeries(SPEC, tuple(frames), "daily")


def main(store_dir):
    store = Store(store_dir)
    density = Raster(SPEC, np.array([[1.0 + r + 2 * c for c in range(6)]
                                     for r in range(6)]),
                     np.zeros((6, 6), bool), "population_density", "2010")
    weights = {"unweighted": unweighted(SPEC),
               "population": population_weight(density, SPEC, 2010)}
    monthly = monthly_series()
    for level in ("L0", "L1"):
        cov = build_coverage(SPEC, parse_geojson(GEOJSON[level], level=level))
        for kind, w in weights.items():
            table = aggregate_series(monthly, cov, w)
            key = DatasetKey("custom", "temperature", level, kind, w.base_year,
                             "monthly")
            store.store(table, make_meta(key, table, "fixture"))
            annual = upscale(table, "annual", "mean")
            akey = DatasetKey("custom", "temperature", level, kind, w.base_year,
                              "annual")
            store.store(annual, make_meta(akey, annual, "fixture"))
        if level == "L0":
            daily = aggregate_series(daily_series(), cov, weights["unweighted"])
            key = DatasetKey("ERA5", "temperature", "L0", "unweighted", None,
                             "daily")
            store.store(daily, make_meta(key, daily, "fixture"))
        store.store_boundaries(level, GEOJSON[level])
    print(f"store ready at {store_dir}: {len(store.list_meta())} datasets")


if __name__ == "__main__":
    main(sys.argv[1])
