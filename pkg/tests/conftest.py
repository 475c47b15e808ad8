"""Shared fixtures and synthetic-data builders for the test suite."""
from __future__ import annotations

import calendar
import json
import math

import numpy as np
import pytest

from zonalclim.geom import Region, RegionSet, parse_geojson
from zonalclim.grid import GridSpec, Raster, RasterSeries


def rect_ring(x0, y0, x1, y1):
    """Closed CCW rectangle ring."""
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0))


def cw(ring):
    return tuple(reversed(ring))


def region(region_id, polygons, level="L0", parent_id=None, name=""):
    return Region(region_id=region_id, name=name or region_id, level=level,
                  parent_id=parent_id, polygons=tuple(tuple(p) for p in polygons))


def star_ring(rng: np.random.Generator, cx: float, cy: float,
              r_min: float, r_max: float, n_verts: int = 10):
    """Simple (non-self-intersecting) closed CCW star polygon ring."""
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n_verts))
    radii = rng.uniform(r_min, r_max, n_verts)
    pts = [(cx + r * math.cos(a), cy + r * math.sin(a))
           for a, r in zip(angles, radii)]
    pts.append(pts[0])
    return tuple(pts)


def random_polygons(rng: np.random.Generator, cx: float, cy: float,
                    scale: float, with_hole: bool = False):
    """One random multipolygon, optionally with a centered hole."""
    outer = star_ring(rng, cx, cy, 0.5 * scale, scale, int(rng.integers(8, 14)))
    rings = [outer]
    if with_hole:
        # hole radius bounded so the star boundary cannot dip inside it
        hole = star_ring(rng, cx, cy, 0.1 * scale, 0.25 * scale,
                         int(rng.integers(6, 10)))
        rings.append(cw(hole))
    return (tuple(rings),)


def feature(region_id, polygons, level=0, parent_id=None, name=None):
    """GeoJSON feature dict from ring tuples (MultiPolygon encoding)."""
    props = {"region_id": region_id, "name": name or region_id, "level": level}
    if parent_id is not None:
        props["parent_id"] = parent_id
    coords = [[[list(pt) for pt in ring] for ring in poly] for poly in polygons]
    return {"type": "Feature", "properties": props,
            "geometry": {"type": "MultiPolygon", "coordinates": coords}}


def feature_collection(*features):
    return json.dumps({"type": "FeatureCollection",
                       "features": list(features)}).encode()


# ---------------------------------------------------------------------------
# Synthetic world: 6x6 half-degree grid over lon [0, 3] x lat [0, 3].
# Country AAA is the western three columns; country BBB is the eastern three,
# split along the cell diagonals from (1.5, 1.5) to (3, 3) into BBB.1 (the
# north-western wedge) and BBB.2 (the rest). All region edges except the
# wedge diagonal lie on cell boundaries, so coverage fractions are exactly
# 1 or 0.5 and every expected value below is computable by hand.
# ---------------------------------------------------------------------------

WORLD_SPEC = GridSpec(6, 6, 0.0, 3.0, 0.5, "corner")


def world_geojson_l0():
    a = [(rect_ring(0.0, 0.0, 1.5, 3.0),)]
    b = [(rect_ring(1.5, 0.0, 3.0, 3.0),)]
    return feature_collection(feature("AAA", a, level=0),
                              feature("BBB", b, level=0))


def world_geojson_l1():
    a1 = [(rect_ring(0.0, 0.0, 1.5, 3.0),)]
    # wedge north-west of the diagonal lat=lon between (1.5, 1.5) and (3, 3)
    b1_ring = ((1.5, 1.5), (3.0, 3.0), (1.5, 3.0), (1.5, 1.5))
    b1 = [(b1_ring,)]
    # complement of the wedge inside BBB
    b2_ring = ((1.5, 0.0), (3.0, 0.0), (3.0, 3.0), (1.5, 1.5), (1.5, 0.0))
    b2 = [(b2_ring,)]
    return feature_collection(
        feature("AAA.1", a1, level=1, parent_id="AAA"),
        feature("BBB.1", b1, level=1, parent_id="BBB"),
        feature("BBB.2", b2, level=1, parent_id="BBB"))


def world_regions(level="L0"):
    data = world_geojson_l0() if level == "L0" else world_geojson_l1()
    return parse_geojson(data, level=level)


def world_population_density():
    """Density plane with one masked cell; density[r, c] = 1 + r + 2c."""
    vals = np.array([[1.0 + r + 2 * c for c in range(6)] for r in range(6)])
    mask = np.zeros((6, 6), dtype=bool)
    mask[5, 0] = True
    return Raster(WORLD_SPEC, vals, mask, "population_density", "2010")


def world_nightlight_fine():
    """12x12 fine radiance plane (block factor 2) plus three reference years."""
    fine_spec = GridSpec(12, 12, 0.0, 3.0, 0.25, "corner")
    vals = np.array([[(r * 12 + c) % 7 + 0.5 for c in range(12)]
                     for r in range(12)])
    target = Raster(fine_spec, vals, np.zeros((12, 12), bool), "nightlight", "2015")
    refs = tuple(
        Raster(fine_spec, np.full((12, 12), 1.0 + i), np.zeros((12, 12), bool),
               "nightlight", str(2000 + 5 * i))
        for i in range(3))
    return target, refs


def world_climate_series(n_frames=24, masked_cell=True):
    """Monthly temperature frames x[t][r, c] = 10 + r + 2c + 0.25t."""
    frames = []
    for t in range(n_frames):
        year = 2000 + t // 12
        month = t % 12 + 1
        vals = np.array([[10.0 + r + 2 * c + 0.25 * t for c in range(6)]
                         for r in range(6)])
        mask = np.zeros((6, 6), dtype=bool)
        if masked_cell and t == 5:
            mask[0, 0] = True
        frames.append(Raster(WORLD_SPEC, vals, mask, "temperature",
                             f"{year:04d}-{month:02d}"))
    return RasterSeries(WORLD_SPEC, tuple(frames), "monthly")


def world_daily_series(year=2003, months=(1, 2)):
    """Daily temperature frames with a deterministic sawtooth per cell."""
    frames = []
    t = 0
    for m in months:
        for d in range(1, calendar.monthrange(year, m)[1] + 1):
            vals = np.array([[10.0 + r + 2 * c + 6.0 * math.sin(0.4 * t)
                              for c in range(6)] for r in range(6)])
            frames.append(Raster(WORLD_SPEC, vals, np.zeros((6, 6), bool),
                                 "temperature", f"{year:04d}-{m:02d}-{d:02d}"))
            t += 1
    return RasterSeries(WORLD_SPEC, tuple(frames), "daily")


def world_weights(level_spec=None):
    """The three weight grids of the synthetic world."""
    from zonalclim.weights import (aurora_correct, downsample_block_mean,
                                   population_weight, unweighted)

    spec = level_spec or WORLD_SPEC
    wu = unweighted(spec)
    wp = population_weight(world_population_density(), spec)
    fine, refs = world_nightlight_fine()
    coarse = downsample_block_mean(fine, 2)
    coarse_refs = [downsample_block_mean(r, 2) for r in refs]
    corrected = aurora_correct(coarse, coarse_refs)
    from zonalclim.weights import WeightGrid
    wn = WeightGrid(spec, corrected.values, "nightlight", 2015)
    return {"unweighted": wu, "population": wp, "nightlight": wn}


def build_world_store(root):
    """Populate a dataset store from the synthetic world; returns the tables."""
    from zonalclim.catalog import DatasetKey, Store, make_meta
    from zonalclim.geom import build_coverage
    from zonalclim.temporal import upscale
    from zonalclim.zonal import aggregate_series

    store = Store(root)
    tables = {}
    weights = world_weights()
    monthly = world_climate_series()
    daily = world_daily_series()
    for level in ("L0", "L1"):
        cov = build_coverage(WORLD_SPEC, world_regions(level))
        for kind, w in weights.items():
            table = aggregate_series(monthly, cov, w)
            year = {"unweighted": None, "population": 2010,
                    "nightlight": 2015}[kind]
            key = DatasetKey("custom", "temperature", level, kind, year,
                             "monthly")
            store.store(table, make_meta(key, table))
            tables[key.slug()] = table
        if level == "L0":
            annual = upscale(tables["custom_temperature_L0_unweighted_none_monthly"],
                             "annual", "mean")
            key = DatasetKey("custom", "temperature", "L0", "unweighted", None,
                             "annual")
            store.store(annual, make_meta(key, annual))
            tables[key.slug()] = annual
            daily_table = aggregate_series(daily, cov, weights["unweighted"])
            key = DatasetKey("ERA5", "temperature", "L0", "unweighted", None,
                             "daily")
            store.store(daily_table, make_meta(key, daily_table))
            tables[key.slug()] = daily_table
    store.store_boundaries("L0", world_geojson_l0())
    store.store_boundaries("L1", world_geojson_l1())
    return store, tables


@pytest.fixture(scope="session")
def world_store(tmp_path_factory):
    root = tmp_path_factory.mktemp("world-store")
    store, tables = build_world_store(root)
    return store, tables


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose per-phase outcomes so the acceptance suite can print its
    # one-line pass/fail report per criterion
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)
