"""Administrative boundaries, exact polygon/cell coverage, and the coverage matrix.

Coverage fractions are computed in planar lon/lat degrees: each ring is
clipped against the cell rectangle with Sutherland-Hodgman half-plane passes
and measured with the shoelace formula; holes are clipped separately and
subtracted. Sphericity enters the weighting scheme only through the
spherical cell areas attached to each coverage entry.
"""
from __future__ import annotations

import bisect
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Union

import numpy as np

from .errors import ParseError, ShapeError, ValidationError
from .grid import GridSpec, cell_area, cell_bounds, cell_planar_area

LEVELS = ("L0", "L1")

Point = tuple[float, float]
Ring = tuple[Point, ...]          # closed: first vertex == last
Polygon = tuple[Ring, ...]        # outer ring first (CCW), then holes (CW)


def ring_signed_area(ring: Iterable[Point]) -> float:
    """Shoelace signed area; positive for counter-clockwise rings."""
    pts = list(ring)
    acc = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        acc += x0 * y1 - x1 * y0
    return acc / 2.0


@dataclass(frozen=True)
class Region:
    """One administrative unit with a multipolygon geometry."""

    region_id: str
    name: str
    level: str
    parent_id: str | None
    polygons: tuple[Polygon, ...]

    def __post_init__(self):
        if not self.region_id or any(ch.isspace() or ch == "," for ch in self.region_id):
            raise ValidationError(
                f"region_id {self.region_id!r} must be non-empty without spaces/commas")
        if self.level not in LEVELS:
            raise ValidationError(f"unknown level {self.level!r}")
        if self.level == "L1" and not self.parent_id:
            raise ValidationError(f"L1 region {self.region_id!r} needs a parent_id")
        for poly in self.polygons:
            for i, ring in enumerate(poly):
                if ring[0] != ring[-1]:
                    raise ValidationError(f"ring of {self.region_id!r} is not closed")
                signed = ring_signed_area(ring)
                if i == 0 and signed < 0 or i > 0 and signed > 0:
                    raise ValidationError(
                        f"ring orientation of {self.region_id!r} violates convention")

    def planar_area(self) -> float:
        """Polygon area in degrees² (outer rings minus holes)."""
        total = 0.0
        for poly in self.polygons:
            for ring in poly:
                total += ring_signed_area(ring)  # holes are CW, hence negative
        return total

    def bbox(self) -> tuple[float, float, float, float] | None:
        """(lon_min, lat_min, lon_max, lat_max) over outer rings, or None if empty."""
        xs: list[float] = []
        ys: list[float] = []
        for poly in self.polygons:
            for x, y in poly[0]:
                xs.append(x)
                ys.append(y)
        if not xs:
            return None
        return (min(xs), min(ys), max(xs), max(ys))


@dataclass(frozen=True)
class RegionSet:
    level: str
    regions: tuple[Region, ...]

    def __post_init__(self):
        ids = [r.region_id for r in self.regions]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate region_ids in RegionSet")
        for r in self.regions:
            if r.level != self.level:
                raise ValidationError(
                    f"region {r.region_id!r} has level {r.level}, set is {self.level}")

    def by_id(self) -> dict[str, Region]:
        return {r.region_id: r for r in self.regions}


# ---------------------------------------------------------------------------
# GeoJSON ingestion
# ---------------------------------------------------------------------------

def _normalize_level(raw) -> str:
    if raw in (0, "0", "L0"):
        return "L0"
    if raw in (1, "1", "L1"):
        return "L1"
    raise ValueError(f"unknown level {raw!r}")


def _clean_ring(coords, idx: int) -> Ring | None:
    """Validate and normalize one GeoJSON ring; None if degenerate."""
    if len(coords) < 2:
        raise ParseError("ring has fewer than 2 positions", feature=idx)
    pts = [(float(x), float(y)) for x, y, *_ in coords]
    if pts[0] != pts[-1]:
        raise ParseError("unclosed ring (first vertex != last)", feature=idx)
    for (x0, _), (x1, _) in zip(pts, pts[1:]):
        if abs(x1 - x0) > 180.0:
            raise ParseError(
                "ring jumps more than 180 degrees of longitude; "
                "split geometries at the antimeridian", feature=idx)
    if len(set(pts[:-1])) < 3 or ring_signed_area(pts) == 0.0:
        return None
    return tuple(pts)


def _normalize_polygon(rings, idx: int) -> Polygon | None:
    cleaned: list[Ring] = []
    for i, coords in enumerate(rings):
        ring = _clean_ring(coords, idx)
        if ring is None:
            warnings.warn(f"dropping degenerate ring in feature {idx}")
            if i == 0:
                return None  # outer ring gone: drop the whole polygon
            continue
        signed = ring_signed_area(ring)
        want_ccw = i == 0
        if (signed > 0) != want_ccw:
            ring = tuple(reversed(ring))
        cleaned.append(ring)
    return tuple(cleaned) if cleaned else None


def parse_geojson(source: Union[bytes, str, Path, BinaryIO],
                  level: str | None = None) -> RegionSet:
    """Parse a FeatureCollection of Polygon/MultiPolygon features.

    Features carry properties region_id, name, level and (for L1) parent_id.
    Ring orientation is normalized to outer-CCW / holes-CW regardless of the
    input. When `level` is given only features of that level are kept;
    otherwise all features must share one level.
    """
    import json

    if isinstance(source, (str, Path)) and "{" not in str(source):
        data = Path(source).read_bytes()
    elif isinstance(source, (bytes, str)):
        data = source if isinstance(source, bytes) else source.encode()
    else:
        data = source.read()
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError("expected a GeoJSON FeatureCollection")

    if level is not None and level not in LEVELS:
        raise ValidationError(f"unknown level {level!r}")

    regions: list[Region] = []
    seen: set[str] = set()
    for idx, feature in enumerate(doc.get("features", [])):
        props = feature.get("properties") or {}
        geometry = feature.get("geometry") or {}
        gtype = geometry.get("type")
        if gtype not in ("Polygon", "MultiPolygon"):
            raise ParseError(f"unsupported geometry type {gtype!r}", feature=idx)
        region_id = props.get("region_id")
        if not region_id:
            raise ParseError("missing region_id property", feature=idx)
        try:
            feat_level = _normalize_level(props.get("level"))
        except ValueError as exc:
            raise ParseError(str(exc), feature=idx) from None
        if level is not None and feat_level != level:
            continue
        if region_id in seen:
            raise ParseError(f"duplicate region_id {region_id!r}", feature=idx)
        seen.add(region_id)

        raw_polys = ([geometry["coordinates"]] if gtype == "Polygon"
                     else geometry["coordinates"])
        polygons = []
        for rings in raw_polys:
            poly = _normalize_polygon(rings, idx)
            if poly is not None:
                polygons.append(poly)
        try:
            regions.append(Region(
                region_id=str(region_id),
                name=str(props.get("name", "")),
                level=feat_level,
                parent_id=props.get("parent_id"),
                polygons=tuple(polygons),
            ))
        except ValidationError as exc:
            raise ParseError(str(exc), feature=idx) from None

    if level is None:
        found = {r.level for r in regions}
        if len(found) > 1:
            raise ParseError("features mix levels; pass an explicit level filter")
        level = found.pop() if found else "L0"
    return RegionSet(level, tuple(regions))


# ---------------------------------------------------------------------------
# Clipping and coverage fractions
# ---------------------------------------------------------------------------

def _clip_half_plane(pts: list[Point], axis: int, bound: float, keep_le: bool) -> list[Point]:
    """One Sutherland-Hodgman pass: keep the side axis<=bound or axis>=bound."""
    if not pts:
        return []
    out: list[Point] = []
    sx, sy = pts[-1]
    s_in = (sx, sy)[axis] <= bound if keep_le else (sx, sy)[axis] >= bound
    for ex, ey in pts:
        e_in = (ex, ey)[axis] <= bound if keep_le else (ex, ey)[axis] >= bound
        if e_in != s_in:
            # intersection with the clip line
            if axis == 0:
                t = (bound - sx) / (ex - sx)
                out.append((bound, sy + t * (ey - sy)))
            else:
                t = (bound - sy) / (ey - sy)
                out.append((sx + t * (ex - sx), bound))
        if e_in:
            out.append((ex, ey))
        sx, sy, s_in = ex, ey, e_in
    return out


def _clip_ring_area(ring: Ring, bounds: tuple[float, float, float, float]) -> float:
    """Area of ring ∩ rectangle (orientation-insensitive)."""
    lon_w, lon_e, lat_s, lat_n = bounds
    pts = list(ring[:-1])
    pts = _clip_half_plane(pts, 0, lon_w, keep_le=False)
    pts = _clip_half_plane(pts, 0, lon_e, keep_le=True)
    pts = _clip_half_plane(pts, 1, lat_s, keep_le=False)
    pts = _clip_half_plane(pts, 1, lat_n, keep_le=True)
    if len(pts) < 3:
        return 0.0
    acc = 0.0
    x0, y0 = pts[-1]
    for x1, y1 in pts:
        acc += x0 * y1 - x1 * y0
        x0, y0 = x1, y1
    return abs(acc) / 2.0


def clip_area(polygon: Polygon, bounds: tuple[float, float, float, float]) -> float:
    """Planar area (degrees²) of one polygon ∩ cell rectangle."""
    lon_w, lon_e, lat_s, lat_n = bounds
    cell = (lon_e - lon_w) * (lat_n - lat_s)
    if cell <= 0.0 or not polygon:
        return 0.0
    area = _clip_ring_area(polygon[0], bounds)
    for hole in polygon[1:]:
        area -= _clip_ring_area(hole, bounds)
    return min(max(area, 0.0), cell)


def coverage_fraction(region: Region, spec: GridSpec, row: int, col: int) -> float:
    """Fraction of one cell's planar area covered by the region."""
    bounds = cell_bounds(spec, row, col)
    cell = (bounds[1] - bounds[0]) * (bounds[3] - bounds[2])
    if cell <= 0.0:
        return 0.0
    covered = 0.0
    for poly in region.polygons:
        covered += clip_area(poly, bounds)
    return min(max(covered / cell, 0.0), 1.0)


@dataclass(frozen=True)
class RegionCoverage:
    """Sparse coverage of one region: parallel arrays sorted row-major."""

    rows: np.ndarray
    cols: np.ndarray
    fracs: np.ndarray
    areas: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class CoverageMatrix:
    spec: GridSpec
    level: str
    entries: dict[str, RegionCoverage]

    @property
    def region_ids(self) -> list[str]:
        return list(self.entries.keys())

    def empty_regions(self) -> list[str]:
        return [rid for rid, e in self.entries.items() if len(e) == 0]


def _segments(region: Region):
    for poly in region.polygons:
        for ring in poly:
            for p0, p1 in zip(ring, ring[1:]):
                yield p0, p1


def _index_range(origin: float, size: float, lo: float, hi: float, n: int,
                 margin: int = 1) -> tuple[int, int]:
    """Cell index range whose rectangles a bbox [lo, hi] can touch."""
    i0 = math.floor((lo - origin) / size) - margin
    i1 = math.floor((hi - origin) / size) + margin
    return max(0, i0), min(n - 1, i1)


def _row_range(spec: GridSpec, lat_lo: float, lat_hi: float, margin: int = 1):
    lat0 = spec.lat_origin()
    r0 = math.floor((lat0 - lat_hi) / spec.cell_size) - margin
    r1 = math.floor((lat0 - lat_lo) / spec.cell_size) + margin
    return max(0, r0), min(spec.n_rows - 1, r1)


def _scanline_crossings(region: Region, lat: float) -> list[float]:
    """Longitudes where ring edges cross the horizontal line at `lat`.

    Half-open vertex rule (y0 <= lat < y1 or y1 <= lat < y0) keeps the
    crossing parity consistent at shared vertices.
    """
    xs: list[float] = []
    for (x0, y0), (x1, y1) in _segments(region):
        if (y0 <= lat) != (y1 <= lat):
            xs.append(x0 + (lat - y0) * (x1 - x0) / (y1 - y0))
    xs.sort()
    return xs


def _region_coverage(spec: GridSpec, region: Region) -> RegionCoverage:
    empty = RegionCoverage(np.empty(0, np.int32), np.empty(0, np.int32),
                           np.empty(0, np.float64), np.empty(0, np.float64))
    bbox = region.bbox()
    if bbox is None:
        warnings.warn(f"region {region.region_id!r} has empty geometry")
        return empty
    lon_min, lat_min, lon_max, lat_max = bbox
    c_lo, c_hi = _index_range(spec.lon_origin(), spec.cell_size, lon_min, lon_max,
                              spec.n_cols)
    r_lo, r_hi = _row_range(spec, lat_min, lat_max)
    if c_lo > c_hi or r_lo > r_hi:
        return empty

    # cells any boundary segment can touch take the exact-clip path
    boundary: set[tuple[int, int]] = set()
    for (x0, y0), (x1, y1) in _segments(region):
        sc_lo, sc_hi = _index_range(spec.lon_origin(), spec.cell_size,
                                    min(x0, x1), max(x0, x1), spec.n_cols)
        sr_lo, sr_hi = _row_range(spec, min(y0, y1), max(y0, y1))
        for r in range(sr_lo, sr_hi + 1):
            for c in range(sc_lo, sc_hi + 1):
                boundary.add((r, c))

    out_rows: list[int] = []
    out_cols: list[int] = []
    out_fracs: list[float] = []
    out_areas: list[float] = []
    for r in range(r_lo, r_hi + 1):
        lon_w0, lon_e0, lat_s, lat_n = cell_bounds(spec, r, c_lo)
        if lat_n == lat_s:
            continue  # degenerate clamped row
        center_lat = (lat_s + lat_n) / 2.0
        crossings = _scanline_crossings(region, center_lat)
        area = cell_area(spec, r)
        for c in range(c_lo, c_hi + 1):
            bounds = cell_bounds(spec, r, c)
            if (r, c) in boundary:
                f = coverage_fraction(region, spec, r, c)
            else:
                center_lon = (bounds[0] + bounds[1]) / 2.0
                k = bisect.bisect_left(crossings, center_lon)
                if k < len(crossings) and crossings[k] == center_lon:
                    f = coverage_fraction(region, spec, r, c)  # tie: exact clip
                else:
                    f = 1.0 if k % 2 == 1 else 0.0
            if f > 0.0:
                out_rows.append(r)
                out_cols.append(c)
                out_fracs.append(f)
                out_areas.append(area)
    return RegionCoverage(np.array(out_rows, np.int32), np.array(out_cols, np.int32),
                          np.array(out_fracs, np.float64), np.array(out_areas, np.float64))


def build_coverage(spec: GridSpec, regions: RegionSet,
                   jobs: int | None = None) -> CoverageMatrix:
    """Coverage entries for every region, deterministic row-major order.

    Work is distributed across regions; the merge preserves region order so
    the result is identical regardless of worker count.
    """
    ordered = sorted(regions.regions, key=lambda r: r.region_id)
    if jobs is not None and jobs > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            covs = list(pool.map(lambda rg: _region_coverage(spec, rg), ordered))
    else:
        covs = [_region_coverage(spec, rg) for rg in ordered]
    entries = {rg.region_id: cov for rg, cov in zip(ordered, covs)}
    return CoverageMatrix(spec, regions.level, entries)


# ---------------------------------------------------------------------------
# Coverage cache file: grid-spec echo header, then sorted entry lines
# `region_id row col f a`. Regions that produced no cells are carried in the
# empty_regions header key so parse ∘ serialize stays the identity.
# ---------------------------------------------------------------------------

def write_coverage(cov: CoverageMatrix, stream: BinaryIO | None = None) -> bytes:
    spec = cov.spec
    out = io.StringIO()
    out.write(f"rows={spec.n_rows}\n")
    out.write(f"cols={spec.n_cols}\n")
    out.write(f"lon_west={spec.lon_west!r}\n")
    out.write(f"lat_north={spec.lat_north!r}\n")
    out.write(f"cell_size={spec.cell_size!r}\n")
    out.write(f"registration={spec.registration}\n")
    out.write(f"level={cov.level}\n")
    out.write(f"regions={len(cov.entries)}\n")
    out.write(f"empty_regions={','.join(sorted(cov.empty_regions()))}\n")
    for rid in sorted(cov.entries):
        e = cov.entries[rid]
        for r, c, f, a in zip(e.rows, e.cols, e.fracs, e.areas):
            out.write(f"{rid} {int(r)} {int(c)} {float(f)!r} {float(a)!r}\n")
    data = out.getvalue().encode()
    if stream is not None:
        stream.write(data)
    return data


def parse_coverage(source: Union[bytes, str, Path, BinaryIO]) -> CoverageMatrix:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    elif isinstance(source, bytes):
        text = source.decode()
    else:
        text = source.read().decode()
    lines = text.splitlines()
    header: dict[str, str] = {}
    keys = ("rows", "cols", "lon_west", "lat_north", "cell_size",
            "registration", "level", "regions", "empty_regions")
    if len(lines) < len(keys):
        raise ParseError("truncated coverage header", line=len(lines))
    for i, key in enumerate(keys):
        if not lines[i].startswith(key + "="):
            raise ParseError(f"expected header key {key!r}", line=i + 1)
        header[key] = lines[i].partition("=")[2]
    try:
        spec = GridSpec(int(header["rows"]), int(header["cols"]),
                        float(header["lon_west"]), float(header["lat_north"]),
                        float(header["cell_size"]), header["registration"])
        n_regions = int(header["regions"])
    except (ValueError, ValidationError) as exc:
        raise ParseError(f"malformed coverage header: {exc}") from None
    level = header["level"]
    if level not in LEVELS:
        raise ParseError(f"unknown level {level!r}")

    per_region: dict[str, list[tuple[int, int, float, float]]] = {}
    for rid in [s for s in header["empty_regions"].split(",") if s]:
        per_region[rid] = []
    prev_key: tuple[str, int, int] | None = None
    for ln, line in enumerate(lines[len(keys):], start=len(keys) + 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ParseError(f"malformed entry line {line!r}", line=ln)
        rid, r_s, c_s, f_s, a_s = parts
        try:
            r, c, f, a = int(r_s), int(c_s), float(f_s), float(a_s)
        except ValueError as exc:
            raise ParseError(f"malformed entry: {exc}", line=ln) from None
        if not (0 <= r < spec.n_rows and 0 <= c < spec.n_cols):
            raise ParseError(f"cell ({r}, {c}) outside the grid", line=ln)
        if not 0.0 < f <= 1.0:
            raise ParseError(f"fraction {f!r} outside (0, 1]", line=ln)
        key = (rid, r, c)
        if prev_key is not None and key <= prev_key:
            raise ParseError("entries not sorted by (region_id, row, col)", line=ln)
        prev_key = key
        per_region.setdefault(rid, []).append((r, c, f, a))

    if len(per_region) != n_regions:
        raise ParseError(
            f"header declares {n_regions} regions, found {len(per_region)}")
    entries = {}
    for rid in sorted(per_region):
        cells = per_region[rid]
        entries[rid] = RegionCoverage(
            np.array([t[0] for t in cells], np.int32),
            np.array([t[1] for t in cells], np.int32),
            np.array([t[2] for t in cells], np.float64),
            np.array([t[3] for t in cells], np.float64))
    return CoverageMatrix(spec, level, entries)
