"""Weight-grid construction: population mass, night-light downsampling with
high-latitude zero correction, half-offset resampling, and the unit case."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence, Union

import numpy as np

from .errors import AlignmentError, ShapeError, ValidationError
from .grid import (GridSpec, Raster, RasterSeries, cell_area, cell_bounds,
                   read_archive, write_grid_archive)

WEIGHT_KINDS = ("unweighted", "population", "nightlight")
BASE_YEARS = (2000, 2005, 2010, 2015)


@dataclass(frozen=True)
class WeightGrid:
    """Non-negative per-cell weights tagged with their kind and base year."""

    spec: GridSpec
    values: np.ndarray
    kind: str
    base_year: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != self.spec.shape:
            raise ShapeError(
                f"weight shape {values.shape} != grid shape {self.spec.shape}")
        if self.kind not in WEIGHT_KINDS:
            raise ValidationError(f"unknown weight kind {self.kind!r}")
        if (self.kind == "unweighted") != (self.base_year is None):
            raise ValidationError("base_year is required iff kind != unweighted")
        if not np.all(np.isfinite(values)) or (values < 0).any():
            raise ValidationError("weights must be finite and >= 0")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def unweighted(spec: GridSpec) -> WeightGrid:
    """All-ones weights: the aggregation collapses to the area-fraction mean."""
    return WeightGrid(spec, np.ones(spec.shape, dtype=np.float64), "unweighted")


def population_weight(density: Raster, spec: GridSpec,
                      base_year: int | None = None) -> WeightGrid:
    """Population mass per cell: density (persons/km²) times spherical cell area.

    Masked density cells get weight 0.
    """
    if density.spec != spec:
        raise ShapeError("density grid spec does not match the requested spec")
    if (density.values[~density.missing] < 0).any():
        raise ValidationError("population density must be non-negative")
    areas = np.array([cell_area(spec, r) for r in range(spec.n_rows)])
    values = np.where(density.missing, 0.0, density.values * areas[:, None])
    if base_year is None:
        base_year = int(density.timestamp[:4])
    return WeightGrid(spec, values, "population", base_year)


def downsample_block_mean(fine: Raster, factor: int) -> Raster:
    """Block-mean a raster by an integer factor.

    Output cell (r, c) is the arithmetic mean of the factor×factor block whose
    upper-left fine cell is (r·factor, c·factor); masked fine cells are
    excluded, and a fully masked block stays masked.
    """
    if factor < 1:
        raise ValidationError("factor must be a positive integer")
    rows, cols = fine.spec.shape
    if rows % factor or cols % factor:
        raise ShapeError(
            f"grid {rows}x{cols} not divisible by block factor {factor}")
    out_rows, out_cols = rows // factor, cols // factor

    vals = np.where(fine.missing, 0.0, fine.values)
    blocks = vals.reshape(out_rows, factor, out_cols, factor)
    present = (~fine.missing).reshape(out_rows, factor, out_cols, factor)
    counts = present.sum(axis=(1, 3))
    sums = blocks.sum(axis=(1, 3))
    out_mask = counts == 0
    with np.errstate(invalid="ignore"):
        means = np.where(out_mask, 0.0, sums / np.maximum(counts, 1))

    s = fine.spec
    if s.registration == "corner":
        spec = GridSpec(out_rows, out_cols, s.lon_west, s.lat_north,
                        s.cell_size * factor, "corner")
    else:
        shift = s.cell_size * (factor - 1) / 2.0
        spec = GridSpec(out_rows, out_cols, s.lon_west + shift, s.lat_north - shift,
                        s.cell_size * factor, "center")
    return Raster(spec, means, out_mask, fine.variable, fine.timestamp)


def _cell_center_lats(spec: GridSpec) -> np.ndarray:
    lats = np.empty(spec.n_rows)
    for r in range(spec.n_rows):
        _, _, lat_s, lat_n = cell_bounds(spec, r, 0)
        lats[r] = (lat_s + lat_n) / 2.0
    return lats


def aurora_correct(target: Raster, refs: Sequence[Raster],
                   lat_cut: float = 45.0) -> Raster:
    """Zero radiance strictly poleward of ±lat_cut wherever all three
    reference-year planes are zero; every other cell is untouched.

    Band membership is tested at the cell center. Masked reference cells do
    not count as zero.
    """
    if len(refs) != 3:
        raise ValidationError("exactly three reference-year rasters are required")
    for ref in refs:
        if ref.spec != target.spec:
            raise ShapeError("reference raster spec does not match the target")
    lats = _cell_center_lats(target.spec)
    poleward = (np.abs(lats) > lat_cut)[:, None]
    refs_zero = np.ones(target.spec.shape, dtype=bool)
    for ref in refs:
        refs_zero &= (ref.values == 0.0) & ~ref.missing
    zero_out = poleward & refs_zero & ~target.missing
    values = np.where(zero_out, 0.0, target.values)
    return Raster(target.spec, values, target.missing, target.variable,
                  target.timestamp)


def resample_half_offset(weights: WeightGrid, target: GridSpec) -> WeightGrid:
    """Resample a corner-registered weight grid onto a center-registered grid
    offset by exactly half a cell in both axes (the n rows → n+1 rows case).

    Each target cell takes the plain average of the source cells its footprint
    intersects: 4 in the interior, 2 on the pole rows. Longitude wraps when
    the source spans the full 360°; otherwise edge columns also average the
    available cells.
    """
    src = weights.spec
    s = src.cell_size
    if target.cell_size != s:
        raise AlignmentError("target cell size differs from the source")
    if src.registration != "corner" or target.registration != "center":
        raise AlignmentError("expected corner-registered source and "
                             "center-registered target")
    if target.n_rows != src.n_rows + 1 or target.n_cols != src.n_cols:
        raise AlignmentError(
            f"expected a {src.n_rows + 1}x{src.n_cols} target grid, "
            f"got {target.n_rows}x{target.n_cols}")
    half = s / 2.0
    if not math.isclose(target.lon_origin(), src.lon_origin() - half,
                        rel_tol=0.0, abs_tol=1e-9 * s):
        raise AlignmentError("longitude extents are not offset by half a cell")
    if not math.isclose(target.lat_origin(), src.lat_origin() + half,
                        rel_tol=0.0, abs_tol=1e-9 * s):
        raise AlignmentError("latitude extents are not offset by half a cell")

    # separable average: target (r, c) sees source rows {r-1, r} and source
    # columns {c-1, c}, each clipped to what exists (wrap in lon when global)
    n, m = src.shape
    v = weights.values
    row_sum = np.zeros((n + 1, m))
    row_cnt = np.zeros(n + 1)
    row_sum[0:n] += v
    row_cnt[0:n] += 1.0
    row_sum[1:n + 1] += v
    row_cnt[1:n + 1] += 1.0
    if src.is_global_lon():
        west = (np.arange(m) - 1) % m
        col_sum = row_sum + row_sum[:, west]
        col_cnt = np.full(m, 2.0)
    else:
        col_sum = row_sum.copy()
        col_cnt = np.ones(m)
        col_sum[:, 1:] += row_sum[:, :-1]
        col_cnt[1:] += 1.0
    values = col_sum / (row_cnt[:, None] * col_cnt[None, :])
    return WeightGrid(target, values, weights.kind, weights.base_year)


# ---------------------------------------------------------------------------
# Serialization: weight grids ride the grid archive format with
# variable=weight and extra header keys kind=, base_year=.
# ---------------------------------------------------------------------------

def write_weight_grid(w: WeightGrid, stream: BinaryIO | None = None, *,
                      encoding: str = "text") -> bytes:
    ts = f"{w.base_year:04d}" if w.base_year is not None else "0000"
    frame = Raster(w.spec, w.values, np.zeros(w.spec.shape, bool), "weight", ts)
    series = RasterSeries(w.spec, (frame,), "annual")
    extras = {"kind": w.kind,
              "base_year": "none" if w.base_year is None else str(w.base_year)}
    return write_grid_archive(series, stream, encoding=encoding,
                              extra_header=extras)


def read_weight_grid(source: Union[bytes, str, Path, BinaryIO]) -> WeightGrid:
    series, extras = read_archive(source)
    if series.variable != "weight":
        raise ValidationError(
            f"expected variable=weight archive, got {series.variable!r}")
    kind = extras.get("kind")
    if kind not in WEIGHT_KINDS:
        raise ValidationError(f"missing or unknown weight kind {kind!r}")
    raw_year = extras.get("base_year", "none")
    base_year = None if raw_year == "none" else int(raw_year)
    frame = series.frames[0]
    values = np.where(frame.missing, 0.0, frame.values)
    return WeightGrid(series.spec, values, kind, base_year)
