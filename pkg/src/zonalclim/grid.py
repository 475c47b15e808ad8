"""Regular lon/lat grid geometry, raster containers, and the grid archive format.

Grids are row-major from the northwest corner. A spec is five scalars plus a
registration flag: ``corner`` means (lon_west, lat_north) is the outer corner
of cell (0, 0), ``center`` means it is that cell's center. Center-registered
grids may overhang the poles by half a cell; bounds are clamped to [-90, 90],
so the first/last rows become half-height cells.
"""
from __future__ import annotations

import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Union

import numpy as np

from .errors import ParseError, ShapeError, ValidationError

EARTH_RADIUS_KM = 6371.0088  # IUGG mean radius; any constant cancels in ratio-form weighting

REGISTRATIONS = ("corner", "center")
FREQUENCIES = ("daily", "monthly", "annual")
VARIABLES = ("temperature", "precipitation", "spei", "population_density",
             "nightlight", "weight", "generic")
VARIABLE_UNITS = {
    "temperature": "degC",
    "precipitation": "mm",
    "spei": "1",
    "population_density": "persons/km2",
    "nightlight": "radiance",
    "weight": "1",
    "generic": "",
}

_TS_RE = {
    "annual": re.compile(r"^\d{4}$"),
    "monthly": re.compile(r"^\d{4}-\d{2}$"),
    "daily": re.compile(r"^\d{4}-\d{2}-\d{2}$"),
}


def timestamp_precision(token: str) -> str:
    """Return the frequency implied by a timestamp token's shape."""
    for freq, rx in _TS_RE.items():
        if rx.match(token):
            return freq
    raise ValidationError(f"malformed timestamp {token!r}")


def validate_timestamp(token: str, frequency: str | None = None) -> str:
    prec = timestamp_precision(token)
    if frequency is not None and prec != frequency:
        raise ValidationError(
            f"timestamp {token!r} does not match frequency {frequency!r}")
    parts = token.split("-")
    if len(parts) > 1 and not 1 <= int(parts[1]) <= 12:
        raise ValidationError(f"timestamp {token!r} has month out of range")
    if len(parts) > 2 and not 1 <= int(parts[2]) <= 31:
        raise ValidationError(f"timestamp {token!r} has day out of range")
    return token


def _normalize_lon(lon: float) -> float:
    """Map a longitude into [-180, 180)."""
    out = math.fmod(lon + 180.0, 360.0)
    if out < 0:
        out += 360.0
    return out - 180.0


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a regular lon/lat grid."""

    n_rows: int
    n_cols: int
    lon_west: float
    lat_north: float
    cell_size: float
    registration: str = "corner"

    def __post_init__(self):
        if self.n_rows <= 0 or self.n_cols <= 0:
            raise ValidationError("grid must have positive row/col counts")
        if not (self.cell_size > 0):
            raise ValidationError("cell_size must be > 0")
        if self.registration not in REGISTRATIONS:
            raise ValidationError(f"unknown registration {self.registration!r}")
        if self.n_rows * self.cell_size > 180.0 + self.cell_size + 1e-9:
            raise ValidationError("grid spans more than 180 degrees of latitude")
        object.__setattr__(self, "lon_west", _normalize_lon(float(self.lon_west)))
        object.__setattr__(self, "lat_north", float(self.lat_north))
        object.__setattr__(self, "cell_size", float(self.cell_size))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def lon_origin(self) -> float:
        """Outer west edge of column 0."""
        if self.registration == "corner":
            return self.lon_west
        return self.lon_west - self.cell_size / 2.0

    def lat_origin(self) -> float:
        """Outer north edge of row 0, before pole clamping."""
        if self.registration == "corner":
            return self.lat_north
        return self.lat_north + self.cell_size / 2.0

    def is_global_lon(self, tol: float = 1e-9) -> bool:
        return abs(self.n_cols * self.cell_size - 360.0) <= tol


def cell_bounds(spec: GridSpec, row: int, col: int) -> tuple[float, float, float, float]:
    """Bounds (lon_w, lon_e, lat_s, lat_n) of one cell in degrees.

    Latitudes are clamped to [-90, 90]; edges of adjacent cells are computed
    from the same `origin + k*cell_size` expression, so neighbours share edge
    values exactly.
    """
    if not (0 <= row < spec.n_rows):
        raise IndexError(f"row {row} out of range [0, {spec.n_rows})")
    if not (0 <= col < spec.n_cols):
        raise IndexError(f"col {col} out of range [0, {spec.n_cols})")
    lon0 = spec.lon_origin()
    lat0 = spec.lat_origin()
    s = spec.cell_size
    lon_w = lon0 + col * s
    lon_e = lon0 + (col + 1) * s
    lat_n = min(90.0, max(-90.0, lat0 - row * s))
    lat_s = min(90.0, max(-90.0, lat0 - (row + 1) * s))
    return (lon_w, lon_e, lat_s, lat_n)


def cell_area(spec: GridSpec, row: int) -> float:
    """Spherical area in km² of any cell in the given row.

    Area of the lon/lat quadrilateral on a sphere of radius R:
    R² · Δλ · (sin φ_n − sin φ_s), with the clamped latitude bounds. Zero only
    for fully clamped degenerate rows.
    """
    _, _, lat_s, lat_n = cell_bounds(spec, row, 0)
    dlon = math.radians(spec.cell_size)
    return (EARTH_RADIUS_KM ** 2) * dlon * (
        math.sin(math.radians(lat_n)) - math.sin(math.radians(lat_s)))


def cell_planar_area(spec: GridSpec, row: int) -> float:
    """Planar area in degrees² of any cell in the given row (clamp-aware)."""
    lon_w, lon_e, lat_s, lat_n = cell_bounds(spec, row, 0)
    return (lon_e - lon_w) * (lat_n - lat_s)


@dataclass(frozen=True)
class Raster:
    """One time-stamped value plane on a grid, with a missing-data mask."""

    spec: GridSpec
    values: np.ndarray
    missing: np.ndarray
    variable: str = "generic"
    timestamp: str = "0000"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        missing = np.asarray(self.missing, dtype=bool)
        if values.shape != self.spec.shape:
            raise ShapeError(
                f"values shape {values.shape} != grid shape {self.spec.shape}")
        if missing.shape != self.spec.shape:
            raise ShapeError(
                f"mask shape {missing.shape} != grid shape {self.spec.shape}")
        if self.variable not in VARIABLES:
            raise ValidationError(f"unknown variable {self.variable!r}")
        validate_timestamp(self.timestamp)
        if not np.all(np.isfinite(values[~missing])):
            raise ValidationError("unmasked cells must hold finite values")
        # masked cells carry no value semantics; normalize so round-trips are bit-identical
        values = np.where(missing, 0.0, values)
        values.flags.writeable = False
        missing = missing.copy()
        missing.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)

    @property
    def units(self) -> str:
        return VARIABLE_UNITS[self.variable]

    @classmethod
    def full(cls, spec: GridSpec, value: float, variable: str = "generic",
             timestamp: str = "0000") -> "Raster":
        return cls(spec, np.full(spec.shape, value, dtype=np.float64),
                   np.zeros(spec.shape, dtype=bool), variable, timestamp)


@dataclass(frozen=True)
class RasterSeries:
    """Time-ordered rasters sharing one grid spec."""

    spec: GridSpec
    frames: tuple[Raster, ...]
    frequency: str

    def __post_init__(self):
        if self.frequency not in FREQUENCIES:
            raise ValidationError(f"unknown frequency {self.frequency!r}")
        frames = tuple(self.frames)
        if not frames:
            raise ValidationError("a series needs at least one frame")
        for fr in frames:
            if fr.spec != self.spec:
                raise ShapeError("all frames must share the series grid spec")
            validate_timestamp(fr.timestamp, self.frequency)
            if fr.variable != frames[0].variable:
                raise ValidationError("all frames must share one variable")
        stamps = [fr.timestamp for fr in frames]
        if any(b <= a for a, b in zip(stamps, stamps[1:])):
            raise ValidationError("frame timestamps must be strictly increasing")
        object.__setattr__(self, "frames", frames)

    @property
    def variable(self) -> str:
        return self.frames[0].variable

    @property
    def timestamps(self) -> list[str]:
        return [fr.timestamp for fr in self.frames]

    def __len__(self) -> int:
        return len(self.frames)


# ---------------------------------------------------------------------------
# Grid archive format
#
# Text header (key=value, one per line) followed by per-frame blocks:
#   timestamp=YYYY[-MM[-DD]]
#   rows×cols values, row-major; text encoding writes one grid row per line,
#   le_float64 writes raw little-endian 8-byte floats.
# Masked cells are written as the sentinel value.
# ---------------------------------------------------------------------------

_HEADER_KEYS = ("rows", "cols", "lon_west", "lat_north", "cell_size",
                "registration", "variable", "frequency", "sentinel",
                "frames", "encoding")
ENCODINGS = ("text", "le_float64")


def _fmt(x: float) -> str:
    """Shortest decimal string that parses back to the same float."""
    return repr(float(x))


class _LineReader:
    """Line-oriented reader over a binary stream that tracks position."""

    def __init__(self, stream: BinaryIO):
        self.stream = stream
        self.line_no = 0
        self.offset = 0

    def readline(self) -> str | None:
        raw = self.stream.readline()
        if raw == b"":
            return None
        self.line_no += 1
        self.offset += len(raw)
        try:
            return raw.decode("utf-8").rstrip("\n")
        except UnicodeDecodeError:
            raise ParseError("non-UTF-8 header text", line=self.line_no) from None

    def read_exact(self, n: int) -> bytes:
        data = self.stream.read(n)
        self.offset += len(data)
        return data


def _coerce_stream(source: Union[bytes, str, Path, BinaryIO]) -> BinaryIO:
    if isinstance(source, bytes):
        return io.BytesIO(source)
    if isinstance(source, (str, Path)):
        return open(source, "rb")
    return source


def _parse_header(reader: _LineReader) -> tuple[dict, dict, str | None]:
    """Read key=value lines up to the first timestamp line.

    Returns (required fields, extra fields, pending timestamp line).
    """
    fields: dict[str, str] = {}
    extras: dict[str, str] = {}
    while True:
        line = reader.readline()
        if line is None:
            break
        if line.startswith("timestamp="):
            return fields, extras, line
        if "=" not in line:
            raise ParseError(f"malformed header line {line!r}", line=reader.line_no)
        key, _, value = line.partition("=")
        target = fields if key in _HEADER_KEYS else extras
        if key in target:
            raise ParseError(f"duplicate header key {key!r}", line=reader.line_no)
        target[key] = value
    return fields, extras, None


def read_archive(source: Union[bytes, str, Path, BinaryIO]) -> tuple[RasterSeries, dict[str, str]]:
    """Parse a grid archive; returns the series and any extra header keys."""
    stream = _coerce_stream(source)
    reader = _LineReader(stream)
    fields, extras, pending = _parse_header(reader)
    missing_keys = [k for k in _HEADER_KEYS if k not in fields]
    if missing_keys:
        raise ParseError(f"missing header keys: {', '.join(missing_keys)}",
                         line=reader.line_no)
    try:
        rows = int(fields["rows"])
        cols = int(fields["cols"])
        spec = GridSpec(rows, cols, float(fields["lon_west"]),
                        float(fields["lat_north"]), float(fields["cell_size"]),
                        fields["registration"])
        n_frames = int(fields["frames"])
    except (ValueError, ValidationError) as exc:
        raise ParseError(f"malformed header: {exc}", line=reader.line_no) from None
    variable = fields["variable"]
    if variable not in VARIABLES:
        raise ParseError(f"unknown variable {variable!r}", line=reader.line_no)
    frequency = fields["frequency"]
    if frequency not in FREQUENCIES:
        raise ParseError(f"unknown frequency {frequency!r}", line=reader.line_no)
    encoding = fields["encoding"]
    if encoding not in ENCODINGS:
        raise ParseError(f"unknown encoding {encoding!r}", line=reader.line_no)
    sentinel: float | None
    if fields["sentinel"] == "none":
        sentinel = None
    else:
        try:
            sentinel = float(fields["sentinel"])
        except ValueError:
            raise ParseError(f"malformed sentinel {fields['sentinel']!r}",
                             line=reader.line_no) from None
    if n_frames < 1:
        raise ParseError("frames must be >= 1", line=reader.line_no)

    frames: list[Raster] = []
    prev_ts: str | None = None
    for idx in range(n_frames):
        line = pending if pending is not None else reader.readline()
        pending = None
        if line is None:
            raise ParseError(f"expected timestamp for frame {idx}, got end of stream",
                             line=reader.line_no)
        if not line.startswith("timestamp="):
            raise ParseError(f"expected timestamp line, got {line!r}",
                             line=reader.line_no)
        ts = line.partition("=")[2]
        try:
            validate_timestamp(ts, frequency)
        except ValidationError as exc:
            raise ParseError(str(exc), line=reader.line_no) from None
        if prev_ts is not None and ts <= prev_ts:
            raise ParseError(f"non-monotone timestamps: {ts!r} after {prev_ts!r}",
                             line=reader.line_no)
        prev_ts = ts

        if encoding == "text":
            plane = _read_text_frame(reader, rows, cols, idx)
        else:
            plane = _read_binary_frame(reader, rows, cols, idx)
        mask = np.zeros((rows, cols), dtype=bool)
        if sentinel is not None:
            mask = plane == sentinel
        bad = ~np.isfinite(plane) & ~mask
        if bad.any():
            raise ParseError(f"non-finite unmasked value in frame {idx}",
                             line=reader.line_no, offset=reader.offset)
        frames.append(Raster(spec, plane, mask, variable, ts))

    trailing = reader.readline()
    if trailing not in (None, ""):
        raise ParseError(f"unexpected trailing content {trailing!r}",
                         line=reader.line_no)
    return RasterSeries(spec, tuple(frames), frequency), extras


def parse_grid_archive(source: Union[bytes, str, Path, BinaryIO]) -> RasterSeries:
    """Parse a grid archive stream into a validated RasterSeries."""
    return read_archive(source)[0]


def _read_text_frame(reader: _LineReader, rows: int, cols: int, idx: int) -> np.ndarray:
    need = rows * cols
    values = np.empty(need, dtype=np.float64)
    got = 0
    while got < need:
        line = reader.readline()
        if line is None:
            raise ParseError(
                f"shape mismatch: expected {need} values for frame {idx}, got {got}",
                line=reader.line_no)
        tokens = line.split()
        if got + len(tokens) > need:
            raise ParseError(
                f"shape mismatch: more than {need} values for frame {idx}",
                line=reader.line_no)
        try:
            values[got:got + len(tokens)] = [float(t) for t in tokens]
        except ValueError as exc:
            raise ParseError(f"malformed value: {exc}", line=reader.line_no) from None
        got += len(tokens)
    return values.reshape(rows, cols)


def _read_binary_frame(reader: _LineReader, rows: int, cols: int, idx: int) -> np.ndarray:
    need = rows * cols * 8
    data = reader.read_exact(need)
    if len(data) != need:
        raise ParseError(
            f"shape mismatch: expected {need} payload bytes for frame {idx}, "
            f"got {len(data)}", offset=reader.offset)
    return np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(rows, cols)


def write_grid_archive(series: RasterSeries, stream: BinaryIO | None = None, *,
                       sentinel: float | None = None, encoding: str = "text",
                       extra_header: dict[str, str] | None = None) -> bytes:
    """Serialize a series in the grid archive format; returns the bytes.

    Byte-stable: identical input produces identical output. Masked cells are
    written as the sentinel, which must be declared whenever any cell is
    masked and must not collide with an unmasked value.
    """
    if encoding not in ENCODINGS:
        raise ValidationError(f"unknown encoding {encoding!r}")
    any_masked = any(fr.missing.any() for fr in series.frames)
    if any_masked and sentinel is None:
        raise ValidationError("series has masked cells: a sentinel is required")
    if sentinel is not None:
        for fr in series.frames:
            if (fr.values[~fr.missing] == sentinel).any():
                raise ValidationError(
                    f"unmasked value equals sentinel {sentinel!r} at {fr.timestamp}")

    spec = series.spec
    out = io.BytesIO()
    header = {
        "rows": str(spec.n_rows),
        "cols": str(spec.n_cols),
        "lon_west": _fmt(spec.lon_west),
        "lat_north": _fmt(spec.lat_north),
        "cell_size": _fmt(spec.cell_size),
        "registration": spec.registration,
        "variable": series.variable,
        "frequency": series.frequency,
        "sentinel": "none" if sentinel is None else _fmt(sentinel),
        "frames": str(len(series.frames)),
        "encoding": encoding,
    }
    for key in _HEADER_KEYS:
        out.write(f"{key}={header[key]}\n".encode())
    for key in sorted(extra_header or {}):
        out.write(f"{key}={extra_header[key]}\n".encode())

    for fr in series.frames:
        out.write(f"timestamp={fr.timestamp}\n".encode())
        plane = fr.values
        if sentinel is not None:
            plane = np.where(fr.missing, sentinel, plane)
        if encoding == "text":
            for r in range(spec.n_rows):
                out.write((" ".join(_fmt(v) for v in plane[r]) + "\n").encode())
        else:
            out.write(np.ascontiguousarray(plane, dtype="<f8").tobytes())

    data = out.getvalue()
    if stream is not None:
        stream.write(data)
    return data
