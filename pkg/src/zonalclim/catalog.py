"""Dataset catalog: valid key combinations, a file-backed store with
checksummed payloads, and wide/long csv/json export."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from filelock import FileLock

from .errors import (CorruptionError, NotFoundError, ParseError,
                     ValidationError)
from .zonal import Row, SeriesTable

SOURCES = ("CRU", "CSIC", "ERA5", "UDEL", "custom")
PAPER_SOURCES = ("CRU", "CSIC", "ERA5", "UDEL")
CLIMATE_VARIABLES = ("temperature", "precipitation", "spei")
WEIGHTINGS = ("unweighted", "population", "nightlight")
BASE_YEARS = (2000, 2005, 2010, 2015)
KEY_FREQUENCIES = ("daily", "monthly", "annual")
LEVELS = ("L0", "L1")

# which climate variables each named product actually provides
SOURCE_VARIABLES = {
    "CRU": ("temperature", "precipitation"),
    "UDEL": ("temperature", "precipitation"),
    "ERA5": ("temperature", "precipitation"),
    "CSIC": ("spei",),
    "custom": CLIMATE_VARIABLES,
}
SHAPES = ("wide", "long")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class DatasetKey:
    source: str
    variable: str
    level: str
    weighting: str
    base_year: int | None
    frequency: str

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValidationError(f"unknown source {self.source!r}")
        if self.variable not in CLIMATE_VARIABLES:
            raise ValidationError(f"unknown variable {self.variable!r}")
        if self.level not in LEVELS:
            raise ValidationError(f"unknown level {self.level!r}")
        if self.weighting not in WEIGHTINGS:
            raise ValidationError(f"unknown weighting {self.weighting!r}")
        if self.frequency not in KEY_FREQUENCIES:
            raise ValidationError(f"unknown frequency {self.frequency!r}")
        if self.variable not in SOURCE_VARIABLES[self.source]:
            raise ValidationError(
                f"{self.source} does not provide {self.variable}")
        if self.variable == "spei" and (self.source != "CSIC"
                                        or self.frequency != "monthly"):
            raise ValidationError("spei is only available from CSIC at "
                                  "monthly frequency")
        if self.frequency == "daily" and self.source != "ERA5":
            raise ValidationError("daily data are only available from ERA5")
        if (self.base_year is None) != (self.weighting == "unweighted"):
            raise ValidationError("base_year must be set iff the weighting "
                                  "is not unweighted")
        if self.base_year is not None and self.base_year not in BASE_YEARS:
            raise ValidationError(f"base_year must be one of {BASE_YEARS}")

    def slug(self) -> str:
        year = "none" if self.base_year is None else str(self.base_year)
        return "_".join((self.source, self.variable, self.level,
                         self.weighting, year, self.frequency))

    def to_dict(self) -> dict:
        return {"source": self.source, "variable": self.variable,
                "level": self.level, "weighting": self.weighting,
                "base_year": self.base_year, "frequency": self.frequency}

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetKey":
        return cls(d["source"], d["variable"], d["level"], d["weighting"],
                   d["base_year"], d["frequency"])


def enumerate_valid_keys() -> list[DatasetKey]:
    """Every valid key over the four named sources, deterministic order.

    Daily exists only for ERA5; spei only as (CSIC, monthly); annual is the
    derived frequency for every monthly temperature/precipitation product.
    """
    keys: list[DatasetKey] = []
    weight_combos = [("unweighted", None)]
    weight_combos += [(w, y) for w in ("population", "nightlight")
                      for y in BASE_YEARS]
    for source in PAPER_SOURCES:
        for variable in SOURCE_VARIABLES[source]:
            for frequency in KEY_FREQUENCIES:
                if frequency == "daily" and source != "ERA5":
                    continue
                if variable == "spei" and frequency != "monthly":
                    continue
                for level in LEVELS:
                    for weighting, year in weight_combos:
                        keys.append(DatasetKey(source, variable, level,
                                               weighting, year, frequency))
    return keys


@dataclass(frozen=True)
class DatasetMeta:
    key: DatasetKey
    source_version: str
    period: tuple[str, str]
    built_at: str
    checksum: str = ""

    def to_dict(self) -> dict:
        return {"key": self.key.to_dict(), "source_version": self.source_version,
                "period": list(self.period), "built_at": self.built_at,
                "checksum": self.checksum}

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetMeta":
        return cls(DatasetKey.from_dict(d["key"]), d["source_version"],
                   (d["period"][0], d["period"][1]), d["built_at"],
                   d.get("checksum", ""))


def make_meta(key: DatasetKey, table: SeriesTable,
              source_version: str = "synthetic") -> DatasetMeta:
    return DatasetMeta(key, source_version, table.span(),
                       datetime.now(timezone.utc).isoformat(timespec="seconds"))


# ---------------------------------------------------------------------------
# Export / import
# ---------------------------------------------------------------------------

def _fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


_INT_RE = re.compile(r"^-?\d+$")


def _parse_value(s: str):
    if s == "":
        return None
    if _INT_RE.match(s):
        return int(s)
    return float(s)


def export(table: SeriesTable, shape: str = "long", format: str = "csv") -> bytes:
    """Serialize a table; rows ordered by region_id, columns by timestamp."""
    if shape not in SHAPES:
        raise ValidationError(f"unknown shape {shape!r}")
    if format not in FORMATS:
        raise ValidationError(f"unknown format {format!r}")
    region_ids = table.region_ids()
    timestamps = table.timestamps()
    if shape == "long":
        records = [{"region_id": rid, "time": ts, "value": v}
                   for rid, ts, v in table.rows]
    else:
        lookup = {(rid, ts): v for rid, ts, v in table.rows}
        records = []
        for rid in region_ids:
            rec: dict = {"region_id": rid}
            for ts in timestamps:
                rec[ts] = lookup.get((rid, ts))
            records.append(rec)

    if format == "json":
        return json.dumps(records, ensure_ascii=False,
                          separators=(",", ":")).encode()
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    if shape == "long":
        writer.writerow(["region_id", "time", "value"])
        for rec in records:
            writer.writerow([rec["region_id"], rec["time"],
                             _fmt_value(rec["value"])])
    else:
        writer.writerow(["region_id"] + timestamps)
        for rec in records:
            writer.writerow([rec["region_id"]]
                            + [_fmt_value(rec[ts]) for ts in timestamps])
    return out.getvalue().encode()


def import_rows(data: bytes, shape: str, format: str) -> tuple[Row, ...]:
    """Parse an export back into canonical long rows."""
    if shape not in SHAPES or format not in FORMATS:
        raise ValidationError(f"unknown shape/format {shape!r}/{format!r}")
    rows: list[Row] = []
    if format == "json":
        try:
            records = json.loads(data.decode())
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON export: {exc}") from None
        for rec in records:
            if shape == "long":
                rows.append((rec["region_id"], rec["time"], rec["value"]))
            else:
                for ts, v in rec.items():
                    if ts != "region_id":
                        rows.append((rec["region_id"], ts, v))
    else:
        lines = io.StringIO(data.decode())
        reader = csv.reader(lines)
        header = next(reader, None)
        if not header or header[0] != "region_id":
            raise ParseError("csv export must start with a region_id header")
        for rec in reader:
            if shape == "long":
                rows.append((rec[0], rec[1], _parse_value(rec[2])))
            else:
                for ts, cell in zip(header[1:], rec[1:]):
                    rows.append((rec[0], ts, _parse_value(cell)))
    return tuple(sorted(rows))


# ---------------------------------------------------------------------------
# Store: datasets/<hash prefix>/<slug>.json + index.json (+ boundary assets)
# ---------------------------------------------------------------------------

def _table_to_dict(table: SeriesTable) -> dict:
    return {"level": table.level, "variable": table.variable,
            "units": table.units, "weighting": table.weighting,
            "base_year": table.base_year, "frequency": table.frequency,
            "rows": [[rid, ts, v] for rid, ts, v in table.rows]}


def _table_from_dict(d: dict) -> SeriesTable:
    return SeriesTable(d["level"], d["variable"], d["units"], d["weighting"],
                       d["base_year"], d["frequency"],
                       tuple((r[0], r[1], r[2]) for r in d["rows"]))


class Store:
    """One directory of immutable dataset payloads plus a single index."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "datasets").mkdir(exist_ok=True)
        (self.root / "boundaries").mkdir(exist_ok=True)
        self._index_path = self.root / "index.json"
        self._lock = FileLock(str(self.root / ".index.lock"))

    def _read_index(self) -> dict:
        if not self._index_path.exists():
            return {"datasets": {}}
        return json.loads(self._index_path.read_text())

    def _payload_path(self, key: DatasetKey) -> Path:
        slug = key.slug()
        prefix = hashlib.sha256(slug.encode()).hexdigest()[:2]
        return self.root / "datasets" / prefix / f"{slug}.json"

    def store(self, table: SeriesTable, meta: DatasetMeta) -> str:
        """Write (or replace) one dataset; returns its slug."""
        key = meta.key
        payload_path = self._payload_path(key)
        payload_path.parent.mkdir(exist_ok=True)
        body = {"meta": meta.to_dict(), "table": _table_to_dict(table)}
        body["meta"]["checksum"] = ""
        payload = json.dumps(body, ensure_ascii=False,
                             separators=(",", ":")).encode()
        checksum = hashlib.sha256(payload).hexdigest()
        with self._lock:
            payload_path.write_bytes(payload)
            index = self._read_index()
            index["datasets"][key.slug()] = {
                "path": str(payload_path.relative_to(self.root)),
                "checksum": checksum,
                "meta": {**meta.to_dict(), "checksum": checksum},
            }
            tmp = self._index_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(index, ensure_ascii=False, indent=1,
                                      sort_keys=True))
            tmp.replace(self._index_path)
        return key.slug()

    def lookup(self, key: DatasetKey) -> tuple[SeriesTable, DatasetMeta]:
        index = self._read_index()
        entry = index["datasets"].get(key.slug())
        if entry is None:
            raise NotFoundError(f"no stored dataset for key {key.slug()}")
        payload = (self.root / entry["path"]).read_bytes()
        digest = hashlib.sha256(payload).hexdigest()
        if digest != entry["checksum"]:
            raise CorruptionError(
                f"checksum mismatch for {key.slug()}: index {entry['checksum']},"
                f" payload {digest}")
        body = json.loads(payload.decode())
        meta = DatasetMeta.from_dict(entry["meta"])
        return _table_from_dict(body["table"]), meta

    def list_meta(self) -> list[DatasetMeta]:
        index = self._read_index()
        return [DatasetMeta.from_dict(entry["meta"])
                for _, entry in sorted(index["datasets"].items())]

    def store_boundaries(self, level: str, geojson: bytes) -> None:
        if level not in LEVELS:
            raise ValidationError(f"unknown level {level!r}")
        (self.root / "boundaries" / f"{level}.geojson").write_bytes(geojson)

    def boundaries(self, level: str) -> bytes:
        path = self.root / "boundaries" / f"{level}.geojson"
        if not path.exists():
            raise NotFoundError(f"no boundaries stored for level {level}")
        return path.read_bytes()
