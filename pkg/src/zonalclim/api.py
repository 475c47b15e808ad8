"""Read-only HTTP service over a dataset store: catalog browsing, series and
map queries, on-request exceedance counts, and file downloads.

Everything served here was aggregated at build time; requests only filter,
count, and serialize. Every error body is JSON {code, message}.
"""
from __future__ import annotations

import json
import os

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from .catalog import FORMATS, SHAPES, DatasetKey, Store, export
from .errors import NotFoundError, ValidationError, ZonalClimError
from .temporal import ThresholdSpec, count_exceedance_days
from .zonal import SeriesTable

DEFAULT_LIMIT = 50_000


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad(message: str, code: str = "invalid_params") -> ApiError:
    return ApiError(400, code, message)


def _parse_key(params: dict) -> DatasetKey:
    required = ("source", "variable", "level", "weighting", "frequency")
    missing = [k for k in required if not params.get(k)]
    if missing:
        raise _bad(f"missing key parameters: {', '.join(missing)}")
    raw_year = params.get("base_year")
    base_year: int | None
    if raw_year in (None, "", "none"):
        base_year = None
    else:
        try:
            base_year = int(raw_year)
        except ValueError:
            raise _bad(f"base_year {raw_year!r} is not an integer") from None
    try:
        return DatasetKey(params["source"], params["variable"], params["level"],
                          params["weighting"], base_year, params["frequency"])
    except ValidationError as exc:
        raise _bad(str(exc), code="invalid_key") from None


def _parse_int(params: dict, name: str, default: int | None = None,
               minimum: int | None = None) -> int | None:
    raw = params.get(name)
    if raw in (None, ""):
        return default
    try:
        value = int(raw)
    except ValueError:
        raise _bad(f"{name} must be an integer") from None
    if minimum is not None and value < minimum:
        raise _bad(f"{name} must be >= {minimum}")
    return value


def _filter_rows(table: SeriesTable, params: dict) -> list:
    year_start = _parse_int(params, "year_start")
    year_end = _parse_int(params, "year_end")
    if year_start is not None and year_end is not None and year_start > year_end:
        raise _bad("year_start must not exceed year_end")
    region_ids = None
    if params.get("region_ids"):
        region_ids = {r for r in params["region_ids"].split(",") if r}
    rows = []
    for rid, ts, v in table.rows:
        year = int(ts[:4])
        if year_start is not None and year < year_start:
            continue
        if year_end is not None and year > year_end:
            continue
        if region_ids is not None and rid not in region_ids:
            continue
        rows.append((rid, ts, v))
    return rows


def _threshold_from(params: dict) -> ThresholdSpec | None:
    present = [k for k in ("mode", "value", "period") if params.get(k)]
    if not present:
        return None
    if len(present) != 3:
        raise _bad("threshold needs mode, value and period together")
    try:
        return ThresholdSpec(params["mode"], float(params["value"]),
                             params["period"])
    except (ValueError, ValidationError) as exc:
        raise _bad(f"invalid threshold: {exc}") from None


def _subtable(table: SeriesTable, rows) -> SeriesTable:
    return SeriesTable(table.level, table.variable, table.units,
                       table.weighting, table.base_year, table.frequency,
                       tuple(rows))


def _records(rows) -> list[dict]:
    return [{"region_id": rid, "time": ts, "value": v} for rid, ts, v in rows]


def _json_bytes(payload) -> Response:
    return Response(content=json.dumps(payload, ensure_ascii=False,
                                       separators=(",", ":")),
                    media_type="application/json")


def create_app(store: Store, cors_origin: str | None = None) -> FastAPI:
    app = FastAPI(title="zonalclim", docs_url=None, redoc_url=None)
    origin = cors_origin or os.environ.get("ZONALCLIM_CORS_ORIGIN", "*")
    app.add_middleware(CORSMiddleware, allow_origins=[origin],
                       allow_methods=["GET"], allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(_req: Request, exc: StarletteHTTPException):
        return JSONResponse(status_code=exc.status_code,
                            content={"code": "http_error",
                                     "message": str(exc.detail)})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "invalid_params",
                                     "message": str(exc)})

    @app.exception_handler(ZonalClimError)
    async def _domain_error(_req: Request, exc: ZonalClimError):
        return JSONResponse(status_code=500,
                            content={"code": "internal_error",
                                     "message": str(exc)})

    def load_table(params: dict) -> tuple[SeriesTable, DatasetKey]:
        key = _parse_key(params)
        try:
            table, _meta = store.lookup(key)
        except NotFoundError:
            raise ApiError(404, "not_found",
                           f"no stored dataset for key {key.slug()}") from None
        return table, key

    def filtered_table(params: dict) -> tuple[SeriesTable, DatasetKey]:
        """Stored table after year/region filters and optional threshold counts."""
        table, key = load_table(params)
        threshold = _threshold_from(params)
        if threshold is not None:
            if key.frequency != "daily":
                raise _bad("threshold queries need a daily dataset",
                           code="not_daily")
            table = count_exceedance_days(table, threshold)
        return _subtable(table, _filter_rows(table, params)), key

    @app.get("/catalog")
    async def catalog():
        return _json_bytes([m.to_dict() for m in store.list_meta()])

    @app.get("/series")
    async def series(request: Request):
        params = dict(request.query_params)
        table, _ = load_table(params)
        rows = _filter_rows(table, params)
        offset = _parse_int(params, "offset", 0, minimum=0)
        limit = _parse_int(params, "limit", DEFAULT_LIMIT, minimum=0)
        return _json_bytes(_records(rows[offset:offset + limit]))

    @app.get("/map")
    async def map_values(request: Request):
        params = dict(request.query_params)
        table, _ = load_table(params)
        time = params.get("time")
        if not time:
            raise _bad("missing time parameter")
        if time not in set(table.timestamps()):
            raise ApiError(404, "time_out_of_coverage",
                           f"timestamp {time} is outside the dataset coverage")
        rows = _filter_rows(table, params)
        payload = {rid: v for rid, ts, v in rows if ts == time}
        for rid in {r for r, _, _ in rows}:
            payload.setdefault(rid, None)
        return _json_bytes(dict(sorted(payload.items())))

    @app.get("/extremes")
    async def extremes(request: Request):
        params = dict(request.query_params)
        table, key = load_table(params)
        if key.frequency != "daily":
            raise _bad("extreme-day counts need a daily dataset", code="not_daily")
        threshold = _threshold_from(params)
        if threshold is None:
            raise _bad("threshold parameters (mode, value, period) are required")
        counts = count_exceedance_days(table, threshold)
        rows = _filter_rows(counts, params)
        return _json_bytes(_records(rows))

    @app.get("/download")
    async def download(request: Request):
        params = dict(request.query_params)
        shape = params.get("shape", "long")
        format = params.get("format", "csv")
        if shape not in SHAPES:
            raise _bad(f"unknown shape {shape!r}")
        if format not in FORMATS:
            raise _bad(f"unknown format {format!r}")
        table, key = filtered_table(params)
        data = export(table, shape, format)
        media = "text/csv" if format == "csv" else "application/json"
        filename = f"{key.slug()}_{shape}.{format}"
        return Response(content=data, media_type=media, headers={
            "Content-Disposition": f'attachment; filename="{filename}"'})

    @app.get("/preview")
    async def preview(request: Request):
        params = dict(request.query_params)
        shape = params.get("shape", "long")
        if shape not in SHAPES:
            raise _bad(f"unknown shape {shape!r}")
        n = _parse_int(params, "n", 10, minimum=0)
        table, key = filtered_table(params)
        records = json.loads(export(table, shape, "json"))
        meta = {"key": key.to_dict(), "shape": shape,
                "total_records": len(records),
                "variable": table.variable, "units": table.units,
                "frequency": table.frequency}
        return _json_bytes({"meta": meta, "records": records[:n]})

    @app.get("/boundaries")
    async def boundaries(request: Request):
        level = request.query_params.get("level", "")
        if level not in ("L0", "L1"):
            raise _bad(f"unknown level {level!r}")
        try:
            data = store.boundaries(level)
        except NotFoundError as exc:
            raise ApiError(404, "not_found", str(exc)) from None
        return Response(content=data, media_type="application/geo+json")

    return app


def serve(store_dir: str, host: str | None = None, port: int | None = None):
    """Run the service with uvicorn; bind address from ZONALCLIM_ADDR."""
    import uvicorn

    addr = os.environ.get("ZONALCLIM_ADDR", "127.0.0.1:8000")
    env_host, _, env_port = addr.partition(":")
    host = host or env_host or "127.0.0.1"
    port = port if port is not None else int(env_port or 8000)
    app = create_app(Store(store_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")
