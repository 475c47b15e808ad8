"""Operator command line: build weights and coverage, aggregate datasets,
count extreme days, validate inputs, and launch the HTTP service.

Exit codes: 0 success, 1 data error, 2 usage error. Progress and warnings go
to stderr; data goes to files or stdout only.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import api, catalog, geom, grid, temporal, weights, zonal
from .errors import ZonalClimError


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def parse_spec_literal(text: str) -> grid.GridSpec:
    """GridSpec from `rows=..,cols=..,lon_west=..,lat_north=..,cell_size=..,
    registration=..` or from the header of an existing archive file."""
    path = Path(text)
    if path.exists():
        with open(path, "rb") as fh:
            return grid.parse_grid_archive(fh).spec
    fields = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise ZonalClimError(f"malformed spec component {part!r}")
        fields[key.strip()] = value.strip()
    try:
        return grid.GridSpec(int(fields["rows"]), int(fields["cols"]),
                             float(fields["lon_west"]), float(fields["lat_north"]),
                             float(fields["cell_size"]),
                             fields.get("registration", "corner"))
    except KeyError as exc:
        raise ZonalClimError(f"spec literal missing {exc}") from None


def _load_weight(arg: str, spec: grid.GridSpec) -> weights.WeightGrid:
    if arg == "unweighted":
        return weights.unweighted(spec)
    return weights.read_weight_grid(arg)


def _cmd_build_weights(args) -> int:
    if args.kind == "unweighted":
        if not args.target_spec:
            raise ZonalClimError("--target-spec is required for --kind unweighted")
        w = weights.unweighted(parse_spec_literal(args.target_spec))
    elif args.kind == "population":
        density_series = grid.parse_grid_archive(args.density)
        density = density_series.frames[0]
        _log(f"building population weights from {args.density}")
        w = weights.population_weight(density, density.spec, args.base_year)
        if args.target_spec:
            target = parse_spec_literal(args.target_spec)
            if target != density.spec:
                _log("resampling onto the half-offset target grid")
                w = weights.resample_half_offset(w, target)
    else:
        lights_series = grid.parse_grid_archive(args.lights)
        lights = lights_series.frames[0]
        _log(f"downsampling night lights by factor {args.factor}")
        coarse = weights.downsample_block_mean(lights, args.factor)
        refs = []
        for ref_path in args.refs:
            ref = grid.parse_grid_archive(ref_path).frames[0]
            refs.append(weights.downsample_block_mean(ref, args.factor))
        _log("applying the high-latitude zero correction")
        corrected = weights.aurora_correct(coarse, refs, args.lat_cut)
        w = weights.WeightGrid(corrected.spec,
                               np.where(corrected.missing, 0.0, corrected.values),
                               "nightlight", args.base_year)
        if args.target_spec:
            target = parse_spec_literal(args.target_spec)
            if target != w.spec:
                _log("resampling onto the half-offset target grid")
                w = weights.resample_half_offset(w, target)
    with open(args.out, "wb") as fh:
        weights.write_weight_grid(w, fh, encoding=args.encoding)
    _log(f"wrote {args.kind} weight grid to {args.out}")
    return 0


def _cmd_build_coverage(args) -> int:
    spec = parse_spec_literal(args.grid_spec)
    regions = geom.parse_geojson(args.boundaries, level=args.level)
    cov = geom.build_coverage(spec, regions, jobs=args.jobs)
    with open(args.out, "wb") as fh:
        geom.write_coverage(cov, fh)
    _log(f"wrote coverage for {len(cov.entries)} regions to {args.out}")
    return 0


def _aggregated_table(args) -> zonal.SeriesTable:
    series = grid.parse_grid_archive(args.climate)
    cov = geom.parse_coverage(args.coverage)
    w = _load_weight(args.weights, cov.spec)
    return zonal.aggregate_series(series, cov, w, jobs=args.jobs)


def _write_output(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(out).write_bytes(data)


def _cmd_aggregate(args) -> int:
    table = _aggregated_table(args)
    if args.upscale != "none":
        table = temporal.upscale(table, "annual", args.upscale)
    _write_output(catalog.export(table, args.shape, args.format), args.out)
    if args.out:
        _log(f"wrote {args.shape}-{args.format} table to {args.out}")
    return 0


def _cmd_extremes(args) -> int:
    table = _aggregated_table(args)
    spec = temporal.ThresholdSpec(args.mode, args.value, args.period)
    counts = temporal.count_exceedance_days(table, spec)
    _write_output(catalog.export(counts, args.shape, args.format), args.out)
    return 0


def _cmd_serve(args) -> int:
    api.serve(args.store, host=args.host, port=args.port)
    return 0


def _cmd_validate(args) -> int:
    findings: list[str] = []
    if args.archive:
        try:
            series = grid.parse_grid_archive(args.archive)
            print(f"ok: {len(series)} frames on a "
                  f"{series.spec.n_rows}x{series.spec.n_cols} "
                  f"{series.spec.registration} grid, variable "
                  f"{series.variable}, frequency {series.frequency}")
        except ZonalClimError as exc:
            findings.append(str(exc))
    if args.boundaries:
        try:
            regions = geom.parse_geojson(args.boundaries)
            print(f"ok: {len(regions.regions)} {regions.level} regions")
        except ZonalClimError as exc:
            findings.append(str(exc))
    for finding in findings:
        print(f"error: {finding}")
    return 1 if findings else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zonalclim",
        description="Aggregate gridded climate data to administrative regions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-weights", help="construct a weight grid archive")
    p.add_argument("--kind", required=True,
                   choices=["unweighted", "population", "nightlight"])
    p.add_argument("--base-year", type=int, default=None)
    p.add_argument("--density", help="population density archive")
    p.add_argument("--lights", help="fine night-light archive")
    p.add_argument("--refs", nargs=3, metavar="REF",
                   help="three reference-year night-light archives")
    p.add_argument("--factor", type=int, default=30,
                   help="block-mean downsampling factor")
    p.add_argument("--lat-cut", type=float, default=45.0)
    p.add_argument("--target-spec",
                   help="grid spec literal or archive whose spec to match")
    p.add_argument("--encoding", choices=["text", "le_float64"], default="text")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_weights)

    p = sub.add_parser("build-coverage", help="precompute region/cell coverage")
    p.add_argument("--grid-spec", required=True)
    p.add_argument("--boundaries", required=True)
    p.add_argument("--level", required=True, choices=["L0", "L1"])
    p.add_argument("--jobs", type=int, default=os.cpu_count(),
                   help="worker cap; outputs are identical at any value")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_coverage)

    p = sub.add_parser("aggregate", help="aggregate a climate archive to regions")
    p.add_argument("--climate", required=True)
    p.add_argument("--coverage", required=True)
    p.add_argument("--weights", default="unweighted",
                   help="weight archive path or the literal 'unweighted'")
    p.add_argument("--upscale", choices=["mean", "sum", "none"], default="none",
                   help="derive annual values with this statistic")
    p.add_argument("--shape", choices=["wide", "long"], default="long")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--jobs", type=int, default=os.cpu_count(),
                   help="worker cap; outputs are identical at any value")
    p.add_argument("--out", default=None, help="output file; stdout if omitted")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("extremes", help="count threshold-exceedance days")
    p.add_argument("--climate", required=True, help="daily climate archive")
    p.add_argument("--coverage", required=True)
    p.add_argument("--weights", default="unweighted")
    p.add_argument("--mode", required=True, choices=["absolute", "quantile"])
    p.add_argument("--value", required=True, type=float)
    p.add_argument("--period", required=True, choices=["month", "year"])
    p.add_argument("--shape", choices=["wide", "long"], default="long")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--jobs", type=int, default=os.cpu_count(),
                   help="worker cap; outputs are identical at any value")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_extremes)

    p = sub.add_parser("serve", help="run the HTTP service over a store")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("validate", help="schema-check an archive or boundaries")
    p.add_argument("--archive")
    p.add_argument("--boundaries")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "build-weights":
        if args.kind in ("population", "nightlight") and args.base_year is None:
            parser.error(f"--base-year is required with --kind {args.kind}")
        if args.kind == "population" and not args.density:
            parser.error("--density is required with --kind population")
        if args.kind == "nightlight" and not (args.lights and args.refs):
            parser.error("--lights and --refs are required with --kind nightlight")
    if args.command == "validate" and not (args.archive or args.boundaries):
        parser.error("pass --archive and/or --boundaries")
    try:
        return args.func(args)
    except ZonalClimError as exc:
        _log(f"error [{args.command}]: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
