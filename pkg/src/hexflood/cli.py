"""Command line entry points: fetch-dem, simulate, report, render.

Exit codes are uniform across subcommands: 0 success, 2 usage or
configuration problems, 3 network/provider failures, 4 unusable input
data, 5 output I/O failures. Every output file is written to a
temporary name and renamed into place, so a crash never leaves a
half-written artifact behind.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .analysis import (
    export_depth_csv,
    flood_zones,
    grid_from_depth_records,
    load_depth_csv,
    render_depth_map,
    report_as_dict,
    summarize,
)
from .elevation_client import ProviderConfig, fetch_elevation_grid
from .errors import (
    DataGapError,
    OutOfBoundsError,
    ParseError,
    ProviderError,
    ResourceLimitError,
)
from .hexgrid import metrics_from_width
from .hydro import (
    BOUNDARIES,
    BOUNDARY_CLOSED,
    SimulationParams,
    run_scenario,
)
from .terrain import (
    METERS_PER_DEGREE,
    GeoPoint,
    HexTerrain,
    load_elevation_raster,
    sample_to_hex,
    write_raster_csv,
)

_DEFAULT_CACHE_DIR = "dem_cache"
_SNAPSHOT_NAME = "step_{:06d}.csv"


@dataclass
class FileTerrainSource:
    path: str
    format: str
    origin: GeoPoint | None = None
    extent: tuple[int, int] | None = None


@dataclass
class SyntheticTerrainSource:
    kind: str
    extent: tuple[int, int]
    params: dict[str, float] | None = None


@dataclass
class ProviderTerrainSource:
    base_url: str
    bbox: tuple[float, float, float, float]
    rows: int
    cols: int
    cache_dir: str = _DEFAULT_CACHE_DIR
    api_key_env: str | None = None
    batch_size: int = 256
    retries: int = 3
    backoff_ms: int = 250
    origin: GeoPoint | None = None
    extent: tuple[int, int] | None = None


@dataclass
class ScenarioConfig:
    terrain: FileTerrainSource | SyntheticTerrainSource | ProviderTerrainSource
    rain_rate: float
    rain_duration: float
    equilibrate_duration: float
    output_dir: str
    hex_width: float = 4.0
    step_seconds: float = 10.0
    seed: int = 0
    boundary: str = BOUNDARY_CLOSED
    snapshot_every: int = 0


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ValueError(f"unknown config key {key!r} in {where}")
    for key in required:
        if key not in obj:
            raise ValueError(f"missing required config key {key!r} in {where}")


def _number(obj: dict, key: str, where: str, *, minimum: float | None = None,
            allow_equal: bool = True) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValueError(f"config key {key!r} in {where} must be a finite number, got {value!r}")
    if minimum is not None:
        if allow_equal and value < minimum:
            raise ValueError(f"config key {key!r} in {where} must be >= {minimum}, got {value!r}")
        if not allow_equal and value <= minimum:
            raise ValueError(f"config key {key!r} in {where} must be > {minimum}, got {value!r}")
    return float(value)


def _integer(obj: dict, key: str, where: str, minimum: int) -> int:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"config key {key!r} in {where} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"config key {key!r} in {where} must be >= {minimum}, got {value!r}")
    return value


def _string(obj: dict, key: str, where: str) -> str:
    value = obj[key]
    if not isinstance(value, str) or not value:
        raise ValueError(f"config key {key!r} in {where} must be a non-empty string, got {value!r}")
    return value


def _geo_pair(obj: dict, key: str, where: str) -> GeoPoint:
    value = obj[key]
    if not (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ValueError(f"config key {key!r} in {where} must be [lat, lon], got {value!r}")
    return GeoPoint(float(value[0]), float(value[1]))


def _extent_pair(obj: dict, key: str, where: str) -> tuple[int, int]:
    value = obj[key]
    if not (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in value)):
        raise ValueError(f"config key {key!r} in {where} must be [nq, nr] positive integers, got {value!r}")
    return (value[0], value[1])


def _parse_terrain_source(obj) -> FileTerrainSource | SyntheticTerrainSource | ProviderTerrainSource:
    where = "terrain"
    if not isinstance(obj, dict):
        raise ValueError(f"config key 'terrain' must be an object, got {obj!r}")
    sources = [k for k in ("file", "synthetic", "provider") if k in obj]
    if len(sources) != 1:
        raise ValueError(
            f"terrain must contain exactly one of 'file', 'synthetic' or 'provider', got {sorted(obj)}"
        )
    _require_keys(obj, {"file", "synthetic", "provider"}, set(), where)
    kind = sources[0]
    body = obj[kind]
    if not isinstance(body, dict):
        raise ValueError(f"config key {kind!r} in terrain must be an object, got {body!r}")

    if kind == "file":
        where = "terrain.file"
        _require_keys(body, {"path", "format", "origin", "extent"}, {"path", "format"}, where)
        fmt = _string(body, "format", where)
        if fmt not in ("esri-ascii", "csv"):
            raise ValueError(f"config key 'format' in {where} must be 'esri-ascii' or 'csv', got {fmt!r}")
        return FileTerrainSource(
            path=_string(body, "path", where),
            format=fmt,
            origin=_geo_pair(body, "origin", where) if "origin" in body else None,
            extent=_extent_pair(body, "extent", where) if "extent" in body else None,
        )
    if kind == "synthetic":
        where = "terrain.synthetic"
        _require_keys(body, {"kind", "extent", "params"}, {"kind", "extent"}, where)
        params = None
        if "params" in body:
            if not (isinstance(body["params"], dict)
                    and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                            for v in body["params"].values())):
                raise ValueError(f"config key 'params' in {where} must map names to numbers")
            params = {k: float(v) for k, v in body["params"].items()}
        return SyntheticTerrainSource(
            kind=_string(body, "kind", where),
            extent=_extent_pair(body, "extent", where),
            params=params,
        )
    where = "terrain.provider"
    _require_keys(
        body,
        {"base_url", "bbox", "rows", "cols", "cache_dir", "api_key_env",
         "batch_size", "retries", "backoff_ms", "origin", "extent"},
        {"base_url", "bbox", "rows", "cols"},
        where,
    )
    bbox = body["bbox"]
    if not (isinstance(bbox, list) and len(bbox) == 4
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)):
        raise ValueError(f"config key 'bbox' in {where} must be [south, west, north, east]")
    return ProviderTerrainSource(
        base_url=_string(body, "base_url", where),
        bbox=tuple(float(v) for v in bbox),
        rows=_integer(body, "rows", where, 1),
        cols=_integer(body, "cols", where, 1),
        cache_dir=_string(body, "cache_dir", where) if "cache_dir" in body else _DEFAULT_CACHE_DIR,
        api_key_env=_string(body, "api_key_env", where) if "api_key_env" in body else None,
        batch_size=_integer(body, "batch_size", where, 1) if "batch_size" in body else 256,
        retries=_integer(body, "retries", where, 0) if "retries" in body else 3,
        backoff_ms=_integer(body, "backoff_ms", where, 0) if "backoff_ms" in body else 250,
        origin=_geo_pair(body, "origin", where) if "origin" in body else None,
        extent=_extent_pair(body, "extent", where) if "extent" in body else None,
    )


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario config JSON file."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    where = "config"
    allowed = {"terrain", "rain_rate", "rain_duration", "equilibrate_duration", "output_dir",
               "hex_width", "step_seconds", "seed", "boundary", "snapshot_every"}
    required = {"terrain", "rain_rate", "rain_duration", "equilibrate_duration", "output_dir"}
    _require_keys(raw, allowed, required, where)
    boundary = raw.get("boundary", BOUNDARY_CLOSED)
    if boundary not in BOUNDARIES:
        raise ValueError(f"config key 'boundary' must be one of {BOUNDARIES}, got {boundary!r}")
    return ScenarioConfig(
        terrain=_parse_terrain_source(raw["terrain"]),
        rain_rate=_number(raw, "rain_rate", where, minimum=0.0),
        rain_duration=_number(raw, "rain_duration", where, minimum=0.0),
        equilibrate_duration=_number(raw, "equilibrate_duration", where, minimum=0.0),
        output_dir=_string(raw, "output_dir", where),
        hex_width=_number(raw, "hex_width", where, minimum=0.0, allow_equal=False)
        if "hex_width" in raw else 4.0,
        step_seconds=_number(raw, "step_seconds", where, minimum=0.0, allow_equal=False)
        if "step_seconds" in raw else 10.0,
        seed=_integer(raw, "seed", where, 0) if "seed" in raw else 0,
        boundary=boundary,
        snapshot_every=_integer(raw, "snapshot_every", where, 0) if "snapshot_every" in raw else 0,
    )


def _auto_extent(raster, metrics, origin: GeoPoint) -> tuple[int, int]:
    """Largest cell block anchored at the origin that stays inside the bbox.

    Rows shear the block eastward by half a width each, which eats into
    the columns that still fit.
    """
    south, west, north, east = raster.bbox
    lat_m = (north - origin.lat) * METERS_PER_DEGREE
    lon_m = (east - origin.lon) * METERS_PER_DEGREE * math.cos(math.radians(origin.lat))
    row_pitch = 1.5 * metrics.size
    nr = int(math.floor(lat_m / row_pitch + 1e-12)) + 1
    if nr < 1:
        raise OutOfBoundsError("raster bbox has no room for a hex row north of the origin")
    shear = metrics.width / 2.0 * (nr - 1)
    nq = int(math.floor((lon_m - shear) / metrics.width + 1e-12)) + 1
    if nq < 1:
        raise OutOfBoundsError("raster bbox has no room for a hex column east of the origin")
    return nq, nr


def _build_terrain(cfg: ScenarioConfig) -> HexTerrain:
    metrics = metrics_from_width(cfg.hex_width)
    src = cfg.terrain
    if isinstance(src, SyntheticTerrainSource):
        from .terrain import synthetic_terrain

        return synthetic_terrain(src.kind, src.extent, metrics, src.params)
    if isinstance(src, FileTerrainSource):
        raster = load_elevation_raster(src.path, src.format)
    else:
        provider_config = ProviderConfig(
            base_url=src.base_url,
            api_key_env=src.api_key_env,
            batch_size=src.batch_size,
            max_retries=src.retries,
            backoff_ms=src.backoff_ms,
        )
        raster = fetch_elevation_grid(
            src.bbox, src.rows, src.cols, provider_config, cache_dir=src.cache_dir
        )
    origin = src.origin or GeoPoint(raster.bbox[0], raster.bbox[1])
    extent = src.extent or _auto_extent(raster, metrics, origin)
    return sample_to_hex(raster, metrics, origin, extent)


def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_bytes_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _depth_csv_text(grid) -> str:
    buf = io.StringIO()
    export_depth_csv(grid, buf)
    return buf.getvalue()


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def cmd_fetch_dem(bbox_text: str, rows: int, cols: int, out: str,
                  provider_url: str, api_key_env: str | None,
                  batch_size: int, retries: int, backoff_ms: int,
                  cache_dir: str) -> int:
    try:
        parts = [float(v) for v in bbox_text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"--bbox needs 4 comma-separated numbers, got {len(parts)}")
        bbox = (parts[0], parts[1], parts[2], parts[3])
        config = ProviderConfig(
            base_url=provider_url, api_key_env=api_key_env,
            batch_size=batch_size, max_retries=retries, backoff_ms=backoff_ms,
        )
    except ValueError as exc:
        _fail(str(exc))
        return 2
    try:
        raster = fetch_elevation_grid(bbox, rows, cols, config, cache_dir=cache_dir)
    except ProviderError as exc:
        _fail(str(exc))
        return 3
    except ValueError as exc:
        _fail(str(exc))
        return 2
    try:
        buf = io.StringIO()
        write_raster_csv(raster, buf)
        out_path = Path(out)
        if out_path.parent != Path(""):
            out_path.parent.mkdir(parents=True, exist_ok=True)
        _write_text_atomic(out_path, buf.getvalue())
    except OSError as exc:
        _fail(f"cannot write {out}: {exc}")
        return 5
    print(f"wrote {out} ({rows}x{cols} nodes)")
    return 0


def cmd_simulate(config_path: str) -> int:
    try:
        cfg = load_scenario_config(config_path)
        params = SimulationParams(
            rain_rate=cfg.rain_rate,
            rain_duration=cfg.rain_duration,
            equilibrate_duration=cfg.equilibrate_duration,
            step_seconds=cfg.step_seconds,
            seed=cfg.seed,
        )
    except OSError as exc:
        _fail(f"cannot read config: {exc}")
        return 2
    except ValueError as exc:
        _fail(str(exc))
        return 2

    try:
        terrain = _build_terrain(cfg)
    except ProviderError as exc:
        _fail(str(exc))
        return 3
    except ResourceLimitError as exc:
        _fail(str(exc))
        return 2
    except (OSError, ValueError) as exc:
        _fail(f"terrain error: {exc}")
        return 4

    try:
        result = run_scenario(terrain, params, cfg.boundary, cfg.snapshot_every)
    except ResourceLimitError as exc:
        _fail(str(exc))
        return 2

    report = summarize(result.final.depths)
    report_json = json.dumps(report_as_dict(report), sort_keys=True, indent=2) + "\n"
    try:
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for snap in result.snapshots:
            text = _depth_csv_text(snap.grid)
            is_cadence = (
                cfg.snapshot_every > 0 and snap.step > 0
                and snap.step % cfg.snapshot_every == 0
            )
            if is_cadence:
                _write_text_atomic(out_dir / _SNAPSHOT_NAME.format(snap.step), text)
            for tag in snap.tags:
                _write_text_atomic(out_dir / f"{tag}.csv", text)
        _write_text_atomic(out_dir / "report.json", report_json)
        image = io.BytesIO()
        render_depth_map(result.final, image, pixels_per_meter=1.0)
        _write_bytes_atomic(out_dir / "final.ppm", image.getvalue())
    except OSError as exc:
        _fail(f"cannot write outputs: {exc}")
        return 5
    print(json.dumps(report_as_dict(report), sort_keys=True))
    return 0


def cmd_report(depths_path: str, threshold: float, hex_width: float) -> int:
    try:
        metrics = metrics_from_width(hex_width)
        if not (math.isfinite(threshold) and threshold > 0.0):
            raise ValueError(f"threshold must be positive, got {threshold!r}")
    except ValueError as exc:
        _fail(str(exc))
        return 2
    try:
        records = load_depth_csv(depths_path)
    except ParseError as exc:
        _fail(f"malformed depth CSV: {exc}")
        return 2
    except OSError as exc:
        _fail(f"cannot read {depths_path}: {exc}")
        return 4

    report = summarize([d for _, _, d in records])
    print(json.dumps(report_as_dict(report), sort_keys=True))
    print(f"volume_m3={report.sum * metrics.area:.6f} (depth_sum_m x cell_area_m2)")
    if records:
        grid = grid_from_depth_records(records, hex_width_m=hex_width)
        zones = flood_zones(grid, threshold)
    else:
        zones = []
    print(f"zones={len(zones)} threshold_m={threshold:.6f}")
    print("label,cells,area_m2,max_depth_m")
    for zone in zones:
        print(f"{zone.label},{len(zone.cells)},{zone.area_m2:.6f},{zone.max_depth:.6f}")
    return 0


def cmd_render(depths_path: str, out: str, pixels_per_meter: float, hex_width: float) -> int:
    try:
        metrics_from_width(hex_width)
        if not (math.isfinite(pixels_per_meter) and pixels_per_meter > 0.0):
            raise ValueError(f"pixels-per-meter must be positive, got {pixels_per_meter!r}")
    except ValueError as exc:
        _fail(str(exc))
        return 2
    try:
        records = load_depth_csv(depths_path)
        grid = grid_from_depth_records(records, hex_width_m=hex_width)
    except (OSError, ValueError) as exc:
        _fail(f"cannot use {depths_path}: {exc}")
        return 4
    try:
        image = io.BytesIO()
        render_depth_map(grid, image, pixels_per_meter=pixels_per_meter)
        out_path = Path(out)
        if out_path.parent != Path(""):
            out_path.parent.mkdir(parents=True, exist_ok=True)
        _write_bytes_atomic(out_path, image.getvalue())
    except OSError as exc:
        _fail(f"cannot write {out}: {exc}")
        return 5
    print(f"wrote {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexflood",
        description="Rainfall runoff and ponding simulation on a hexagonal grid.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch-dem", help="download an elevation lattice to a CSV raster")
    p.add_argument("--bbox", required=True, help="south,west,north,east in degrees")
    p.add_argument("--rows", type=int, required=True, help="lattice rows")
    p.add_argument("--cols", type=int, required=True, help="lattice columns")
    p.add_argument("--out", required=True, help="output CSV raster path")
    p.add_argument("--provider-url", required=True,
                   help="elevation service URL, or synthetic: for the built-in test provider")
    p.add_argument("--api-key-env", default=None,
                   help="name of the environment variable holding the API key")
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--backoff-ms", type=int, default=250)
    p.add_argument("--cache-dir", default=_DEFAULT_CACHE_DIR)

    p = sub.add_parser("simulate", help="run a rainfall scenario from a config file")
    p.add_argument("--config", required=True, help="scenario config JSON path")

    p = sub.add_parser("report", help="statistics and flood zones from a depth CSV")
    p.add_argument("--depths", required=True, help="depth CSV path")
    p.add_argument("--threshold", type=float, default=2.0, help="zone depth threshold in meters")
    p.add_argument("--hex-width", type=float, default=4.0, help="cell width in meters")

    p = sub.add_parser("render", help="render a depth CSV to a PPM image")
    p.add_argument("--depths", required=True, help="depth CSV path")
    p.add_argument("--out", required=True, help="output PPM path")
    p.add_argument("--pixels-per-meter", type=float, default=1.0)
    p.add_argument("--hex-width", type=float, default=4.0, help="cell width in meters")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    if args.command == "fetch-dem":
        return cmd_fetch_dem(
            args.bbox, args.rows, args.cols, args.out, args.provider_url,
            args.api_key_env, args.batch_size, args.retries, args.backoff_ms,
            args.cache_dir,
        )
    if args.command == "simulate":
        return cmd_simulate(args.config)
    if args.command == "report":
        return cmd_report(args.depths, args.threshold, args.hex_width)
    return cmd_render(args.depths, args.out, args.pixels_per_meter, args.hex_width)
