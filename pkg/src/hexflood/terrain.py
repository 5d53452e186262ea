"""Terrain ingestion: raster formats, geodesy, and hex sampling.

Rasters are node lattices: entry (i, j) sits at

    lat = south + i * (north - south) / (rows - 1)
    lon = west + j * (east - west) / (cols - 1)

with row 0 the southernmost row. ESRI ASCII sources store the north row
first and are flipped on load; their values are treated as cell centers,
so the node lattice starts half a cell in from the written corner.

Hex terrains live in a local tangent plane around an origin geographic
point: x east, y north, meters, with meters-per-degree-longitude scaled
by cos(latitude) of the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from .errors import DataGapError, OutOfBoundsError, ParseError, ResourceLimitError
from .hexgrid import (
    NEIGHBOR_OFFSETS,
    AxialCoord,
    HexMetrics,
    WorldPoint,
    axial_to_world_arrays,
)

EARTH_RADIUS_M = 6378137.0
METERS_PER_DEGREE = math.pi * EARTH_RADIUS_M / 180.0

# Refuse to build rasters or grids past this many cells; a typo in an
# extent should fail fast instead of exhausting memory.
MAX_CELLS = 50_000_000

_ESRI_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat!r}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon!r}")


@dataclass
class ElevationRaster:
    """A rectangular lattice of elevation samples in geographic coordinates."""

    bbox: tuple[float, float, float, float]  # (south, west, north, east) degrees
    rows: int
    cols: int
    heights: np.ndarray                      # (rows, cols) float64, row 0 = south
    nodata: float = math.nan

    def __post_init__(self):
        south, west, north, east = self.bbox
        if not (north > south and east > west):
            raise ValueError(f"invalid bbox (need north > south, east > west): {self.bbox!r}")
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"raster must have at least one row and column, got {self.rows}x{self.cols}")
        if self.rows * self.cols > MAX_CELLS:
            raise ResourceLimitError(f"raster of {self.rows}x{self.cols} nodes exceeds the cell limit")
        self.heights = np.asarray(self.heights, dtype=np.float64)
        if self.heights.shape != (self.rows, self.cols):
            raise ValueError(
                f"heights shape {self.heights.shape} does not match {self.rows}x{self.cols}"
            )

    def is_nodata(self, values: np.ndarray) -> np.ndarray:
        mask = np.isnan(values)
        if not math.isnan(self.nodata):
            mask = mask | (values == self.nodata)
        return mask

    def node_position(self, i: int, j: int) -> GeoPoint:
        south, west, north, east = self.bbox
        lat = south if self.rows == 1 else south + i * (north - south) / (self.rows - 1)
        lon = west if self.cols == 1 else west + j * (east - west) / (self.cols - 1)
        return GeoPoint(lat, lon)


def _read_text(source: str | Path | IO[str]) -> str:
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_text(encoding="utf-8")


def load_elevation_raster(source: str | Path | IO[str], format: str) -> ElevationRaster:
    """Parse a raster from a path or text stream. format: esri-ascii | csv."""
    text = _read_text(source)
    if format == "esri-ascii":
        return _parse_esri_ascii(text)
    if format == "csv":
        return parse_raster_csv(text)
    raise ValueError(f"unknown raster format: {format!r}")


def _parse_esri_ascii(text: str) -> ElevationRaster:
    lines = text.splitlines()
    header: dict[str, float] = {}
    data_start = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0].lower()
        if key in _ESRI_HEADER_KEYS:
            if len(parts) != 2:
                raise ParseError(f"malformed header entry {raw!r}", line=lineno)
            try:
                header[key] = float(parts[1])
            except ValueError:
                raise ParseError(f"bad numeric value in header: {parts[1]!r}", line=lineno) from None
            continue
        if key[0].isalpha():
            raise ParseError(f"unknown header key {parts[0]!r}", line=lineno)
        data_start = lineno
        break
    for need in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
        if need not in header:
            raise ParseError(f"missing required header key {need!r}")
    ncols, nrows = header["ncols"], header["nrows"]
    if ncols != int(ncols) or nrows != int(nrows) or ncols < 1 or nrows < 1:
        raise ParseError(f"ncols/nrows must be positive integers, got {ncols}/{nrows}")
    ncols, nrows = int(ncols), int(nrows)
    if nrows * ncols > MAX_CELLS:
        raise ResourceLimitError(f"raster of {nrows}x{ncols} nodes exceeds the cell limit")
    cellsize = header["cellsize"]
    if not (math.isfinite(cellsize) and cellsize > 0):
        raise ParseError(f"cellsize must be positive, got {cellsize!r}")
    nodata = header.get("nodata_value", math.nan)

    if data_start is None:
        raise ParseError("no data rows found")
    grid = np.empty((nrows, ncols), dtype=np.float64)
    row = 0
    for lineno in range(data_start, len(lines) + 1):
        raw = lines[lineno - 1] if lineno <= len(lines) else ""
        line = raw.strip()
        if not line:
            continue
        if row >= nrows:
            raise ParseError("unexpected extra data row", line=lineno)
        fields = line.split()
        if len(fields) != ncols:
            raise ParseError(
                f"row {row} has {len(fields)} values, expected {ncols}", line=lineno
            )
        try:
            grid[row, :] = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"bad numeric value: {exc}", line=lineno) from None
        row += 1
    if row != nrows:
        raise ParseError(f"expected {nrows} data rows, found {row}")

    # File stores the north row first; flip to the internal south-first order.
    grid = grid[::-1, :].copy()
    half = cellsize / 2.0
    south = header["yllcorner"] + half
    west = header["xllcorner"] + half
    north = south + (nrows - 1) * cellsize if nrows > 1 else south + cellsize
    east = west + (ncols - 1) * cellsize if ncols > 1 else west + cellsize
    return ElevationRaster(
        bbox=(south, west, north, east), rows=nrows, cols=ncols, heights=grid, nodata=nodata
    )


def parse_raster_csv(text: str) -> ElevationRaster:
    """Parse the package's CSV raster format (row 0 = south row).

    An optional first line ``# bbox=S,W,N,E rows=R cols=C`` carries the
    geography; without it the raster spans the unit square (0,0,1,1).
    """
    lines = [ln for ln in text.splitlines()]
    bbox = None
    declared = None
    start = 0
    for idx, raw in enumerate(lines):
        if raw.strip():
            start = idx
            break
    else:
        raise ParseError("empty raster")
    first = lines[start].strip()
    if first.startswith("#"):
        bbox, declared = _parse_csv_header(first, start + 1)
        start += 1
    rows_data: list[list[float]] = []
    for lineno in range(start + 1, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line:
            continue
        try:
            rows_data.append([float(f) for f in line.split(",")])
        except ValueError as exc:
            raise ParseError(f"bad numeric value: {exc}", line=lineno) from None
        if len(rows_data) > 1 and len(rows_data[-1]) != len(rows_data[0]):
            raise ParseError(
                f"row has {len(rows_data[-1])} values, expected {len(rows_data[0])}",
                line=lineno,
            )
    if not rows_data:
        raise ParseError("no data rows found")
    rows, cols = len(rows_data), len(rows_data[0])
    if declared is not None and declared != (rows, cols):
        raise ParseError(
            f"header declares {declared[0]}x{declared[1]} but data is {rows}x{cols}"
        )
    if bbox is None:
        bbox = (0.0, 0.0, 1.0, 1.0)
    return ElevationRaster(bbox=bbox, rows=rows, cols=cols, heights=np.array(rows_data))


def _parse_csv_header(line: str, lineno: int) -> tuple[tuple[float, float, float, float], tuple[int, int]]:
    try:
        body = line.lstrip("#").strip()
        parts = dict(item.split("=", 1) for item in body.split())
        s, w, n, e = (float(v) for v in parts["bbox"].split(","))
        return (s, w, n, e), (int(parts["rows"]), int(parts["cols"]))
    except (KeyError, ValueError) as exc:
        raise ParseError(f"malformed raster header: {exc}", line=lineno) from None


def write_raster_csv(raster: ElevationRaster, stream: IO[str]) -> None:
    """Serialize with repr floats so a round trip is bit-identical."""
    s, w, n, e = raster.bbox
    stream.write(f"# bbox={s!r},{w!r},{n!r},{e!r} rows={raster.rows} cols={raster.cols}\n")
    for i in range(raster.rows):
        stream.write(",".join(repr(v) for v in raster.heights[i].tolist()))
        stream.write("\n")


def geodesic_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a sphere of radius EARTH_RADIUS_M."""
    p1, p2 = math.radians(a.lat), math.radians(b.lat)
    dp = math.radians(b.lat - a.lat)
    dl = math.radians(b.lon - a.lon)
    h = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def latlon_at(origin: GeoPoint, point: WorldPoint) -> GeoPoint:
    """Map a local-plane offset in meters back to geographic coordinates."""
    cos_lat = math.cos(math.radians(origin.lat))
    if cos_lat <= 1e-6:
        raise ValueError("origin too close to a pole for the local plane approximation")
    lat = origin.lat + point.y / METERS_PER_DEGREE
    lon = origin.lon + point.x / (METERS_PER_DEGREE * cos_lat)
    return GeoPoint(lat, lon)


class HexTerrain:
    """A parallelogram block of hex cells with ground elevations.

    Cells occupy q0 <= q < q0+nq, r0 <= r < r0+nr in axial coordinates.
    Storage order is canonical: sorted by (r, q), so index
    (r - r0) * nq + (q - q0) addresses a cell everywhere in the package.
    """

    def __init__(
        self,
        metrics: HexMetrics,
        origin: GeoPoint,
        q0: int,
        r0: int,
        nq: int,
        nr: int,
        heights: np.ndarray,
    ):
        if nq < 1 or nr < 1:
            raise ValueError(f"extent must be at least 1x1, got {nq}x{nr}")
        if nq * nr > MAX_CELLS:
            raise ResourceLimitError(f"terrain of {nq}x{nr} cells exceeds the cell limit")
        heights = np.asarray(heights, dtype=np.float64).reshape(-1)
        if heights.size != nq * nr:
            raise ValueError(f"expected {nq * nr} heights, got {heights.size}")
        if not np.all(np.isfinite(heights)):
            raise ValueError("terrain heights must be finite")
        self.metrics = metrics
        self.origin = origin
        self.q0 = q0
        self.r0 = r0
        self.nq = nq
        self.nr = nr
        self.heights = heights
        self._neighbor_table: np.ndarray | None = None

    @property
    def n_cells(self) -> int:
        return self.nq * self.nr

    @property
    def extent(self) -> tuple[int, int]:
        return (self.nq, self.nr)

    def contains(self, coord: AxialCoord) -> bool:
        return self.q0 <= coord.q < self.q0 + self.nq and self.r0 <= coord.r < self.r0 + self.nr

    def index_of(self, coord: AxialCoord) -> int:
        if not self.contains(coord):
            raise KeyError(f"cell {coord} is outside the terrain block")
        return (coord.r - self.r0) * self.nq + (coord.q - self.q0)

    def coord_at(self, index: int) -> AxialCoord:
        r, q = divmod(int(index), self.nq)
        return AxialCoord(self.q0 + q, self.r0 + r)

    def elevation_at(self, coord: AxialCoord) -> float:
        return float(self.heights[self.index_of(coord)])

    def cells(self) -> Iterator[tuple[AxialCoord, float]]:
        for i in range(self.n_cells):
            yield self.coord_at(i), float(self.heights[i])

    def axial_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        q = self.q0 + np.tile(np.arange(self.nq, dtype=np.int64), self.nr)
        r = self.r0 + np.repeat(np.arange(self.nr, dtype=np.int64), self.nq)
        return q, r

    def world_centers(self) -> tuple[np.ndarray, np.ndarray]:
        q, r = self.axial_arrays()
        return axial_to_world_arrays(q, r, self.metrics)

    def neighbor_table(self) -> np.ndarray:
        """(n_cells, 6) int32 indices in the fixed edge order, -1 off-block."""
        if self._neighbor_table is None:
            q, r = self.axial_arrays()
            table = np.empty((self.n_cells, 6), dtype=np.int32)
            for e, (dq, dr) in enumerate(NEIGHBOR_OFFSETS):
                nq_ = q + dq
                nr_ = r + dr
                inside = (
                    (nq_ >= self.q0) & (nq_ < self.q0 + self.nq)
                    & (nr_ >= self.r0) & (nr_ < self.r0 + self.nr)
                )
                idx = (nr_ - self.r0) * self.nq + (nq_ - self.q0)
                table[:, e] = np.where(inside, idx, -1).astype(np.int32)
            self._neighbor_table = table
        return self._neighbor_table


def sample_to_hex(
    raster: ElevationRaster,
    metrics: HexMetrics,
    origin: GeoPoint,
    extent: tuple[int, int],
    q0: int = 0,
    r0: int = 0,
) -> HexTerrain:
    """Bilinearly sample raster elevations at every hex center of a block.

    Every hex center must land inside the raster bbox and away from
    nodata nodes; violations raise naming the offending cell.
    """
    nq, nr = extent
    if nq < 1 or nr < 1:
        raise ValueError(f"extent must be at least 1x1, got {extent!r}")
    if nq * nr > MAX_CELLS:
        raise ResourceLimitError(f"terrain of {nq}x{nr} cells exceeds the cell limit")
    q = q0 + np.tile(np.arange(nq, dtype=np.int64), nr)
    r = r0 + np.repeat(np.arange(nr, dtype=np.int64), nq)
    x, y = axial_to_world_arrays(q, r, metrics)
    cos_lat = math.cos(math.radians(origin.lat))
    if cos_lat <= 1e-6:
        raise ValueError("origin too close to a pole for the local plane approximation")
    lat = origin.lat + y / METERS_PER_DEGREE
    lon = origin.lon + x / (METERS_PER_DEGREE * cos_lat)

    south, west, north, east = raster.bbox
    slack_lat = 1e-12 * max(1.0, abs(north - south))
    slack_lon = 1e-12 * max(1.0, abs(east - west))
    bad = (lat < south - slack_lat) | (lat > north + slack_lat) \
        | (lon < west - slack_lon) | (lon > east + slack_lon)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise OutOfBoundsError(
            f"hex center ({q[i]}, {r[i]}) at lat={lat[i]:.8f} lon={lon[i]:.8f} "
            f"falls outside the raster bbox {raster.bbox}"
        )

    heights = _bilinear(raster, lat, lon, q, r)
    return HexTerrain(metrics, origin, q0, r0, nq, nr, heights)


def _bilinear(
    raster: ElevationRaster, lat: np.ndarray, lon: np.ndarray,
    q: np.ndarray, r: np.ndarray,
) -> np.ndarray:
    south, west, north, east = raster.bbox
    if raster.rows > 1:
        u = (lat - south) / ((north - south) / (raster.rows - 1))
        i0 = np.clip(np.floor(u).astype(np.int64), 0, raster.rows - 2)
        fy = u - i0
    else:
        i0 = np.zeros(lat.shape, dtype=np.int64)
        fy = np.zeros(lat.shape)
    if raster.cols > 1:
        v = (lon - west) / ((east - west) / (raster.cols - 1))
        j0 = np.clip(np.floor(v).astype(np.int64), 0, raster.cols - 2)
        fx = v - j0
    else:
        j0 = np.zeros(lon.shape, dtype=np.int64)
        fx = np.zeros(lon.shape)
    i1 = np.minimum(i0 + 1, raster.rows - 1)
    j1 = np.minimum(j0 + 1, raster.cols - 1)
    h = raster.heights
    c00, c01 = h[i0, j0], h[i0, j1]
    c10, c11 = h[i1, j0], h[i1, j1]
    gap = (
        raster.is_nodata(c00) | raster.is_nodata(c01)
        | raster.is_nodata(c10) | raster.is_nodata(c11)
    )
    if np.any(gap):
        i = int(np.argmax(gap))
        raise DataGapError(
            f"hex center ({q[i]}, {r[i]}) interpolates from a nodata raster node"
        )
    top = c00 * (1.0 - fx) + c01 * fx
    bottom = c10 * (1.0 - fx) + c11 * fx
    return top * (1.0 - fy) + bottom * fy


_SYNTHETIC_PARAM_NAMES = {
    "plane": ("c",),
    "tilted-plane": ("a", "b", "c"),
    "bowl": ("k", "c"),
    "v-valley": ("k", "c"),
}


def synthetic_terrain(
    kind: str,
    extent: tuple[int, int],
    metrics: HexMetrics,
    params: dict[str, float] | None = None,
    origin: GeoPoint = GeoPoint(0.0, 0.0),
) -> HexTerrain:
    """Analytic test terrains, centered so axial (0, 0) is the middle cell.

    kinds: plane h=c; tilted-plane h=a*x+b*y+c; bowl h=k*(x^2+y^2)+c;
    v-valley h=k*|x|+c. x and y are world meters of each cell center.
    """
    if kind not in _SYNTHETIC_PARAM_NAMES:
        raise ValueError(f"unknown synthetic terrain kind: {kind!r}")
    allowed = _SYNTHETIC_PARAM_NAMES[kind]
    p = {"a": 0.02, "b": 0.01, "c": 0.0, "k": 1e-4}
    for key, value in (params or {}).items():
        if key not in allowed:
            raise ValueError(f"parameter {key!r} does not apply to kind {kind!r}")
        p[key] = float(value)
    nq, nr = extent
    if nq < 1 or nr < 1:
        raise ValueError(f"extent must be at least 1x1, got {extent!r}")
    if nq * nr > MAX_CELLS:
        raise ResourceLimitError(f"terrain of {nq}x{nr} cells exceeds the cell limit")
    q0, r0 = -(nq // 2), -(nr // 2)
    q = q0 + np.tile(np.arange(nq, dtype=np.int64), nr)
    r = r0 + np.repeat(np.arange(nr, dtype=np.int64), nq)
    x, y = axial_to_world_arrays(q, r, metrics)
    if kind == "plane":
        heights = np.full(x.shape, p["c"])
    elif kind == "tilted-plane":
        heights = p["a"] * x + p["b"] * y + p["c"]
    elif kind == "bowl":
        heights = p["k"] * (x * x + y * y) + p["c"]
    else:
        heights = p["k"] * np.abs(x) + p["c"]
    return HexTerrain(metrics, origin, q0, r0, nq, nr, heights)


@dataclass
class NormalizedTerrain:
    """Terrain rescaled into a unit-width box with aspect preserved."""

    cells: list[AxialCoord]
    xy: np.ndarray        # (n, 2) scaled cell centers
    heights: np.ndarray   # (n,) scaled elevations
    scale: float


def normalize_extent(terrain: HexTerrain) -> NormalizedTerrain:
    """Scale coordinates and heights so the larger footprint axis is 1.0.

    The footprint pads the center span by one cell width per axis, which
    makes a single-cell terrain normalize by exactly 1 / width.
    """
    x, y = terrain.world_centers()
    width = terrain.metrics.width
    extent_x = float(x.max() - x.min()) + width
    extent_y = float(y.max() - y.min()) + width
    scale = 1.0 / max(extent_x, extent_y)
    q, r = terrain.axial_arrays()
    cells = [AxialCoord(int(qq), int(rr)) for qq, rr in zip(q, r)]
    xy = np.stack([x * scale, y * scale], axis=1)
    return NormalizedTerrain(cells=cells, xy=xy, heights=terrain.heights * scale, scale=scale)
