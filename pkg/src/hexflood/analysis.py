"""Reporting on simulated water fields: statistics, zones, maps, CSV.

Flood zones are maximal 6-connected components of cells at or above a
depth threshold. Zone labels are assigned in order of each component's
smallest (r, q) member, so labeling never depends on traversal luck.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping

import numpy as np

from .errors import ParseError
from .hexgrid import (
    NEIGHBOR_OFFSETS,
    AxialCoord,
    metrics_from_width,
    world_to_axial_arrays,
)
from .terrain import GeoPoint, HexTerrain
from .hydro import WaterGrid

DEPTH_CSV_HEADER = "q,r,elevation_m,depth_m"

_BACKGROUND_RGB = (40, 44, 52)
_LIGHT_DIR = (-0.5, 0.5, math.sqrt(2.0) / 2.0)  # from the north-west, 45 degrees up


@dataclass(frozen=True)
class FloodReport:
    count: int
    sum: float
    mean: float
    sample_std: float
    min: float
    max: float


@dataclass(frozen=True)
class ColorRamp:
    start: tuple[int, int, int]
    end: tuple[int, int, int]


DEFAULT_RAMP = ColorRamp(start=(173, 216, 230), end=(8, 48, 107))


@dataclass
class FloodZone:
    label: int
    cells: list[AxialCoord]     # sorted by (r, q)
    max_depth: float
    area_m2: float


def summarize(depths) -> FloodReport:
    """Descriptive statistics of a depth field.

    Standard deviation is the sample estimate (n - 1 denominator), 0
    when fewer than two values. An empty field reports all zeros.
    """
    a = np.asarray(depths, dtype=np.float64).reshape(-1)
    if a.size == 0:
        return FloodReport(count=0, sum=0.0, mean=0.0, sample_std=0.0, min=0.0, max=0.0)
    if not np.all(np.isfinite(a)):
        raise ValueError("depth field contains NaN or infinite values")
    count = int(a.size)
    total = float(np.sum(a))
    mean = total / count
    if count > 1:
        ss = float(np.sum((a - mean) ** 2))
        std = math.sqrt(ss / (count - 1))
    else:
        std = 0.0
    return FloodReport(
        count=count, sum=total, mean=mean, sample_std=std,
        min=float(np.min(a)), max=float(np.max(a)),
    )


def zones_from_depths(
    depth_by_cell: Mapping[AxialCoord, float], threshold: float, cell_area_m2: float
) -> list[FloodZone]:
    """Connected components of {depth >= threshold}, deepest zone first."""
    if not (math.isfinite(threshold) and threshold > 0.0):
        raise ValueError(f"threshold must be positive, got {threshold!r}")
    qualifying = {c for c, d in depth_by_cell.items() if d >= threshold}
    seen: set[AxialCoord] = set()
    zones: list[FloodZone] = []
    label = 0
    for seed in sorted(qualifying, key=lambda c: (c.r, c.q)):
        if seed in seen:
            continue
        label += 1
        component: list[AxialCoord] = []
        queue = deque([seed])
        seen.add(seed)
        while queue:
            cell = queue.popleft()
            component.append(cell)
            for dq, dr in NEIGHBOR_OFFSETS:
                nb = AxialCoord(cell.q + dq, cell.r + dr)
                if nb in qualifying and nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        component.sort(key=lambda c: (c.r, c.q))
        zones.append(
            FloodZone(
                label=label,
                cells=component,
                max_depth=max(depth_by_cell[c] for c in component),
                area_m2=len(component) * cell_area_m2,
            )
        )
    zones.sort(key=lambda z: (-z.max_depth, z.label))
    return zones


def flood_zones(grid: WaterGrid, threshold: float) -> list[FloodZone]:
    terrain = grid.terrain
    depth_by_cell = {
        terrain.coord_at(i): float(grid.depths[i]) for i in range(terrain.n_cells)
    }
    return zones_from_depths(depth_by_cell, threshold, terrain.metrics.area)


def _hillshade_gray(terrain: HexTerrain) -> np.ndarray:
    """Per-cell gray level from a plane fit of each cell's neighborhood."""
    size = terrain.metrics.size
    h = terrain.heights
    nbr = terrain.neighbor_table()
    sxx = np.zeros(terrain.n_cells)
    sxy = np.zeros(terrain.n_cells)
    syy = np.zeros(terrain.n_cells)
    sxh = np.zeros(terrain.n_cells)
    syh = np.zeros(terrain.n_cells)
    for e, (dq, dr) in enumerate(NEIGHBOR_OFFSETS):
        dx = size * (math.sqrt(3.0) * dq + math.sqrt(3.0) / 2.0 * dr)
        dy = size * 1.5 * dr
        idx = nbr[:, e]
        present = idx >= 0
        dh = np.where(present, h[np.where(present, idx, 0)] - h, 0.0)
        sxx += np.where(present, dx * dx, 0.0)
        sxy += np.where(present, dx * dy, 0.0)
        syy += np.where(present, dy * dy, 0.0)
        sxh += np.where(present, dx * dh, 0.0)
        syh += np.where(present, dy * dh, 0.0)
    det = sxx * syy - sxy * sxy
    ok = det > 1e-12
    gx = np.where(ok, (sxh * syy - syh * sxy) / np.where(ok, det, 1.0), 0.0)
    gy = np.where(ok, (syh * sxx - sxh * sxy) / np.where(ok, det, 1.0), 0.0)
    norm = np.sqrt(gx * gx + gy * gy + 1.0)
    lx, ly, lz = _LIGHT_DIR
    shade = np.clip((-gx * lx - gy * ly + lz) / norm, 0.0, 1.0)
    return np.floor(70.0 + shade * 150.0 + 0.5)


def render_depth_map(
    grid: WaterGrid,
    stream: IO[bytes],
    ramp: ColorRamp = DEFAULT_RAMP,
    pixels_per_meter: float = 1.0,
) -> tuple[int, int]:
    """Rasterize the water field to a binary PPM (P6); returns (width, height).

    Each pixel takes the color of the cell containing it: wet cells get
    the ramp color scaled linearly from zero depth to the field maximum,
    dry cells get hillshaded terrain gray, pixels outside the block get
    a fixed background.
    """
    if not (math.isfinite(pixels_per_meter) and pixels_per_meter > 0.0):
        raise ValueError(f"pixels_per_meter must be positive, got {pixels_per_meter!r}")
    terrain = grid.terrain
    metrics = terrain.metrics
    cx, cy = terrain.world_centers()
    margin = metrics.size
    x_min = float(cx.min()) - margin
    x_max = float(cx.max()) + margin
    y_min = float(cy.min()) - margin
    y_max = float(cy.max()) + margin
    width_px = int(math.ceil((x_max - x_min) * pixels_per_meter))
    height_px = int(math.ceil((y_max - y_min) * pixels_per_meter))
    if width_px < 1 or height_px < 1:
        raise ValueError("rendered image would be empty; increase pixels_per_meter")

    px = x_min + (np.arange(width_px) + 0.5) / pixels_per_meter
    py = y_max - (np.arange(height_px) + 0.5) / pixels_per_meter
    wx, wy = np.meshgrid(px, py)
    q, r = world_to_axial_arrays(wx.ravel(), wy.ravel(), metrics)
    inside = (
        (q >= terrain.q0) & (q < terrain.q0 + terrain.nq)
        & (r >= terrain.r0) & (r < terrain.r0 + terrain.nr)
    )
    idx = np.where(inside, (r - terrain.r0) * terrain.nq + (q - terrain.q0), 0)

    gray = _hillshade_gray(terrain)
    cell_rgb = np.stack([gray, gray, gray], axis=1)
    max_depth = float(np.max(grid.depths)) if grid.depths.size else 0.0
    wet = grid.depths > 0.0
    if max_depth > 0.0 and np.any(wet):
        t = grid.depths[wet] / max_depth
        s = np.array(ramp.start, dtype=np.float64)
        e = np.array(ramp.end, dtype=np.float64)
        cell_rgb[wet] = np.floor(s + np.outer(t, e - s) + 0.5)
    cell_rgb = np.clip(cell_rgb, 0, 255).astype(np.uint8)

    img = np.empty((height_px * width_px, 3), dtype=np.uint8)
    img[:] = np.array(_BACKGROUND_RGB, dtype=np.uint8)
    img[inside] = cell_rgb[idx[inside]]
    stream.write(f"P6\n{width_px} {height_px}\n255\n".encode("ascii"))
    stream.write(img.tobytes())
    return width_px, height_px


def export_depth_csv(grid: WaterGrid, stream: IO[str]) -> None:
    """One row per cell, sorted by (r, q), six decimal places."""
    terrain = grid.terrain
    stream.write(DEPTH_CSV_HEADER + "\n")
    for i in range(terrain.n_cells):
        coord = terrain.coord_at(i)
        stream.write(
            f"{coord.q},{coord.r},{terrain.heights[i]:.6f},{grid.depths[i]:.6f}\n"
        )


def load_depth_csv(source: str | Path | IO[str]) -> list[tuple[AxialCoord, float, float]]:
    """Parse a depth CSV back into (cell, elevation, depth) records."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != DEPTH_CSV_HEADER:
        raise ParseError(
            f"expected header {DEPTH_CSV_HEADER!r}, got {(lines[0] if lines else '')!r}", line=1
        )
    records: list[tuple[AxialCoord, float, float]] = []
    seen: set[AxialCoord] = set()
    for lineno in range(2, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", line=lineno)
        try:
            coord = AxialCoord(int(fields[0]), int(fields[1]))
            elevation = float(fields[2])
            depth = float(fields[3])
        except ValueError as exc:
            raise ParseError(f"bad value: {exc}", line=lineno) from None
        if not (math.isfinite(elevation) and math.isfinite(depth)):
            raise ParseError("elevation and depth must be finite", line=lineno)
        if depth < 0.0:
            raise ParseError(f"depth must be non-negative, got {depth}", line=lineno)
        if coord in seen:
            raise ParseError(f"duplicate cell ({coord.q}, {coord.r})", line=lineno)
        seen.add(coord)
        records.append((coord, elevation, depth))
    return records


def grid_from_depth_records(
    records: list[tuple[AxialCoord, float, float]],
    hex_width_m: float = 4.0,
    origin: GeoPoint = GeoPoint(0.0, 0.0),
) -> WaterGrid:
    """Rebuild a water grid from depth CSV records.

    The records must cover a full parallelogram block, which is what
    export_depth_csv always writes.
    """
    if not records:
        raise ValueError("no cells in depth records")
    metrics = metrics_from_width(hex_width_m)
    qs = [c.q for c, _, _ in records]
    rs = [c.r for c, _, _ in records]
    q0, r0 = min(qs), min(rs)
    nq = max(qs) - q0 + 1
    nr = max(rs) - r0 + 1
    if nq * nr != len(records):
        raise ValueError(
            f"records span a {nq}x{nr} block but only {len(records)} cells are present"
        )
    heights = np.zeros(nq * nr)
    depths = np.zeros(nq * nr)
    for coord, elevation, depth in records:
        i = (coord.r - r0) * nq + (coord.q - q0)
        heights[i] = elevation
        depths[i] = depth
    terrain = HexTerrain(metrics, origin, q0, r0, nq, nr, heights)
    return WaterGrid(terrain, depths=depths)


def report_as_dict(report: FloodReport) -> dict:
    """The six statistics as a flat JSON-ready mapping."""
    return {
        "count": report.count,
        "sum": report.sum,
        "mean": report.mean,
        "sample_std": report.sample_std,
        "min": report.min,
        "max": report.max,
    }
