"""Pointy-top hexagonal grid geometry.

Conventions used throughout the package:

* Axial coordinates (q, r) with the q axis pointing east and the r axis
  pointing south-east to north-east in world terms (increasing r moves
  the center up and to the right).
* Cube coordinates (x, y, z) satisfy x + y + z = 0 with x = q, z = r.
* World coordinates are meters in a local plane, x east, y north.
* A cell's width is the flat-to-flat diameter sqrt(3) * size; size is
  the edge length, also the center-to-corner radius.

Neighbor order is fixed so that every traversal in the package is
reproducible: (+1,0), (+1,-1), (0,-1), (-1,0), (-1,+1), (0,+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SQRT3 = math.sqrt(3.0)

NEIGHBOR_OFFSETS: tuple[tuple[int, int], ...] = (
    (1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1),
)


class AxialCoord(NamedTuple):
    q: int
    r: int


class FractionalAxial(NamedTuple):
    q: float
    r: float


class CubeCoord(NamedTuple):
    x: int
    y: int
    z: int


class WorldPoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class HexMetrics:
    """Derived measurements of one grid cell, all in meters."""

    size: float        # edge length == center-to-corner radius
    width: float       # flat-to-flat diameter, sqrt(3) * size
    area: float        # (3*sqrt(3)/2) * size**2


def metrics_from_width(width_m: float) -> HexMetrics:
    """Build cell metrics from the flat-to-flat width in meters."""
    if not math.isfinite(width_m) or width_m <= 0.0:
        raise ValueError(f"cell width must be positive and finite, got {width_m!r}")
    size = width_m / SQRT3
    area = 1.5 * SQRT3 * size * size
    return HexMetrics(size=size, width=width_m, area=area)


def axial_to_cube(coord: AxialCoord) -> CubeCoord:
    return CubeCoord(coord.q, -coord.q - coord.r, coord.r)


def cube_to_axial(cube: CubeCoord) -> AxialCoord:
    return AxialCoord(cube.x, cube.z)


def axial_to_world(coord: AxialCoord | FractionalAxial, metrics: HexMetrics) -> WorldPoint:
    """Center of a cell (or position of a fractional coordinate) in meters."""
    x = metrics.size * (SQRT3 * coord.q + SQRT3 / 2.0 * coord.r)
    y = metrics.size * 1.5 * coord.r
    return WorldPoint(x, y)


def _round_half_up(v: float) -> float:
    # floor(v + 0.5) so that halfway cases resolve identically everywhere;
    # banker's rounding would depend on parity and round() on the libm in use.
    return math.floor(v + 0.5)


def cube_round(x: float, y: float, z: float) -> CubeCoord:
    """Round fractional cube coordinates to the containing cell.

    Rounds each component half-up, then resets the component with the
    largest rounding delta so the invariant x + y + z = 0 holds again.
    Ties on the delta resolve by component priority x over y over z.
    """
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
        raise ValueError("cube components must be finite")
    if abs(x + y + z) > 1e-9:
        raise ValueError(f"cube components must sum to zero, got {x + y + z!r}")
    rx = _round_half_up(x)
    ry = _round_half_up(y)
    rz = _round_half_up(z)
    dx = abs(rx - x)
    dy = abs(ry - y)
    dz = abs(rz - z)
    if dx >= dy and dx >= dz:
        rx = -ry - rz
    elif dy >= dz:
        ry = -rx - rz
    else:
        rz = -rx - ry
    return CubeCoord(int(rx), int(ry), int(rz))


def axial_round(coord: FractionalAxial) -> AxialCoord:
    """Nearest cell to a fractional axial coordinate."""
    fx = float(coord.q)
    fz = float(coord.r)
    return cube_to_axial(cube_round(fx, -fx - fz, fz))


def world_to_axial(point: WorldPoint, metrics: HexMetrics) -> AxialCoord:
    """The cell containing a world-plane point, via the exact inverse transform."""
    q = (SQRT3 / 3.0 * point.x - point.y / 3.0) / metrics.size
    r = (2.0 / 3.0 * point.y) / metrics.size
    return axial_round(FractionalAxial(q, r))


def neighbors(coord: AxialCoord) -> tuple[AxialCoord, ...]:
    """The six adjacent cells, always in the fixed package-wide order."""
    q, r = coord
    return tuple(AxialCoord(q + dq, r + dr) for dq, dr in NEIGHBOR_OFFSETS)


def hex_distance(a: AxialCoord, b: AxialCoord) -> int:
    """Minimum number of cell-to-cell steps between two cells."""
    dx = a.q - b.q
    dz = a.r - b.r
    dy = -dx - dz
    return (abs(dx) + abs(dy) + abs(dz)) // 2


def axial_to_world_arrays(
    q: np.ndarray, r: np.ndarray, metrics: HexMetrics
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized axial_to_world over parallel coordinate arrays."""
    qf = np.asarray(q, dtype=np.float64)
    rf = np.asarray(r, dtype=np.float64)
    x = metrics.size * (SQRT3 * qf + SQRT3 / 2.0 * rf)
    y = metrics.size * 1.5 * rf
    return x, y


def world_to_axial_arrays(
    x: np.ndarray, y: np.ndarray, metrics: HexMetrics
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized world_to_axial. Matches the scalar path bit for bit."""
    xf = np.asarray(x, dtype=np.float64)
    yf = np.asarray(y, dtype=np.float64)
    fq = (SQRT3 / 3.0 * xf - yf / 3.0) / metrics.size
    fr = (2.0 / 3.0 * yf) / metrics.size
    fx = fq
    fz = fr
    fy = -fx - fz
    rx = np.floor(fx + 0.5)
    ry = np.floor(fy + 0.5)
    rz = np.floor(fz + 0.5)
    dx = np.abs(rx - fx)
    dy = np.abs(ry - fy)
    dz = np.abs(rz - fz)
    fix_x = (dx >= dy) & (dx >= dz)
    fix_z = ~fix_x & ~(dy >= dz)
    # Resetting y touches neither axial component, so only x and z fixes show up.
    out_q = np.where(fix_x, -ry - rz, rx)
    out_r = np.where(fix_z, -rx - ry, rz)
    return out_q.astype(np.int64), out_r.astype(np.int64)
