"""Rainfall and water redistribution on a hex terrain.

The redistribution rule treats each cell together with its neighbors as
one partition and levels the water inside it: the pooled water W settles
so the k lowest cells share a common surface H with

    k = the largest count for which W >= sum(h_k - h_i, i = 1..k)
    H = (W + sum(h_i, i = 1..k)) / k

over heights sorted ascending, and every cell ends up with depth
max(0, H - h). A full step visits every cell once in a fresh random
order and levels its partition in place, so later partitions see the
effects of earlier ones.

Randomness comes from a SplitMix64 stream and a Fisher-Yates shuffle
whose bounded draws use mask-and-reject on the low bits (no modulo), so
permutations are bit-identical on every platform. The hot path is
compiled with numba when available; a plain Python twin with the same
arithmetic order backs it up and is cross-checked in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ResourceLimitError
from .terrain import HexTerrain

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


# Module switch so tests can force the interpreted path.
USE_KERNEL = HAVE_NUMBA

BOUNDARY_CLOSED = "closed"
BOUNDARY_OPEN = "open-outflow"
BOUNDARIES = (BOUNDARY_CLOSED, BOUNDARY_OPEN)

# 80 mm of rain over three days, the reference storm for this model.
DEFAULT_RAIN_RATE_M_PER_H = 0.08 / 72.0

# Refuse runs whose cell-step product would grind forever.
MAX_CELL_STEPS = 50_000_000_000

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U_GAMMA = np.uint64(_GAMMA)
_U_MIX1 = np.uint64(_MIX1)
_U_MIX2 = np.uint64(_MIX2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)


class Rng:
    """Deterministic 64-bit generator on the SplitMix64 recurrence."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64


def next_random(rng: Rng) -> int:
    """Next 64-bit value; identical stream for identical seeds everywhere."""
    rng.state = (rng.state + _GAMMA) & MASK64
    z = rng.state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def _rand_below(rng: Rng, bound: int) -> int:
    # Smallest all-ones mask reaching bound, then draw-and-reject on the
    # low bits. No modulo, so there is no bias and nothing
    # platform-dependent in the arithmetic.
    m = 1
    while m < bound:
        m <<= 1
    mask = m - 1
    while True:
        v = next_random(rng) & mask
        if v < bound:
            return v


def shuffle(rng: Rng, n: int) -> np.ndarray:
    """Fisher-Yates permutation of range(n) drawn from the stream."""
    if n < 0:
        raise ValueError(f"cannot shuffle a negative count: {n}")
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = _rand_below(rng, i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def _level_from_sorted(hs: Sequence[float], w: float) -> float:
    # hs ascending. The deficit k*h_k - prefix_k never decreases with k,
    # so the first violation ends the scan.
    cum = hs[0]
    k = 1
    cum_k = cum
    for a in range(1, len(hs)):
        cum += hs[a]
        deficit = (a + 1) * hs[a] - cum
        if w >= deficit:
            k = a + 1
            cum_k = cum
        else:
            break
    return (w + cum_k) / k


def _validate_partition(heights: Sequence[float], depths: Sequence[float]) -> None:
    n = len(heights)
    if n < 1 or n > 7:
        raise ValueError(f"a partition is a center cell plus at most six neighbors, got {n} cells")
    if len(depths) != n:
        raise ValueError(f"got {n} heights but {len(depths)} depths")
    for h in heights:
        if not math.isfinite(h):
            raise ValueError(f"heights must be finite, got {h!r}")
    for d in depths:
        if not (math.isfinite(d) and d >= 0.0):
            raise ValueError(f"depths must be finite and non-negative, got {d!r}")


def fill_level(heights: Sequence[float], depths: Sequence[float]) -> float:
    """The common surface elevation H the partition's water settles to."""
    _validate_partition(heights, depths)
    # fsum's exactly rounded total makes the level a pure function of the
    # value multisets, independent of cell listing order
    w = math.fsum(depths)
    return _level_from_sorted(sorted(heights), w)


def distribute_partition(heights: Sequence[float], depths: Sequence[float]) -> list[float]:
    """Level the water in one partition; returns depths in input order.

    Water volume is conserved and the result depends only on the cell
    values, not on their order.
    """
    level = fill_level(heights, depths)
    out = []
    for h in heights:
        d = level - h
        out.append(d if d > 0.0 else 0.0)
    return out


@njit(cache=True)
def _kernel_next(state):
    state = state + _U_GAMMA
    z = state
    z = (z ^ (z >> _U30)) * _U_MIX1
    z = (z ^ (z >> _U27)) * _U_MIX2
    z = z ^ (z >> _U31)
    return state, z


@njit(cache=True)
def _step_kernel(heights, depths, nbr, state, open_boundary):
    n = heights.shape[0]
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        bound = i + 1
        m = 1
        while m < bound:
            m <<= 1
        mask = np.uint64(m - 1)
        j = 0
        while True:
            state, z = _kernel_next(state)
            j = int(z & mask)
            if j < bound:
                break
        t = perm[i]
        perm[i] = perm[j]
        perm[j] = t

    hbuf = np.empty(7, dtype=np.float64)
    members = np.empty(7, dtype=np.int64)
    outflow = 0.0
    for t_i in range(n):
        c = perm[t_i]
        hc = heights[c]
        hbuf[0] = hc
        members[0] = c
        m_real = 1
        w = depths[c]
        for e in range(6):
            nb = nbr[c, e]
            if nb >= 0:
                hbuf[m_real] = heights[nb]
                members[m_real] = nb
                w += depths[nb]
                m_real += 1
        m_total = m_real
        if open_boundary:
            while m_total < 7:
                hbuf[m_total] = hc
                m_total += 1
        for a in range(1, m_total):
            key = hbuf[a]
            b = a - 1
            while b >= 0 and hbuf[b] > key:
                hbuf[b + 1] = hbuf[b]
                b -= 1
            hbuf[b + 1] = key
        cum = hbuf[0]
        k = 1
        cum_k = cum
        for a in range(1, m_total):
            cum += hbuf[a]
            deficit = (a + 1) * hbuf[a] - cum
            if w >= deficit:
                k = a + 1
                cum_k = cum
            else:
                break
        level = (w + cum_k) / k
        for a in range(m_real):
            mb = members[a]
            d_new = level - heights[mb]
            if d_new < 0.0:
                d_new = 0.0
            depths[mb] = d_new
        if open_boundary and m_total > m_real:
            spill = level - hc
            if spill > 0.0:
                outflow += (m_total - m_real) * spill
    return state, outflow


def _step_python(heights, depths, nbr, rng, open_boundary):
    # Interpreted twin of _step_kernel. Gather, sort, scan and write in
    # the same order so both paths agree bit for bit.
    perm = shuffle(rng, heights.shape[0]).tolist()
    h = heights.tolist()
    d = depths.tolist()
    nb_rows = nbr.tolist()
    outflow = 0.0
    for c in perm:
        hc = h[c]
        hbuf = [hc]
        members = [c]
        w = d[c]
        for nb in nb_rows[c]:
            if nb >= 0:
                hbuf.append(h[nb])
                members.append(nb)
                w += d[nb]
        m_real = len(members)
        if open_boundary:
            while len(hbuf) < 7:
                hbuf.append(hc)
        hbuf.sort()
        level = _level_from_sorted(hbuf, w)
        for mb in members:
            d_new = level - h[mb]
            d[mb] = d_new if d_new > 0.0 else 0.0
        if open_boundary and len(hbuf) > m_real:
            spill = level - hc
            if spill > 0.0:
                outflow += (len(hbuf) - m_real) * spill
    depths[:] = d
    return outflow


class WaterGrid:
    """Mutable water state over a fixed terrain."""

    def __init__(
        self,
        terrain: HexTerrain,
        boundary: str = BOUNDARY_CLOSED,
        depths: np.ndarray | None = None,
    ):
        if boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
        if depths is None:
            depths = np.zeros(terrain.n_cells, dtype=np.float64)
        else:
            depths = np.array(depths, dtype=np.float64).reshape(-1)
            if depths.size != terrain.n_cells:
                raise ValueError(f"expected {terrain.n_cells} depths, got {depths.size}")
            if not np.all(np.isfinite(depths)) or np.any(depths < 0.0):
                raise ValueError("depths must be finite and non-negative")
        self.terrain = terrain
        self.depths = depths
        self.boundary = boundary
        self.outflow_total = 0.0
        self.rain_total = 0.0

    def copy(self) -> "WaterGrid":
        dup = WaterGrid(self.terrain, self.boundary, self.depths)
        dup.outflow_total = self.outflow_total
        dup.rain_total = self.rain_total
        return dup

    def total_depth(self) -> float:
        return float(np.sum(self.depths))

    def surface(self) -> np.ndarray:
        """Water surface elevation h + d per cell."""
        return self.terrain.heights + self.depths

    def depth_at(self, coord) -> float:
        return float(self.depths[self.terrain.index_of(coord)])


def apply_rain(grid: WaterGrid, rate_m_per_h: float, dt_s: float) -> None:
    """Add uniform rainfall of rate_m_per_h for dt_s seconds to every cell."""
    if not (math.isfinite(rate_m_per_h) and rate_m_per_h >= 0.0):
        raise ValueError(f"rain rate must be finite and non-negative, got {rate_m_per_h!r}")
    if not (math.isfinite(dt_s) and dt_s > 0.0):
        raise ValueError(f"time step must be positive, got {dt_s!r}")
    added = rate_m_per_h * dt_s / 3600.0
    grid.depths += added
    grid.rain_total += added * grid.terrain.n_cells


def step(grid: WaterGrid, rng: Rng) -> None:
    """One full pass: level every cell's partition once, in random order.

    The visit order is a fresh Fisher-Yates permutation drawn from rng,
    and partitions are processed sequentially, each seeing the writes of
    the ones before it. Under the open-outflow boundary, missing
    neighbors of edge cells are modeled as exterior cells at the center
    cell's elevation holding no water; whatever the leveling assigns to
    them leaves the grid and accumulates in outflow_total.
    """
    nbr = grid.terrain.neighbor_table()
    open_b = grid.boundary == BOUNDARY_OPEN
    if USE_KERNEL:
        state, outflow = _step_kernel(
            grid.terrain.heights, grid.depths, nbr, np.uint64(rng.state), open_b
        )
        rng.state = int(state)
    else:
        outflow = _step_python(grid.terrain.heights, grid.depths, nbr, rng, open_b)
    grid.outflow_total += float(outflow)


@dataclass
class SimulationParams:
    """Scenario knobs. rain_rate is meters of depth per hour."""

    rain_rate: float
    rain_duration: float          # hours
    equilibrate_duration: float   # hours
    step_seconds: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.rain_rate) and self.rain_rate >= 0.0):
            raise ValueError(f"rain_rate must be finite and non-negative, got {self.rain_rate!r}")
        for name in ("rain_duration", "equilibrate_duration"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and non-negative, got {v!r}")
        if not (math.isfinite(self.step_seconds) and self.step_seconds > 0.0):
            raise ValueError(f"step_seconds must be positive, got {self.step_seconds!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass
class Snapshot:
    step: int
    phase: str                 # "rain" | "equilibrate"
    tags: tuple[str, ...]      # may include "after_rain" and "final"
    grid: WaterGrid


@dataclass
class ScenarioResult:
    snapshots: list[Snapshot]
    final: WaterGrid


def _phase_steps(duration_h: float, step_seconds: float) -> int:
    # Partial trailing steps round up to whole ones.
    return int(math.ceil(duration_h * 3600.0 / step_seconds - 1e-9))


def run_scenario(
    terrain: HexTerrain,
    params: SimulationParams,
    boundary: str = BOUNDARY_CLOSED,
    snapshot_every: int = 0,
) -> ScenarioResult:
    """Rain phase then equilibration phase, with periodic snapshots.

    During rain, each step applies rainfall first and then one leveling
    pass. Snapshots are taken every snapshot_every steps (0 disables),
    plus one tagged "after_rain" at the phase boundary and one tagged
    "final" at the end.
    """
    if snapshot_every < 0:
        raise ValueError(f"snapshot_every must be >= 0, got {snapshot_every}")
    n_rain = _phase_steps(params.rain_duration, params.step_seconds)
    n_eq = _phase_steps(params.equilibrate_duration, params.step_seconds)
    total = n_rain + n_eq
    if terrain.n_cells * max(total, 1) > MAX_CELL_STEPS:
        raise ResourceLimitError(
            f"run of {total} steps over {terrain.n_cells} cells exceeds the work limit"
        )
    grid = WaterGrid(terrain, boundary)
    rng = Rng(params.seed)
    snapshots: list[Snapshot] = []

    def emit(step_idx: int, phase: str, tag: str | None) -> None:
        if snapshots and snapshots[-1].step == step_idx:
            last = snapshots[-1]
            if tag is not None and tag not in last.tags:
                snapshots[-1] = Snapshot(last.step, last.phase, last.tags + (tag,), last.grid)
            return
        tags = (tag,) if tag is not None else ()
        snapshots.append(Snapshot(step_idx, phase, tags, grid.copy()))

    step_idx = 0
    for phase, count in (("rain", n_rain), ("equilibrate", n_eq)):
        for _ in range(count):
            if phase == "rain":
                apply_rain(grid, params.rain_rate, params.step_seconds)
            step(grid, rng)
            step_idx += 1
            if snapshot_every > 0 and step_idx % snapshot_every == 0:
                emit(step_idx, phase, None)
        if phase == "rain":
            emit(step_idx, phase, "after_rain")
    emit(step_idx, "equilibrate" if n_eq else "rain", "final")
    return ScenarioResult(snapshots=snapshots, final=grid)
