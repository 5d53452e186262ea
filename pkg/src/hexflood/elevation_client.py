"""Client for point-elevation web services, with a mandatory disk cache.

A provider is any callable taking a list of (lat, lon) pairs and
returning one (lat, lon, elevation) record per point, in request order.
The HTTP adapter built from ProviderConfig is one such callable; tests
and offline runs inject their own. Base URLs starting with
``synthetic:`` select a built-in analytic provider that needs no
network at all.

Every successful fetch is written through to the cache directory as a
CSV raster named by the request key, and later identical requests are
served from disk without touching the provider.
"""

from __future__ import annotations

import hashlib
import io
import logging
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import requests

from .errors import ParseError, ProtocolError, ProviderUnavailableError
from .terrain import MAX_CELLS, ElevationRaster, parse_raster_csv, write_raster_csv

logger = logging.getLogger(__name__)

Provider = Callable[[Sequence[tuple[float, float]]], list[tuple[float, float, float]]]

_SYNTHETIC_SCHEME = "synthetic:"


@dataclass(frozen=True)
class ProviderConfig:
    """How to reach an elevation service. The API key itself is never
    stored; api_key_env names the environment variable that holds it."""

    base_url: str
    api_key_env: str | None = None
    batch_size: int = 256
    max_retries: int = 3
    backoff_ms: int = 250

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.backoff_ms < 0:
            raise ValueError(f"backoff_ms must be >= 0, got {self.backoff_ms}")


def request_key(bbox: tuple[float, float, float, float], rows: int, cols: int) -> str:
    """Stable digest of a fetch request; any differing parameter differs."""
    s, w, n, e = bbox
    canonical = f"{s!r}|{w!r}|{n!r}|{e!r}|{rows}|{cols}"
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()


def cache_path(cache_dir: str | Path, key: str) -> Path:
    return Path(cache_dir) / f"{key}.csv"


def cache_get(cache_dir: str | Path, key: str) -> ElevationRaster | None:
    """Load a cached raster; corrupt entries log a warning and miss."""
    path = cache_path(cache_dir, key)
    if not path.exists():
        return None
    try:
        return parse_raster_csv(path.read_text(encoding="utf-8"))
    except (ParseError, ValueError, OSError) as exc:
        logger.warning("ignoring corrupt cache entry %s: %s", path, exc)
        return None


def cache_put(cache_dir: str | Path, key: str, raster: ElevationRaster) -> Path:
    """Write a raster to the cache atomically (temp file, then rename)."""
    directory = Path(cache_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = cache_path(directory, key)
    buf = io.StringIO()
    write_raster_csv(raster, buf)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(buf.getvalue(), encoding="utf-8")
    os.replace(tmp, path)
    return path


def _synthetic_provider(points: Sequence[tuple[float, float]]) -> list[tuple[float, float, float]]:
    # Deterministic plane in degrees; enough to exercise the full fetch
    # path without a network.
    return [(lat, lon, 10.0 * lat + 5.0 * lon) for lat, lon in points]


def _http_provider(config: ProviderConfig) -> Provider:
    def fetch(points: Sequence[tuple[float, float]]) -> list[tuple[float, float, float]]:
        params = {"locations": "|".join(f"{lat!r},{lon!r}" for lat, lon in points)}
        headers = {}
        if config.api_key_env:
            key = os.environ.get(config.api_key_env)
            if key:
                headers["Authorization"] = f"Bearer {key}"
            else:
                logger.debug("api key environment variable %s is not set", config.api_key_env)
        try:
            resp = requests.get(config.base_url, params=params, headers=headers, timeout=30)
        except requests.RequestException as exc:
            raise ProviderUnavailableError(f"request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailableError(f"provider returned HTTP {resp.status_code}")
        try:
            results = resp.json()["results"]
            return [
                (float(rec["latitude"]), float(rec["longitude"]), float(rec["elevation"]))
                for rec in results
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed provider response: {exc}") from exc

    return fetch


def make_provider(config: ProviderConfig) -> Provider:
    if config.base_url.startswith(_SYNTHETIC_SCHEME):
        return _synthetic_provider
    return _http_provider(config)


def lattice_points(
    bbox: tuple[float, float, float, float], rows: int, cols: int
) -> list[tuple[float, float]]:
    """Row-major (lat, lon) lattice spanning the bbox, corners included."""
    south, west, north, east = bbox
    points = []
    for i in range(rows):
        lat = south if rows == 1 else south + i * (north - south) / (rows - 1)
        for j in range(cols):
            lon = west if cols == 1 else west + j * (east - west) / (cols - 1)
            points.append((lat, lon))
    return points


def fetch_elevation_grid(
    bbox: tuple[float, float, float, float],
    rows: int,
    cols: int,
    config: ProviderConfig,
    cache_dir: str | Path,
    provider: Provider | None = None,
) -> ElevationRaster:
    """Fetch (or load from cache) the elevation lattice over a bbox.

    The cache is consulted first and written through on success, so two
    identical requests hit the provider once. Transport failures retry
    with exponential backoff; a response with the wrong shape fails
    immediately, never producing a partial raster.
    """
    south, west, north, east = bbox
    if not (north > south and east > west):
        raise ValueError(f"invalid bbox (need north > south, east > west): {bbox!r}")
    if not all(math.isfinite(v) for v in bbox):
        raise ValueError(f"bbox must be finite: {bbox!r}")
    if rows < 1 or cols < 1:
        raise ValueError(f"rows and cols must be >= 1, got {rows}x{cols}")
    if rows * cols > MAX_CELLS:
        raise ValueError(f"lattice of {rows}x{cols} points exceeds the cell limit")

    key = request_key(bbox, rows, cols)
    cached = cache_get(cache_dir, key)
    if cached is not None:
        if cached.rows == rows and cached.cols == cols:
            logger.debug("cache hit for %s", key)
            return cached
        logger.warning("cache entry %s has wrong shape, refetching", key)

    if provider is None:
        provider = make_provider(config)
    points = lattice_points(bbox, rows, cols)
    elevations: list[float] = []
    for start in range(0, len(points), config.batch_size):
        batch = points[start:start + config.batch_size]
        records = _fetch_batch(provider, batch, config)
        if len(records) != len(batch):
            raise ProtocolError(
                f"provider returned {len(records)} records for a batch of {len(batch)}"
            )
        for _, _, elevation in records:
            if not math.isfinite(elevation):
                raise ProtocolError(f"provider returned a non-finite elevation: {elevation!r}")
            elevations.append(float(elevation))

    heights = np.array(elevations, dtype=np.float64).reshape(rows, cols)
    raster = ElevationRaster(bbox=bbox, rows=rows, cols=cols, heights=heights)
    cache_put(cache_dir, key, raster)
    return raster


def _fetch_batch(
    provider: Provider, batch: Sequence[tuple[float, float]], config: ProviderConfig
) -> list[tuple[float, float, float]]:
    last_error: Exception | None = None
    for attempt in range(config.max_retries + 1):
        if attempt > 0:
            delay = config.backoff_ms * (2 ** (attempt - 1)) / 1000.0
            logger.warning(
                "retrying batch after failure (attempt %d/%d, sleeping %.3fs): %s",
                attempt + 1, config.max_retries + 1, delay, last_error,
            )
            time.sleep(delay)
        try:
            return provider(batch)
        except ProtocolError:
            raise
        except ProviderUnavailableError as exc:
            last_error = exc
    raise ProviderUnavailableError(
        f"provider failed after {config.max_retries + 1} attempts: {last_error}"
    )
