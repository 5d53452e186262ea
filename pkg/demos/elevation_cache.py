"""Fetching elevation lattices: batching, disk cache, request keys."""

import tempfile
import time
from pathlib import Path

from hexflood import (
    ProviderConfig,
    fetch_elevation_grid,
    lattice_points,
    request_key,
)

# Every request is identified by a digest of its parameters; identical
# requests share one cache entry.
bbox = (35.55, -5.90, 35.80, -5.30)  # south, west, north, east
print("request key:", request_key(bbox, 40, 60))
print("a different shape gets its own key:", request_key(bbox, 41, 60)[:16], "...")
print()

# The lattice covers the bbox corners inclusively, row-major from the
# south-west. These are the exact points sent to the provider.
pts = lattice_points(bbox, 3, 4)
print(f"3x4 lattice, first row: {pts[:4]}")
print()

# The synthetic: URL scheme swaps the HTTP transport for a built-in
# analytic plane, which makes the full fetch path runnable offline.
# For a real service, point base_url at it and set api_key_env to the
# environment variable holding your key.
config = ProviderConfig(
    base_url="synthetic:demo",
    batch_size=500,      # points per request
    max_retries=3,       # transient failures back off and retry
    backoff_ms=250,
)

with tempfile.TemporaryDirectory() as cache_dir:
    t0 = time.perf_counter()
    raster = fetch_elevation_grid(bbox, 40, 60, config, cache_dir)
    cold = time.perf_counter() - t0
    print(f"cold fetch: {raster.rows}x{raster.cols} nodes in {cold * 1000:.1f} ms")

    t0 = time.perf_counter()
    fetch_elevation_grid(bbox, 40, 60, config, cache_dir)
    warm = time.perf_counter() - t0
    print(f"warm fetch: answered from cache in {warm * 1000:.1f} ms")

    entries = list(Path(cache_dir).glob("*.csv"))
    print(f"cache holds {len(entries)} entry: {entries[0].name}")
    print("(the entry is the package's own CSV raster format; it can be")
    print(" loaded directly with load_elevation_raster(..., format='csv'))")
