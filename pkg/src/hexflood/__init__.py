"""Rainfall runoff and ponding simulation on a hexagonal grid.

Terrain comes in as an elevation raster (downloaded, loaded from disk,
or synthesized), gets sampled onto a hexagonal cell block, and rainfall
scenarios are stepped forward with a local water-leveling rule until the
field settles. Results come out as statistics, flood zones, depth CSVs
and rendered maps.
"""

from .analysis import (
    DEFAULT_RAMP,
    ColorRamp,
    FloodReport,
    FloodZone,
    export_depth_csv,
    flood_zones,
    grid_from_depth_records,
    load_depth_csv,
    render_depth_map,
    summarize,
    zones_from_depths,
)
from .elevation_client import (
    ProviderConfig,
    cache_get,
    cache_put,
    fetch_elevation_grid,
    lattice_points,
    request_key,
)
from .errors import (
    DataGapError,
    OutOfBoundsError,
    ParseError,
    ProtocolError,
    ProviderError,
    ProviderUnavailableError,
    ResourceLimitError,
)
from .hexgrid import (
    AxialCoord,
    CubeCoord,
    FractionalAxial,
    HexMetrics,
    WorldPoint,
    axial_round,
    axial_to_world,
    cube_round,
    hex_distance,
    metrics_from_width,
    neighbors,
    world_to_axial,
)
from .hydro import (
    BOUNDARY_CLOSED,
    BOUNDARY_OPEN,
    DEFAULT_RAIN_RATE_M_PER_H,
    Rng,
    ScenarioResult,
    SimulationParams,
    Snapshot,
    WaterGrid,
    apply_rain,
    distribute_partition,
    fill_level,
    next_random,
    run_scenario,
    shuffle,
    step,
)
from .terrain import (
    EARTH_RADIUS_M,
    ElevationRaster,
    GeoPoint,
    HexTerrain,
    geodesic_distance,
    load_elevation_raster,
    normalize_extent,
    sample_to_hex,
    synthetic_terrain,
)

__version__ = "0.1.0"
