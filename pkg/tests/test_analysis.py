"""Analysis tests: statistics, flood zones, rendering, depth CSV."""

import io
import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexflood.analysis import (
    DEFAULT_RAMP,
    DEPTH_CSV_HEADER,
    ColorRamp,
    export_depth_csv,
    flood_zones,
    grid_from_depth_records,
    load_depth_csv,
    render_depth_map,
    report_as_dict,
    summarize,
    zones_from_depths,
)
from hexflood.errors import ParseError
from hexflood.hexgrid import AxialCoord, metrics_from_width
from hexflood.hydro import WaterGrid
from hexflood.terrain import synthetic_terrain

from oracles import union_find_components

M4 = metrics_from_width(4.0)


class TestSummarize:
    def test_empty_field(self):
        report = summarize([])
        assert report.count == 0
        assert report.sum == report.mean == report.sample_std == 0.0
        assert report.min == report.max == 0.0

    def test_two_values(self):
        report = summarize([1.0, 3.0])
        assert report.count == 2
        assert report.sum == 4.0
        assert report.mean == 2.0
        assert abs(report.sample_std - math.sqrt(2.0)) < 1e-15
        assert report.min == 1.0 and report.max == 3.0

    def test_published_statistics_are_self_consistent(self):
        # a survey of 21033 cells totalling 597.884 m of water must report
        # the quotient as its mean
        depths = np.full(21033, 597.884 / 21033)
        report = summarize(depths)
        assert report.count == 21033
        assert abs(report.sum - 597.884) < 1e-6
        assert abs(report.mean - 0.028426) < 5e-7

    def test_single_value(self):
        report = summarize([0.7])
        assert report.sample_std == 0.0
        assert report.min == report.max == report.mean == 0.7

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            summarize([0.1, math.nan])
        with pytest.raises(ValueError):
            summarize([math.inf])

    def test_matches_stdlib_statistics(self):
        rng = np.random.default_rng(21)
        values = rng.uniform(0, 5, size=200)
        report = summarize(values)
        assert abs(report.mean - statistics.fmean(values)) < 1e-12
        assert abs(report.sample_std - statistics.stdev(values)) < 1e-12

    @given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=1, max_size=50))
    @settings(max_examples=200)
    def test_identities(self, values):
        report = summarize(values)
        assert report.count == len(values)
        assert abs(report.mean * report.count - report.sum) <= 1e-9 * max(1.0, abs(report.sum))
        # the quotient can land an ulp outside the hull of equal values
        tol = 1e-12 * max(1.0, abs(report.max))
        assert report.min - tol <= report.mean <= report.max + tol
        assert report.sample_std >= 0.0

    def test_report_dict_has_exactly_six_fields(self):
        d = report_as_dict(summarize([1.0, 2.0]))
        assert set(d) == {"count", "sum", "mean", "sample_std", "min", "max"}
        assert d["count"] == 2


def _depth_map(entries):
    return {AxialCoord(q, r): d for (q, r), d in entries.items()}


class TestZones:
    AREA = M4.area

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValueError):
            zones_from_depths({}, 0.0, self.AREA)
        with pytest.raises(ValueError):
            zones_from_depths({}, -0.5, self.AREA)
        with pytest.raises(ValueError):
            zones_from_depths({}, math.nan, self.AREA)

    def test_nothing_qualifies(self):
        depths = _depth_map({(0, 0): 0.1, (1, 0): 0.2})
        assert zones_from_depths(depths, 0.5, self.AREA) == []

    def test_single_cell_zone(self):
        depths = _depth_map({(0, 0): 0.1, (1, 0): 0.9})
        zones = zones_from_depths(depths, 0.5, self.AREA)
        assert len(zones) == 1
        z = zones[0]
        assert z.cells == [AxialCoord(1, 0)]
        assert z.max_depth == 0.9
        assert abs(z.area_m2 - self.AREA) < 1e-12

    def test_adjacent_cells_merge(self):
        depths = _depth_map({(0, 0): 1.0, (1, 0): 1.0})
        assert len(zones_from_depths(depths, 0.5, self.AREA)) == 1

    def test_separated_cells_split(self):
        depths = _depth_map({(0, 0): 1.0, (3, 0): 1.0})
        zones = zones_from_depths(depths, 0.5, self.AREA)
        assert len(zones) == 2

    def test_labels_by_position_order_by_depth(self):
        # the deeper zone sits later in (r, q) order, so it gets label 2
        # but sorts first in the output
        depths = _depth_map({(0, 0): 1.0, (5, 5): 2.0})
        zones = zones_from_depths(depths, 0.5, self.AREA)
        assert [z.label for z in zones] == [2, 1]
        assert zones[0].max_depth == 2.0

    def test_cells_sorted_within_zone(self):
        depths = _depth_map({(1, 0): 1.0, (0, 0): 1.0, (0, 1): 1.0})
        zones = zones_from_depths(depths, 0.5, self.AREA)
        assert len(zones) == 1
        assert zones[0].cells == sorted(zones[0].cells, key=lambda c: (c.r, c.q))

    def test_matches_union_find(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            depths = {}
            for q in range(-4, 5):
                for r in range(-4, 5):
                    depths[AxialCoord(q, r)] = float(rng.uniform(0, 1))
            threshold = 0.6
            zones = zones_from_depths(depths, threshold, self.AREA)
            qualifying = {c for c, d in depths.items() if d >= threshold}
            expected = union_find_components(qualifying)
            assert {frozenset(z.cells) for z in zones} == set(expected)

    def test_higher_threshold_refines_zones(self):
        rng = np.random.default_rng(8)
        depths = {}
        for q in range(-6, 7):
            for r in range(-6, 7):
                depths[AxialCoord(q, r)] = float(rng.uniform(0, 1))
        lo = zones_from_depths(depths, 0.3, self.AREA)
        hi = zones_from_depths(depths, 0.7, self.AREA)
        lo_sets = [set(z.cells) for z in lo]
        # every tightened zone lies inside exactly one looser zone
        for z in hi:
            containers = [s for s in lo_sets if set(z.cells) <= s]
            assert len(containers) == 1
        n_lo = sum(len(z.cells) for z in lo)
        n_hi = sum(len(z.cells) for z in hi)
        assert n_hi <= n_lo

    def test_zone_count_monotone_on_a_basin(self):
        # a single bowl drains to one pool; raising the threshold can only
        # shrink it away, never split it
        terrain = synthetic_terrain("bowl", (15, 15), M4, params={"k": 0.001})
        level = 0.15
        depths = np.maximum(0.0, level - terrain.heights)
        grid = WaterGrid(terrain, depths=depths)
        counts = [len(flood_zones(grid, t)) for t in (0.01, 0.05, 0.1, 0.14, 0.2)]
        assert counts == sorted(counts, reverse=True)
        assert counts[0] == 1

    def test_flood_zones_uses_cell_area(self):
        terrain = synthetic_terrain("plane", (2, 2), M4)
        grid = WaterGrid(terrain, depths=np.array([1.0, 1.0, 0.0, 0.0]))
        zones = flood_zones(grid, 0.5)
        assert len(zones) == 1
        assert abs(zones[0].area_m2 - 2 * M4.area) < 1e-9


class TestRender:
    def _uniform_grid(self, depth):
        terrain = synthetic_terrain("plane", (4, 4), M4)
        return WaterGrid(terrain, depths=np.full(16, depth))

    def test_ppm_header_and_size(self):
        grid = self._uniform_grid(0.5)
        buf = io.BytesIO()
        w, h = render_depth_map(grid, buf)
        data = buf.getvalue()
        header = f"P6\n{w} {h}\n255\n".encode()
        assert data.startswith(header)
        assert len(data) == len(header) + w * h * 3

    def test_uniform_wet_cells_take_ramp_end(self):
        grid = self._uniform_grid(0.5)
        buf = io.BytesIO()
        w, h = render_depth_map(grid, buf)
        body = buf.getvalue().split(b"\n", 3)[3]
        center = (h // 2) * w + (w // 2)
        pixel = tuple(body[center * 3:center * 3 + 3])
        assert pixel == DEFAULT_RAMP.end

    def test_dry_plane_is_flat_gray(self):
        grid = self._uniform_grid(0.0)
        buf = io.BytesIO()
        w, h = render_depth_map(grid, buf)
        body = buf.getvalue().split(b"\n", 3)[3]
        center = (h // 2) * w + (w // 2)
        pixel = tuple(body[center * 3:center * 3 + 3])
        # flat ground under the fixed light: shade = sqrt(2)/2
        expected = int(math.floor(70.0 + 150.0 * math.sqrt(2.0) / 2.0 + 0.5))
        assert pixel == (expected, expected, expected)

    def test_corner_is_background(self):
        terrain = synthetic_terrain("plane", (1, 1), M4)
        grid = WaterGrid(terrain)
        buf = io.BytesIO()
        w, h = render_depth_map(grid, buf, pixels_per_meter=8.0)
        body = buf.getvalue().split(b"\n", 3)[3]
        assert tuple(body[0:3]) == (40, 44, 52)

    def test_deterministic_bytes(self):
        terrain = synthetic_terrain("bowl", (6, 6), M4, params={"k": 0.01})
        depths = np.maximum(0.0, 0.1 - terrain.heights)
        a, b = io.BytesIO(), io.BytesIO()
        render_depth_map(WaterGrid(terrain, depths=depths), a)
        render_depth_map(WaterGrid(terrain, depths=depths), b)
        assert a.getvalue() == b.getvalue()

    def test_scale_changes_resolution(self):
        grid = self._uniform_grid(0.1)
        buf1, buf4 = io.BytesIO(), io.BytesIO()
        w1, h1 = render_depth_map(grid, buf1, pixels_per_meter=1.0)
        w4, h4 = render_depth_map(grid, buf4, pixels_per_meter=4.0)
        assert w4 in (4 * w1 - 3, 4 * w1 - 2, 4 * w1 - 1, 4 * w1)
        assert h4 > h1

    def test_rejects_bad_scale(self):
        grid = self._uniform_grid(0.1)
        with pytest.raises(ValueError):
            render_depth_map(grid, io.BytesIO(), pixels_per_meter=0.0)

    def test_custom_ramp(self):
        grid = self._uniform_grid(2.0)
        ramp = ColorRamp(start=(255, 0, 0), end=(0, 255, 0))
        buf = io.BytesIO()
        w, h = render_depth_map(grid, buf, ramp=ramp)
        body = buf.getvalue().split(b"\n", 3)[3]
        center = (h // 2) * w + (w // 2)
        assert tuple(body[center * 3:center * 3 + 3]) == (0, 255, 0)


class TestDepthCsv:
    def test_header_and_frozen_row(self):
        terrain = synthetic_terrain("plane", (1, 1), M4, params={"c": 1.5})
        grid = WaterGrid(terrain, depths=np.array([0.25]))
        buf = io.StringIO()
        export_depth_csv(grid, buf)
        assert buf.getvalue() == "q,r,elevation_m,depth_m\n0,0,1.500000,0.250000\n"

    def test_rows_ordered_r_major(self):
        terrain = synthetic_terrain("plane", (2, 2), M4)
        grid = WaterGrid(terrain)
        buf = io.StringIO()
        export_depth_csv(grid, buf)
        coords = [tuple(map(int, line.split(",")[:2]))
                  for line in buf.getvalue().splitlines()[1:]]
        assert coords == [(-1, -1), (0, -1), (-1, 0), (0, 0)]

    def test_round_trip(self):
        terrain = synthetic_terrain("bowl", (5, 4), M4, params={"k": 0.02, "c": 3.0})
        rng = np.random.default_rng(17)
        grid = WaterGrid(terrain, depths=rng.uniform(0, 2, size=20))
        buf = io.StringIO()
        export_depth_csv(grid, buf)
        records = load_depth_csv(io.StringIO(buf.getvalue()))
        assert len(records) == 20
        rebuilt = grid_from_depth_records(records, hex_width_m=4.0)
        assert rebuilt.terrain.extent == (5, 4)
        assert rebuilt.terrain.q0 == terrain.q0 and rebuilt.terrain.r0 == terrain.r0
        # six decimal places in the file
        assert np.max(np.abs(rebuilt.depths - grid.depths)) <= 5e-7
        assert np.max(np.abs(rebuilt.terrain.heights - terrain.heights)) <= 5e-7

    def test_wrong_header(self):
        with pytest.raises(ParseError, match="line 1"):
            load_depth_csv(io.StringIO("q,r,depth\n"))

    def test_field_count(self):
        with pytest.raises(ParseError, match="line 2"):
            load_depth_csv(io.StringIO(DEPTH_CSV_HEADER + "\n1,2,3\n"))

    def test_bad_value(self):
        with pytest.raises(ParseError, match="line 3"):
            load_depth_csv(io.StringIO(DEPTH_CSV_HEADER + "\n0,0,1,1\n0,x,1,1\n"))

    def test_negative_depth(self):
        with pytest.raises(ParseError, match="non-negative"):
            load_depth_csv(io.StringIO(DEPTH_CSV_HEADER + "\n0,0,1,-0.5\n"))

    def test_non_finite(self):
        with pytest.raises(ParseError, match="finite"):
            load_depth_csv(io.StringIO(DEPTH_CSV_HEADER + "\n0,0,inf,0.5\n"))

    def test_duplicate_cell(self):
        text = DEPTH_CSV_HEADER + "\n0,0,1,0.5\n0,0,1,0.6\n"
        with pytest.raises(ParseError, match="duplicate"):
            load_depth_csv(io.StringIO(text))

    def test_records_must_tile_a_block(self):
        records = [
            (AxialCoord(0, 0), 1.0, 0.0),
            (AxialCoord(1, 1), 1.0, 0.0),
        ]
        with pytest.raises(ValueError, match="2x2"):
            grid_from_depth_records(records)

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            grid_from_depth_records([])
