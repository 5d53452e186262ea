"""Geometry tests: metrics, transforms, rounding, neighbors, distance."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hexflood.hexgrid import (
    NEIGHBOR_OFFSETS,
    AxialCoord,
    FractionalAxial,
    HexMetrics,
    axial_round,
    axial_to_world,
    axial_to_world_arrays,
    cube_round,
    hex_distance,
    metrics_from_width,
    neighbors,
    world_to_axial,
    world_to_axial_arrays,
    WorldPoint,
)

from oracles import bfs_hex_distance, center_distance, nearest_center_distance

SQRT3 = math.sqrt(3.0)


class TestMetrics:
    def test_reference_width(self):
        m = metrics_from_width(4.0)
        assert abs(m.size - 4.0 / SQRT3) < 1e-12
        # area of a hexagon in terms of flat-to-flat width is (sqrt(3)/2) w^2
        assert abs(m.area - (SQRT3 / 2.0) * 16.0) < 1e-9, f"area {m.area}"

    def test_unit_size_from_sqrt3_width(self):
        assert metrics_from_width(SQRT3).size == 1.0

    @given(st.floats(min_value=1e-3, max_value=1e6))
    def test_identities(self, width):
        m = metrics_from_width(width)
        assert abs(m.width - SQRT3 * m.size) <= 1e-12 * m.width
        assert abs(m.area - 1.5 * SQRT3 * m.size ** 2) <= 1e-12 * m.area

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
    def test_rejects_bad_width(self, bad):
        with pytest.raises(ValueError):
            metrics_from_width(bad)


class TestTransforms:
    def setup_method(self):
        self.unit = metrics_from_width(SQRT3)  # size exactly 1

    def test_known_centers(self):
        assert axial_to_world(AxialCoord(0, 0), self.unit) == (0.0, 0.0)
        x, y = axial_to_world(AxialCoord(1, 0), self.unit)
        assert abs(x - SQRT3) < 1e-15 and y == 0.0
        x, y = axial_to_world(AxialCoord(0, 1), self.unit)
        assert abs(x - SQRT3 / 2.0) < 1e-15 and abs(y - 1.5) < 1e-15

    def test_roundtrip_block(self):
        m = metrics_from_width(4.0)
        for q in range(-50, 51, 7):
            for r in range(-50, 51, 7):
                cell = AxialCoord(q, r)
                assert world_to_axial(axial_to_world(cell, m), m) == cell

    def test_off_center_points_stay_in_cell(self):
        # anywhere strictly inside the inradius belongs to the same cell
        m = metrics_from_width(2.5)
        rng = random.Random(20240817)
        for _ in range(500):
            cell = AxialCoord(rng.randint(-30, 30), rng.randint(-30, 30))
            cx, cy = axial_to_world(cell, m)
            theta = rng.uniform(0.0, 2.0 * math.pi)
            # inradius is width/2; stay strictly inside it
            point = WorldPoint(cx + 0.49 * m.width / 2.0 * math.cos(theta),
                               cy + 0.49 * m.width / 2.0 * math.sin(theta))
            assert world_to_axial(point, m) == cell

    @given(
        st.floats(min_value=-40.0, max_value=40.0),
        st.floats(min_value=-40.0, max_value=40.0),
    )
    @settings(max_examples=200)
    def test_containing_cell_is_nearest_center(self, x, y):
        m = metrics_from_width(3.0)
        cell = world_to_axial(WorldPoint(x, y), m)
        chosen = center_distance((x, y), cell, m)
        best = nearest_center_distance((x, y), m, window=4)
        assert chosen <= best + 1e-9, f"picked {cell} at {chosen}, best possible {best}"

    def test_array_transform_matches_scalar(self):
        m = metrics_from_width(4.0)
        rng = np.random.default_rng(99)
        x = rng.uniform(-500, 500, size=2000)
        y = rng.uniform(-500, 500, size=2000)
        q, r = world_to_axial_arrays(x, y, m)
        for i in range(x.size):
            assert AxialCoord(int(q[i]), int(r[i])) == world_to_axial(
                WorldPoint(float(x[i]), float(y[i])), m
            )

    def test_array_forward_matches_scalar(self):
        m = metrics_from_width(2.0)
        q = np.arange(-10, 11)
        r = np.arange(-10, 11)
        x, y = axial_to_world_arrays(q, r, m)
        for i in range(q.size):
            sx, sy = axial_to_world(AxialCoord(int(q[i]), int(r[i])), m)
            assert x[i] == sx and y[i] == sy


class TestCubeRound:
    def test_integers_pass_through(self):
        assert cube_round(2.0, -5.0, 3.0) == (2, -5, 3)

    def test_rejects_nonzero_sum(self):
        with pytest.raises(ValueError):
            cube_round(0.5, 0.5, 0.5)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            cube_round(math.nan, 0.0, 0.0)

    def test_halfway_tie_prefers_x_reset(self):
        # exactly between cells (0,0) and (1,0): deltas tie, x is reset
        assert cube_round(0.5, -0.5, 0.0) == (0, 0, 0)

    def test_agrees_with_nearest_center(self):
        m = metrics_from_width(SQRT3)
        rng = random.Random(4242)
        for _ in range(1000):
            fq = rng.uniform(-10.0, 10.0)
            fr = rng.uniform(-10.0, 10.0)
            cell = axial_round(FractionalAxial(fq, fr))
            point = axial_to_world(FractionalAxial(fq, fr), m)
            chosen = center_distance(point, cell, m)
            best = nearest_center_distance(point, m, window=4)
            assert chosen <= best + 1e-9


class TestNeighbors:
    def test_fixed_order(self):
        got = neighbors(AxialCoord(2, -1))
        expected = tuple(AxialCoord(2 + dq, -1 + dr) for dq, dr in NEIGHBOR_OFFSETS)
        assert got == expected
        assert NEIGHBOR_OFFSETS == ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))

    @pytest.mark.parametrize("width", [0.5, 1.0, 4.0, 123.456])
    def test_equidistance(self, width):
        m = metrics_from_width(width)
        center = axial_to_world(AxialCoord(0, 0), m)
        for nb in neighbors(AxialCoord(0, 0)):
            nx, ny = axial_to_world(nb, m)
            d = math.hypot(nx - center.x, ny - center.y)
            assert abs(d - m.width) <= 1e-9 * m.width, f"neighbor {nb} at {d}, width {m.width}"

    def test_symmetry(self):
        for q in range(-20, 21, 5):
            for r in range(-20, 21, 5):
                a = AxialCoord(q, r)
                for b in neighbors(a):
                    assert a in neighbors(b)


class TestHexDistance:
    def test_known_values(self):
        assert hex_distance(AxialCoord(0, 0), AxialCoord(0, 0)) == 0
        assert hex_distance(AxialCoord(0, 0), AxialCoord(1, 0)) == 1
        assert hex_distance(AxialCoord(0, 0), AxialCoord(3, -1)) == 3

    def test_matches_bfs(self):
        rng = random.Random(7)
        for _ in range(40):
            a = AxialCoord(rng.randint(-5, 5), rng.randint(-5, 5))
            b = AxialCoord(rng.randint(-5, 5), rng.randint(-5, 5))
            assert hex_distance(a, b) == bfs_hex_distance(a, b), f"{a} -> {b}"

    coords = st.builds(
        AxialCoord,
        st.integers(min_value=-100, max_value=100),
        st.integers(min_value=-100, max_value=100),
    )

    @given(coords, coords, coords)
    @settings(max_examples=200)
    def test_metric_properties(self, a, b, c):
        assert hex_distance(a, b) == hex_distance(b, a)
        assert (hex_distance(a, b) == 0) == (a == b)
        assert hex_distance(a, c) <= hex_distance(a, b) + hex_distance(b, c)

    def test_neighbors_are_distance_one(self):
        for nb in neighbors(AxialCoord(4, -7)):
            assert hex_distance(AxialCoord(4, -7), nb) == 1
