"""Tour of the hexagonal grid: metrics, transforms, rounding, distances."""

from hexflood import (
    AxialCoord,
    WorldPoint,
    axial_to_world,
    hex_distance,
    metrics_from_width,
    neighbors,
    world_to_axial,
)

# Cells are pointy-top hexagons addressed by axial (q, r) integers.
# All geometry hangs off one number: the flat-to-flat width in meters.
m = metrics_from_width(4.0)
print(f"width  = {m.width} m (flat to flat)")
print(f"size   = {m.size:.6f} m (center to vertex)")
print(f"area   = {m.area:.6f} m2")
print()

# Centers in world meters. Rows shear eastward by half a width each.
for cell in [AxialCoord(0, 0), AxialCoord(1, 0), AxialCoord(0, 1), AxialCoord(-2, 3)]:
    x, y = axial_to_world(cell, m)
    print(f"center of {cell}: ({x:9.4f}, {y:9.4f})")
print()

# world_to_axial picks the cell whose center is nearest, so any point
# strictly inside a hexagon maps back to it.
p = WorldPoint(10.3, -2.8)
cell = world_to_axial(p, m)
cx, cy = axial_to_world(cell, m)
print(f"point ({p.x}, {p.y}) falls in {cell} (center {cx:.4f}, {cy:.4f})")
print()

# The six neighbors, in the fixed edge order used everywhere in the
# package. Every neighbor center sits exactly one width away.
center = AxialCoord(2, -1)
print(f"neighbors of {center}:")
for nb in neighbors(center):
    x0, y0 = axial_to_world(center, m)
    x1, y1 = axial_to_world(nb, m)
    d = ((x1 - x0) ** 2 + (y1 - y0) ** 2) ** 0.5
    print(f"  {nb}  center distance {d:.9f} m")
print()

# Grid distance counts steps between cells, not meters.
a, b = AxialCoord(0, 0), AxialCoord(3, -1)
print(f"hex_distance({a}, {b}) = {hex_distance(a, b)} steps")
