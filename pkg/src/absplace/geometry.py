"""3D points, regular grids, boxes, and segments shared by all modules.

A regular grid places point ``i = (ix, iy, iz)`` at ``origin + i * spacing``.
The voxel owned by a grid point extends half a spacing step on each side, so
voxel boundaries sit at ``origin + (i +/- 1/2) * spacing`` and the grid's
voxel domain is the closed box ``[origin - spacing/2,
origin + (dims - 1/2) * spacing]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Point3",
    "RegularGrid3",
    "Box3",
    "Segment3",
    "grid_point",
    "containing_voxel",
]


def round_half_away(v: float) -> int:
    """Round to the nearest integer, ties away from zero.

    Built-in round() is half-to-even; voxel assignment needs a fixed,
    sign-symmetric tie-break so traversal is deterministic.
    """
    return int(math.floor(v + 0.5)) if v >= 0.0 else int(math.ceil(v - 0.5))


@dataclass(frozen=True)
class Point3:
    """Point in 3D space, coordinates in meters."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "z", float(self.z))
        if not all(map(math.isfinite, (self.x, self.y, self.z))):
            raise ValueError(f"coordinates must be finite, got ({self.x}, {self.y}, {self.z})")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def distance_to(self, other: "Point3") -> float:
        return math.dist(self.as_tuple(), other.as_tuple())


@dataclass(frozen=True)
class RegularGrid3:
    """Regular 3D lattice of ``dims`` points with strictly positive spacing."""

    origin: Point3
    spacing: tuple[float, float, float]
    dims: tuple[int, int, int]

    def __post_init__(self):
        spacing = tuple(float(s) for s in self.spacing)
        dims = tuple(int(d) for d in self.dims)
        if len(spacing) != 3 or len(dims) != 3:
            raise ValueError("spacing and dims must have 3 components")
        if any(s <= 0 or not math.isfinite(s) for s in spacing):
            raise ValueError(f"spacing must be strictly positive, got {spacing}")
        if any(d < 1 for d in dims):
            raise ValueError(f"dims must be positive, got {dims}")
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "dims", dims)

    @property
    def num_points(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def point(self, index) -> Point3:
        ix, iy, iz = index
        return Point3(
            self.origin.x + ix * self.spacing[0],
            self.origin.y + iy * self.spacing[1],
            self.origin.z + iz * self.spacing[2],
        )

    def points_array(self) -> np.ndarray:
        """All grid points as a (Q, 3) array, x-major (z index varies fastest)."""
        ax = self.origin.x + self.spacing[0] * np.arange(self.dims[0])
        ay = self.origin.y + self.spacing[1] * np.arange(self.dims[1])
        az = self.origin.z + self.spacing[2] * np.arange(self.dims[2])
        gx, gy, gz = np.meshgrid(ax, ay, az, indexing="ij")
        return np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)

    def domain_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Closed voxel domain as (lower, upper) corner arrays."""
        o = self.origin.as_array()
        sp = np.array(self.spacing)
        d = np.array(self.dims)
        return o - 0.5 * sp, o + (d - 0.5) * sp

    def contains(self, p: Point3) -> bool:
        lo, hi = self.domain_bounds()
        v = p.as_array()
        return bool(np.all(v >= lo) and np.all(v <= hi))


@dataclass(frozen=True)
class Box3:
    """Axis-aligned closed box (building footprints, no-fly volumes)."""

    lo: Point3
    hi: Point3

    def __post_init__(self):
        if not (self.lo.x <= self.hi.x and self.lo.y <= self.hi.y and self.lo.z <= self.hi.z):
            raise ValueError(f"box corners must satisfy lo <= hi, got {self.lo} / {self.hi}")

    def contains(self, p: Point3) -> bool:
        return (
            self.lo.x <= p.x <= self.hi.x
            and self.lo.y <= p.y <= self.hi.y
            and self.lo.z <= p.z <= self.hi.z
        )

    def contains_xy(self, x: float, y: float) -> bool:
        """Footprint membership, ignoring altitude."""
        return self.lo.x <= x <= self.hi.x and self.lo.y <= y <= self.hi.y


@dataclass(frozen=True)
class Segment3:
    """Directed line segment from ``a`` to ``b``."""

    a: Point3
    b: Point3

    @property
    def length(self) -> float:
        return self.a.distance_to(self.b)

    def is_degenerate(self) -> bool:
        return self.a == self.b

    def point_at(self, t: float) -> Point3:
        return Point3(
            self.a.x + t * (self.b.x - self.a.x),
            self.a.y + t * (self.b.y - self.a.y),
            self.a.z + t * (self.b.z - self.a.z),
        )


def grid_point(grid: RegularGrid3, index) -> Point3:
    """Coordinates of the grid point with the given 3-integer index."""
    ix, iy, iz = (int(i) for i in index)
    for i, d in zip((ix, iy, iz), grid.dims):
        if not 0 <= i < d:
            raise IndexError(f"grid index {(ix, iy, iz)} out of bounds for dims {grid.dims}")
    return grid.point((ix, iy, iz))


def containing_voxel(grid: RegularGrid3, p: Point3) -> tuple[int, int, int]:
    """Index of the voxel (nearest grid point) containing ``p``.

    Ties exactly on a voxel boundary round half away from zero in grid-local
    units; points exactly on the outer domain faces belong to the nearest
    interior voxel so the result is always a valid index.
    """
    if not grid.contains(p):
        lo, hi = grid.domain_bounds()
        raise DomainError(f"point {p.as_tuple()} outside grid domain [{lo}, {hi}]")
    out = []
    for c, o, s, d in zip(p.as_tuple(), grid.origin.as_tuple(), grid.spacing, grid.dims):
        i = round_half_away((c - o) / s)
        out.append(min(max(i, 0), d - 1))
    return tuple(out)
