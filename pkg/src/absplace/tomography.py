"""Shadowing maps on a voxelized spatial loss field.

The shadowing between two points is the line integral of a local attenuation
field (dB per meter) along the connecting segment, normalized by the square
root of the link distance. The field is stored on a regular grid and treated
as piecewise constant over the voxels around the grid points, which turns the
integral into an exact weighted sum over the voxels the segment crosses:

    shadowing = sqrt(|b - a|) * sum_i (t_i - t_{i-1}) * field[voxel_i]

with 0 = t_0 <= ... <= t_T = 1 the crossing parameters. Unlike the
conventional ellipsoid weighted sum (also provided, for comparison), this
approximation is continuous in the endpoints, stays meaningful on coarse
grids, and costs O(Qx + Qy + Qz) per segment instead of O(Q).

All quantities are treated as dimensionless; with the field in dB/m the
shadowing carries a dB * m^(1/2) scale, which cancels downstream because
fields are always fit from observations through this same operator.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import lsmr

from .errors import DomainError
from .geometry import Point3, RegularGrid3, Segment3, containing_voxel

__all__ = [
    "SlfField",
    "Measurement",
    "TraversalResult",
    "traverse_voxels",
    "shadowing_line_integral",
    "shadowing_ellipsoid_sum",
    "estimate_slf",
    "write_slf_text",
    "read_slf_text",
    "write_measurements_csv",
    "read_measurements_csv",
]


@dataclass(frozen=True)
class SlfField:
    """Attenuation values (dB/m) on a regular grid; immutable once built."""

    grid: RegularGrid3
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.dims:
            raise ValueError(f"values shape {values.shape} != grid dims {self.grid.dims}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: RegularGrid3, value: float) -> "SlfField":
        return cls(grid, np.full(grid.dims, float(value)))

    @classmethod
    def zeros(cls, grid: RegularGrid3) -> "SlfField":
        return cls.constant(grid, 0.0)


@dataclass(frozen=True)
class Measurement:
    """One link observation: endpoints plus the observed shadowing in dB.

    ``shadow_db`` is the gain deficit relative to free space, i.e. free-space
    path gain at the link distance minus the measured gain.
    """

    tx: Point3
    rx: Point3
    shadow_db: float

    def __post_init__(self):
        object.__setattr__(self, "shadow_db", float(self.shadow_db))
        if self.tx == self.rx:
            raise ValueError("measurement endpoints must differ")

    @property
    def segment(self) -> Segment3:
        return Segment3(self.tx, self.rx)


@dataclass(frozen=True)
class TraversalResult:
    """Voxel crossings of a segment parameterized on [0, 1].

    crossings: (T+1,) nondecreasing parameters, first 0.0, last 1.0.
    voxels: (T, 3) integer indices; interval i lies inside voxels[i].
    """

    crossings: np.ndarray
    voxels: np.ndarray

    @property
    def num_intervals(self) -> int:
        return len(self.voxels)

    def interval_lengths(self) -> np.ndarray:
        return np.diff(self.crossings)

    def integrate(self, values: np.ndarray) -> float:
        """Path average of a voxel tensor: sum of interval lengths times values."""
        ix, iy, iz = self.voxels[:, 0], self.voxels[:, 1], self.voxels[:, 2]
        return float(self.interval_lengths() @ values[ix, iy, iz])


def traverse_voxels(grid: RegularGrid3, seg: Segment3) -> TraversalResult:
    """March a segment through the grid, recording voxel-boundary crossings.

    Walks from the voxel containing ``seg.a`` toward ``seg.b``, repeatedly
    finding, over the axes the segment actually moves along, the nearest
    boundary crossing ahead of the current parameter. The final interval is
    clamped to end at t = 1. Axes with zero direction component never select
    a crossing (their divisor is replaced by 1 only to avoid division
    faults). Zero-length boundary touches produce no interval.

    Raises DomainError if either endpoint lies outside the grid's closed
    voxel domain. A degenerate zero-length segment yields one interval
    spanning [0, 1] inside the containing voxel.
    """
    start = containing_voxel(grid, seg.a)
    containing_voxel(grid, seg.b)  # domain check for the far endpoint
    if seg.is_degenerate():
        return TraversalResult(np.array([0.0, 1.0]), np.array([start], dtype=int))

    origin = grid.origin.as_tuple()
    x1 = tuple(c - o for c, o in zip(seg.a.as_tuple(), origin))
    x2 = tuple(c - o for c, o in zip(seg.b.as_tuple(), origin))
    delta = tuple(q - p for p, q in zip(x1, x2))
    b_inc = tuple(0 if d == 0.0 else (1 if d > 0.0 else -1) for d in delta)
    den = tuple(d if d != 0.0 else 1.0 for d in delta)

    sp = grid.spacing
    dims = grid.dims
    i_cur = list(start)
    ts = [0.0]
    voxels = []
    t = 0.0
    max_steps = dims[0] + dims[1] + dims[2] + 8
    steps = 0
    while t < 1.0:
        t_next = math.inf
        j_next = -1
        for j in range(3):
            if b_inc[j] == 0:
                continue
            bound = sp[j] * (i_cur[j] + 0.5 * b_inc[j])
            tc = (bound - x1[j]) / den[j]
            if tc < t_next:
                t_next = tc
                j_next = j
        if t_next < t:  # float-noise guard: never march backwards
            t_next = t
        t_end = t_next if t_next < 1.0 else 1.0
        if t_end > t:
            voxels.append(tuple(i_cur))
            ts.append(t_end)
        if t_next >= 1.0:
            break
        t = t_next
        i_cur[j_next] += b_inc[j_next]
        if not 0 <= i_cur[j_next] < dims[j_next]:
            # The far endpoint sits numerically on the outer face; the
            # unvisited parameter range is a rounding-width sliver.
            break
        steps += 1
        if steps > max_steps:
            raise RuntimeError("voxel traversal exceeded its crossing bound")
    if not voxels:
        raise RuntimeError("voxel traversal produced no intervals")
    ts[-1] = 1.0
    return TraversalResult(np.array(ts), np.array(voxels, dtype=int))


def shadowing_line_integral(slf: SlfField, seg: Segment3) -> float:
    """Shadowing between the segment endpoints via voxel traversal.

    Exact for the piecewise-constant field: for a constant field l0 and a
    segment of length d the result is l0 * sqrt(d) regardless of grid
    spacing. Continuous in both endpoints. A zero-length segment returns 0
    by convention.
    """
    if seg.is_degenerate():
        return 0.0
    trav = traverse_voxels(slf.grid, seg)
    return math.sqrt(seg.length) * trav.integrate(slf.values)


def shadowing_ellipsoid_sum(slf: SlfField, seg: Segment3, width: float) -> float:
    """Conventional weighted-sum shadowing over an ellipsoid of grid points.

    Sums the field at every grid point whose distances to the two endpoints
    add up to at most the link distance plus ``width / 2`` (an ellipsoid with
    foci at the endpoints; ``width`` is commonly on the order of the
    wavelength), scaled by 1 / sqrt(link distance).

    The result is discontinuous in the endpoints and equals 0 whenever the
    ellipsoid captures no grid point, however strong the field; this is the
    failure mode that motivates the traversal method.
    """
    if width <= 0:
        raise ValueError(f"width must be positive, got {width}")
    if seg.is_degenerate():
        raise DomainError("ellipsoid sum needs two distinct endpoints")
    pts = slf.grid.points_array()
    da = np.linalg.norm(pts - seg.a.as_array(), axis=1)
    db = np.linalg.norm(pts - seg.b.as_array(), axis=1)
    d = seg.length
    mask = da + db <= d + 0.5 * width
    return float(slf.values.ravel()[mask].sum() / math.sqrt(d))


def _design_matrix(measurements, grid: RegularGrid3) -> sparse.csr_matrix:
    """Sparse linear operator mapping a flattened field to predicted shadowing."""
    ny, nz = grid.dims[1], grid.dims[2]
    rows, cols, data = [], [], []
    for k, m in enumerate(measurements):
        seg = m.segment
        trav = traverse_voxels(grid, seg)
        coeff = math.sqrt(seg.length) * trav.interval_lengths()
        flat = (trav.voxels[:, 0] * ny + trav.voxels[:, 1]) * nz + trav.voxels[:, 2]
        rows.extend([k] * len(flat))
        cols.extend(flat.tolist())
        data.extend(coeff.tolist())
    mat = sparse.coo_matrix(
        (data, (rows, cols)), shape=(len(measurements), grid.num_points)
    )
    return mat.tocsr()


def estimate_slf(
    measurements,
    grid: RegularGrid3,
    ridge: float = 1e-6,
    clip_negative: bool = True,
) -> SlfField:
    """Fit a loss field to observed shadowing values by ridge least squares.

    Minimizes sum_j (predicted_j - observed_j)^2 + ridge * ||field||^2 where
    the prediction is the traversal line integral, linear in the field. With
    ridge = 0 and a rank-deficient system the minimum-norm least-squares
    solution is returned. Negative fitted values are clipped to zero by
    default since physical absorption is nonnegative.
    """
    measurements = list(measurements)
    if not measurements:
        raise ValueError("at least one measurement is required")
    if ridge < 0:
        raise ValueError(f"ridge must be nonnegative, got {ridge}")
    a = _design_matrix(measurements, grid)
    y = np.array([m.shadow_db for m in measurements], dtype=float)
    x = lsmr(
        a,
        y,
        damp=math.sqrt(ridge),
        atol=1e-12,
        btol=1e-12,
        conlim=1e14,
        maxiter=50 * (grid.num_points + len(measurements)),
    )[0]
    if clip_negative:
        np.maximum(x, 0.0, out=x)
    return SlfField(grid, x.reshape(grid.dims))


def write_slf_text(field: SlfField, path) -> None:
    """Write a field as text: header ``Qx Qy Qz dx dy dz ox oy oz`` then the
    Qx*Qy*Qz values x-major (z index fastest)."""
    g = field.grid
    with open(path, "w") as fh:
        fh.write(
            "%d %d %d %r %r %r %r %r %r\n"
            % (g.dims + g.spacing + g.origin.as_tuple())
        )
        for v in field.values.ravel():
            fh.write(f"{float(v)!r}\n")


def read_slf_text(path) -> SlfField:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 9:
        raise ValueError(f"{path}: truncated field header")
    dims = tuple(int(t) for t in tokens[:3])
    spacing = tuple(float(t) for t in tokens[3:6])
    origin = Point3(*(float(t) for t in tokens[6:9]))
    values = np.array([float(t) for t in tokens[9:]])
    expected = dims[0] * dims[1] * dims[2]
    if values.size != expected:
        raise ValueError(f"{path}: expected {expected} values, found {values.size}")
    grid = RegularGrid3(origin, spacing, dims)
    return SlfField(grid, values.reshape(dims))


_MEASUREMENT_HEADER = ["tx_x", "tx_y", "tx_z", "rx_x", "rx_y", "rx_z", "shadow_db"]


def write_measurements_csv(measurements, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_MEASUREMENT_HEADER)
        for m in measurements:
            writer.writerow([repr(v) for v in m.tx.as_tuple() + m.rx.as_tuple() + (m.shadow_db,)])


def read_measurements_csv(path) -> list[Measurement]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != _MEASUREMENT_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            vals = [float(v) for v in row]
            out.append(Measurement(Point3(*vals[:3]), Point3(*vals[3:6]), vals[6]))
    return out
