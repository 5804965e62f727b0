"""Voxel signed-distance world model with box obstacles.

The flight volume is an axis-aligned box; obstacles are axis-aligned boxes
inside it. Distances to the nearest obstacle surface are precomputed on a
regular voxel grid (negative inside an obstacle) and queried with trilinear
interpolation, which keeps collision checking cheap enough to sit inside an
optimizer's inner loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np


class OutOfBoundsError(ValueError):
    """Raised when a query point lies outside the flight volume."""


@dataclass(frozen=True)
class BoxObstacle:
    """Axis-aligned box, corners in metres."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        mn = np.asarray(self.min_corner, dtype=float)
        mx = np.asarray(self.max_corner, dtype=float)
        if mn.shape != (3,) or mx.shape != (3,):
            raise ValueError("box corners must be 3-vectors")
        if np.any(mx <= mn):
            raise ValueError("box must have positive extent on every axis")
        object.__setattr__(self, "min_corner", mn)
        object.__setattr__(self, "max_corner", mx)


def _box_signed_distance(points: np.ndarray, box: BoxObstacle) -> np.ndarray:
    """Exact signed distance from points (..., 3) to the box surface.

    Positive outside, negative inside (distance to the nearest face).
    """
    lo = box.min_corner - points
    hi = points - box.max_corner
    outside = np.maximum(np.maximum(lo, hi), 0.0)
    d_out = np.sqrt(np.sum(outside * outside, axis=-1))
    # Inside: all face margins positive; distance is the smallest margin.
    margins = np.minimum(points - box.min_corner, box.max_corner - points)
    d_in = np.min(margins, axis=-1)
    return np.where(d_out > 0.0, d_out, -d_in)


def _bounds_signed_distance(points: np.ndarray, bounds_min, bounds_max) -> np.ndarray:
    """Signed distance to the flight-volume boundary, positive inside."""
    margins = np.minimum(points - bounds_min, bounds_max - points)
    inner = np.min(margins, axis=-1)
    return inner


@dataclass
class EsdfWorld:
    """Flight volume with a precomputed signed-distance grid.

    ``distances[i, j, k]`` holds the signed distance at the voxel centre
    ``bounds_min + (i+.5, j+.5, k+.5) * voxel_size``.
    """

    bounds_min: np.ndarray
    bounds_max: np.ndarray
    voxel_size: float
    distances: np.ndarray
    obstacles: List[BoxObstacle] = field(default_factory=list)

    @property
    def shape(self):
        return self.distances.shape

    def contains(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.all((p >= self.bounds_min) & (p <= self.bounds_max), axis=-1)


def build_esdf(bounds_min, bounds_max, obstacles: Sequence[BoxObstacle],
               voxel_size: float = 0.5) -> EsdfWorld:
    """Precompute the signed-distance grid for a set of box obstacles.

    With no obstacles the grid stores the distance to the volume boundary
    instead, so the free-space radius stays finite and planners keep away
    from the walls.
    """
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    bounds_min = np.asarray(bounds_min, dtype=float)
    bounds_max = np.asarray(bounds_max, dtype=float)
    if np.any(bounds_max <= bounds_min):
        raise ValueError("bounds must have positive extent on every axis")
    extent = bounds_max - bounds_min
    shape = np.maximum(np.round(extent / voxel_size).astype(int), 1)
    axes = [bounds_min[a] + (np.arange(shape[a]) + 0.5) * voxel_size for a in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([gx, gy, gz], axis=-1)

    if obstacles:
        dist = np.full(shape, np.inf)
        for box in obstacles:
            dist = np.minimum(dist, _box_signed_distance(centers, box))
    else:
        dist = _bounds_signed_distance(centers, bounds_min, bounds_max)

    return EsdfWorld(bounds_min=bounds_min, bounds_max=bounds_max,
                     voxel_size=float(voxel_size), distances=dist,
                     obstacles=list(obstacles))


def _interp_clamped(world: EsdfWorld, points: np.ndarray) -> np.ndarray:
    """Trilinear interpolation of the distance grid at (..., 3) points.

    Coordinates are clamped to the voxel-centre lattice, so points between
    the boundary and the first/last centre take nearest-layer values.
    """
    p = np.asarray(points, dtype=float)
    u = (p - world.bounds_min) / world.voxel_size - 0.5
    shape = np.array(world.distances.shape)
    i0 = np.clip(np.floor(u).astype(int), 0, np.maximum(shape - 2, 0))
    frac = np.clip(u - i0, 0.0, 1.0)
    i1 = np.minimum(i0 + 1, shape - 1)

    d = world.distances
    ix0, iy0, iz0 = i0[..., 0], i0[..., 1], i0[..., 2]
    ix1, iy1, iz1 = i1[..., 0], i1[..., 1], i1[..., 2]
    fx, fy, fz = frac[..., 0], frac[..., 1], frac[..., 2]

    c00 = d[ix0, iy0, iz0] * (1 - fx) + d[ix1, iy0, iz0] * fx
    c01 = d[ix0, iy0, iz1] * (1 - fx) + d[ix1, iy0, iz1] * fx
    c10 = d[ix0, iy1, iz0] * (1 - fx) + d[ix1, iy1, iz0] * fx
    c11 = d[ix0, iy1, iz1] * (1 - fx) + d[ix1, iy1, iz1] * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    return c0 * (1 - fz) + c1 * fz


def esdf_query(world: EsdfWorld, point) -> float:
    """Interpolated signed distance at a point inside the volume."""
    p = np.asarray(point, dtype=float)
    if not bool(np.all(world.contains(p))):
        raise OutOfBoundsError(f"point {p} outside flight volume")
    return float(_interp_clamped(world, p))


def hard_collision_cost(world: EsdfWorld, point, uav_radius: float) -> int:
    """1 if the clearance sphere intersects an obstacle (or the point left
    the volume), else 0. The boundary case (distance exactly radius/2) is
    free."""
    p = np.asarray(point, dtype=float)
    if not bool(np.all(world.contains(p))):
        return 1
    return 0 if _interp_clamped(world, p) >= 0.5 * uav_radius else 1


def _collision_mask(world: EsdfWorld, points: np.ndarray, uav_radius: float) -> np.ndarray:
    """Vectorised hard_collision_cost over (..., 3) points."""
    p = np.asarray(points, dtype=float)
    inside = world.contains(p)
    vals = _interp_clamped(world, p)
    return ~inside | (vals < 0.5 * uav_radius)


def _dyadic_counts(lengths: np.ndarray, spacing: float) -> np.ndarray:
    """Per-segment sample interval counts: smallest power of two with
    interval length <= spacing. Nested under spacing halving."""
    ratio = np.maximum(lengths / spacing, 1.0)
    return 2 ** np.ceil(np.log2(ratio)).astype(int)


def path_collision_cost(world: EsdfWorld, trajectory, sample_spacing: float,
                        uav_radius: float) -> int:
    """Number of colliding samples along a trajectory.

    Each straight segment is sampled at arc-length intervals <= sample_spacing
    (both endpoints included); the count is the number of samples where
    hard_collision_cost is 1. Zero means the path is collision-free at that
    resolution.
    """
    if sample_spacing <= 0:
        raise ValueError("sample_spacing must be positive")
    pts = np.asarray(trajectory.waypoints, dtype=float)
    total = 0
    for a, b in zip(pts[:-1], pts[1:]):
        seg = b - a
        length = float(np.linalg.norm(seg))
        n = int(_dyadic_counts(np.array([length]), sample_spacing)[0]) if length > 0 else 1
        t = np.linspace(0.0, 1.0, n + 1)
        samples = a + t[:, None] * seg
        total += int(np.count_nonzero(_collision_mask(world, samples, uav_radius)))
    return total


def line_of_sight(world: EsdfWorld, a, b) -> bool:
    """True when the straight segment a-b never enters an obstacle.

    Sampled at intervals <= voxel_size / 2; a sample with negative
    interpolated distance blocks the ray.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for p in (a, b):
        if not bool(np.all(world.contains(p))):
            raise OutOfBoundsError(f"endpoint {p} outside flight volume")
    length = float(np.linalg.norm(b - a))
    n = max(int(np.ceil(length / (0.5 * world.voxel_size))), 1)
    t = np.linspace(0.0, 1.0, n + 1)
    samples = a + t[:, None] * (b - a)
    return bool(np.all(_interp_clamped(world, samples) >= 0.0))


def _line_of_sight_batch(world: EsdfWorld, origin: np.ndarray,
                         targets: np.ndarray) -> np.ndarray:
    """Visibility of many targets from one origin, sampled like
    line_of_sight. Returns a boolean mask of shape (len(targets),)."""
    origin = np.asarray(origin, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if targets.size == 0:
        return np.zeros(0, dtype=bool)
    lengths = np.linalg.norm(targets - origin, axis=1)
    n = max(int(np.ceil(lengths.max() / (0.5 * world.voxel_size))), 1)
    t = np.linspace(0.0, 1.0, n + 1)
    # (n+1, m, 3) sample lattice; per-ray spacing <= the required bound
    # because every ray is at most the longest one.
    samples = origin + t[:, None, None] * (targets - origin)[None, :, :]
    vals = _interp_clamped(world, samples)
    return np.all(vals >= 0.0, axis=0)


def _ray_box_visible(world: EsdfWorld, origin: np.ndarray,
                     targets: np.ndarray) -> np.ndarray:
    """Exact visibility of many targets from one origin against the box list.

    A target is visible unless the segment to it crosses a box interior for a
    positive length; touching a face or sliding along it does not occlude.
    Slab test per box, no sampling, so thin clips near edges are never missed.
    Returns a boolean mask of shape (len(targets),).
    """
    origin = np.asarray(origin, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if targets.size == 0:
        return np.zeros(0, dtype=bool)
    d = targets - origin  # (m, 3)
    visible = np.ones(len(targets), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d  # +/-inf on axis-parallel rays is fine below
        for box in world.obstacles:
            t1 = (box.min_corner - origin) * inv
            t2 = (box.max_corner - origin) * inv
            # 0 * inf -> nan marks "starts exactly on this face"; fmin/fmax
            # drop the nan, which resolves grazing contact to "not blocked".
            near = np.fmin(t1, t2).max(axis=1)
            far = np.fmax(t1, t2).min(axis=1)
            blocked = np.maximum(near, 0.0) < np.minimum(far, 1.0)
            visible &= ~blocked
    return visible
