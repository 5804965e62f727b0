"""Gaussian-process occupancy field over a 2D ground grid.

The terrain is discretised into square cells; occupancy is modelled as a GP
with a Matern-3/2 kernel whose covariance is maintained exactly (dense) and
updated with Kalman fusion as detections arrive. This keeps sequential
updates cheap compared with re-solving the full GP regression per step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field

import numpy as np

_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class GpHyperparams:
    lengthscale: float = 3.67
    signal_variance: float = 1.82
    noise_variance: float = 1.42

    def __post_init__(self):
        if self.lengthscale <= 0 or self.signal_variance <= 0 or self.noise_variance <= 0:
            raise ValueError("hyperparameters must be positive")


def matern32(dist, hp: GpHyperparams):
    """Matern-3/2 covariance as a function of separation distance."""
    d = np.asarray(dist, dtype=float)
    s = _SQRT3 * d / hp.lengthscale
    return hp.signal_variance * (1.0 + s) * np.exp(-s)


@dataclass
class FieldMap:
    """Grid occupancy estimate: per-cell mean and full covariance.

    Cells are indexed row-major: ``index = iy * nx + ix`` with x fastest.
    """

    resolution: float
    extent: np.ndarray        # (2,) metres
    origin: np.ndarray        # (2,) world position of the grid corner
    nx: int
    ny: int
    mean: np.ndarray          # (n,)
    covariance: np.ndarray    # (n, n)
    hyperparams: GpHyperparams = dc_field(default_factory=GpHyperparams)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def cell_centers(self) -> np.ndarray:
        """(n, 2) world coordinates of cell centres (cached)."""
        cached = getattr(self, "_centers", None)
        if cached is None:
            xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.resolution
            ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.resolution
            gx, gy = np.meshgrid(xs, ys)   # (ny, nx)
            cached = np.stack([gx.ravel(), gy.ravel()], axis=1)
            self._centers = cached
        return cached

    def cells_in_rect(self, xmin: float, xmax: float, ymin: float, ymax: float) -> np.ndarray:
        """Indices of cells whose centres fall inside a rectangle."""
        xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.resolution
        ix = np.nonzero((xs >= xmin) & (xs <= xmax))[0]
        iy = np.nonzero((ys >= ymin) & (ys <= ymax))[0]
        if ix.size == 0 or iy.size == 0:
            return np.zeros(0, dtype=int)
        return (iy[:, None] * self.nx + ix[None, :]).ravel()

    def covariance_squared(self) -> np.ndarray:
        """P @ P for the current covariance, cached until the next fusion.

        Planner scoring leans on tr(P_:I S^-1 P_I:) = tr(S^-1 (P^2)_II), so
        one full product per map state replaces one per candidate view.
        Treat the result as read-only.
        """
        cached = getattr(self, "_cov_sq", None)
        if cached is None:
            cached = self.covariance @ self.covariance
            self._cov_sq = cached
        return cached


@dataclass
class GroundTruth:
    """Binary occupancy reference on the same grid as a FieldMap."""

    resolution: float
    extent: np.ndarray
    origin: np.ndarray
    nx: int
    ny: int
    values: np.ndarray        # (n,) in {0, 1}


def _grid_shape(resolution: float, extent) -> tuple[int, int]:
    extent = np.asarray(extent, dtype=float)
    if resolution <= 0 or np.any(extent <= 0):
        raise ValueError("resolution and extent must be positive")
    nx = int(round(extent[0] / resolution))
    ny = int(round(extent[1] / resolution))
    return max(nx, 1), max(ny, 1)


_prior_cache: dict = {}


def _prior_covariance(resolution: float, extent_key: tuple, origin_key: tuple,
                      hp: GpHyperparams) -> np.ndarray:
    """Prior covariance shared by every field with the same geometry.

    The raw kernel gram K is conditioned on itself under the observation
    noise, P = K - K (K + sn2 I)^{-1} K, which bounds the marginal variances
    below the raw signal variance.
    """
    key = (resolution, extent_key, origin_key, hp)
    cached = _prior_cache.get(key)
    if cached is not None:
        return cached
    nx, ny = _grid_shape(resolution, np.asarray(extent_key))
    xs = origin_key[0] + (np.arange(nx) + 0.5) * resolution
    ys = origin_key[1] + (np.arange(ny) + 0.5) * resolution
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    K = matern32(dist, hp)
    n = K.shape[0]
    P = K - K @ np.linalg.solve(K + hp.noise_variance * np.eye(n), K)
    P = 0.5 * (P + P.T)
    _prior_cache[key] = P
    return P


def init_field(resolution: float, extent, prior_mean: float = 0.1,
               hp: GpHyperparams | None = None, origin=(0.0, 0.0)) -> FieldMap:
    """Build the prior field over a rectangular area."""
    hp = hp or GpHyperparams()
    extent = np.asarray(extent, dtype=float)
    origin = np.asarray(origin, dtype=float)
    nx, ny = _grid_shape(resolution, extent)
    P = _prior_covariance(resolution, tuple(extent), tuple(origin), hp)
    n = nx * ny
    return FieldMap(resolution=float(resolution), extent=extent, origin=origin,
                    nx=nx, ny=ny, mean=np.full(n, float(prior_mean)),
                    covariance=P.copy(), hyperparams=hp)


def fuse_measurement(field: FieldMap, detection) -> None:
    """Kalman update of mean and covariance from one detection.

    The detection observes a subset of cells directly (unit gain) with iid
    noise of the stated variance. An empty detection is a no-op.
    """
    idx = np.asarray(detection.cell_indices, dtype=int)
    if idx.size == 0:
        return
    z = np.asarray(detection.values, dtype=float)
    if z.shape != idx.shape:
        raise ValueError("values and cell_indices must have matching length")
    if detection.noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    P = field.covariance
    W = P[:, idx]                                   # (n, m)
    S = W[idx, :] + detection.noise_variance * np.eye(idx.size)
    gain = np.linalg.solve(S, W.T).T                # (n, m) = P H' S^-1
    field.mean += gain @ (z - field.mean[idx])
    P -= gain @ W.T
    np.copyto(P, 0.5 * (P + P.T))
    # Covariance changed: drop the cached square and any cached one-view
    # posterior derived from the old state.
    field._cov_sq = None
    field._view_prefix = None


def covariance_trace(field: FieldMap) -> float:
    return float(np.trace(field.covariance))


def rse(field: FieldMap, truth: GroundTruth) -> float:
    """Root of the summed squared per-cell mean error against the truth."""
    if truth.values.shape != field.mean.shape:
        raise ValueError("truth grid does not match field grid")
    err = field.mean - truth.values
    return float(np.sqrt(np.sum(err * err)))


def make_ground_truth(field: FieldMap, target_cells) -> GroundTruth:
    """Binary truth grid with 1.0 at the given (ix, iy) cells."""
    values = np.zeros(field.n_cells)
    for ix, iy in target_cells:
        if not (0 <= ix < field.nx and 0 <= iy < field.ny):
            raise ValueError(f"target cell ({ix}, {iy}) outside grid")
        values[iy * field.nx + ix] = 1.0
    return GroundTruth(resolution=field.resolution, extent=field.extent.copy(),
                       origin=field.origin.copy(), nx=field.nx, ny=field.ny,
                       values=values)


def save_grid_csv(path, values: np.ndarray, nx: int, ny: int) -> None:
    """Write a flat grid row-major as CSV with a column header."""
    grid = np.asarray(values, dtype=float).reshape(ny, nx)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"c{i}" for i in range(nx)])
        for row in grid:
            writer.writerow([repr(float(v)) for v in row])


def load_grid_csv(path) -> np.ndarray:
    """Read a grid CSV written by save_grid_csv; returns the flat array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    grid = np.asarray(rows, dtype=float)
    if grid.ndim != 2 or grid.shape[1] != len(header):
        raise ValueError("malformed grid CSV")
    return grid.ravel()
