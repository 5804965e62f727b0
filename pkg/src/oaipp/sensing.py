"""Downward camera model and synthetic target detector.

The camera looks straight down with a rectangular field of view; a
measurement reads every unoccluded cell inside the ground footprint at once.
Detection quality degrades with altitude along two separate curves: noise
variance grows towards a ceiling, and a bell-shaped performance weight models
the sweet spot of the underlying detector (sharp imagery up close, too little
resolution far away, useless beyond saturation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .world import EsdfWorld, _ray_box_visible


@dataclass(frozen=True)
class CameraModel:
    """Full opening angles in degrees (along-track, cross-track)."""

    fov_deg: tuple = (45.0, 60.0)
    frequency: float = 0.15   # measurements per second

    def __post_init__(self):
        if min(self.fov_deg) <= 0 or max(self.fov_deg) >= 180:
            raise ValueError("field of view must be in (0, 180) degrees")
        if self.frequency <= 0:
            raise ValueError("measurement frequency must be positive")


@dataclass(frozen=True)
class SensorNoiseModel:
    """Altitude-dependent iid observation noise, var = scale*(1-exp(-decay*h))."""

    scale: float = 1.0
    decay: float = 0.05

    def __post_init__(self):
        if self.scale <= 0 or self.decay <= 0:
            raise ValueError("noise model parameters must be positive")


@dataclass(frozen=True)
class PerformanceModel:
    """Bell-shaped detector quality over altitude, zero at saturation."""

    optimal_altitude: float = 10.0
    spread: float = 7.0
    saturation_altitude: float = 26.0

    def __post_init__(self):
        if self.spread <= 0 or self.saturation_altitude <= 0:
            raise ValueError("performance model parameters must be positive")


@dataclass(frozen=True)
class Detection:
    """One camera measurement: per-cell values with shared noise variance."""

    pose: np.ndarray
    cell_indices: np.ndarray
    values: np.ndarray
    noise_variance: float

    def __post_init__(self):
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")
        if np.asarray(self.cell_indices).shape != np.asarray(self.values).shape:
            raise ValueError("cell_indices and values must have matching shape")


def camera_footprint(pose, cam: CameraModel, ground_z: float = 0.0) -> np.ndarray:
    """Half-extents (x, y) of the ground footprint rectangle."""
    pose = np.asarray(pose, dtype=float)
    h = pose[2] - ground_z
    if h <= 0:
        raise ValueError("camera must be above the ground plane")
    fov = np.asarray(cam.fov_deg, dtype=float)
    return h * np.tan(np.deg2rad(fov / 2.0))


def detection_noise_variance(altitude: float, nm: SensorNoiseModel) -> float:
    if altitude <= 0:
        raise ValueError("altitude must be positive")
    return float(nm.scale * (1.0 - np.exp(-nm.decay * altitude)))


def performance_weight(altitude: float, pm: PerformanceModel) -> float:
    """Normalised Gaussian bump over altitude; exactly zero at and beyond
    the saturation altitude."""
    if altitude <= 0:
        raise ValueError("altitude must be positive")
    if altitude >= pm.saturation_altitude:
        return 0.0
    s = pm.spread
    z = (altitude - pm.optimal_altitude) / s
    return float(np.exp(-0.5 * z * z) / (s * np.sqrt(2.0 * np.pi)))


def visible_cells(field, world: EsdfWorld, pose, cam: CameraModel) -> np.ndarray:
    """Indices of field cells inside the footprint with a clear line of
    sight from the camera to the cell centre."""
    pose = np.asarray(pose, dtype=float)
    ground_z = float(world.bounds_min[2])
    half = camera_footprint(pose, cam, ground_z)
    idx = field.cells_in_rect(pose[0] - half[0], pose[0] + half[0],
                              pose[1] - half[1], pose[1] + half[1])
    if idx.size == 0:
        return idx
    centers = field.cell_centers()[idx]
    targets = np.column_stack([centers, np.full(idx.size, ground_z)])
    mask = _ray_box_visible(world, pose, targets)
    return idx[mask]


def simulate_detection(field, truth, world: EsdfWorld, pose, cam: CameraModel,
                       nm: SensorNoiseModel, rng: np.random.Generator) -> Detection:
    """Synthetic detector: ground truth plus iid Gaussian noise at the
    altitude-dependent variance over the visible cells."""
    pose = np.asarray(pose, dtype=float)
    ground_z = float(world.bounds_min[2])
    var = detection_noise_variance(pose[2] - ground_z, nm)
    idx = visible_cells(field, world, pose, cam)
    values = truth.values[idx] + rng.normal(0.0, np.sqrt(var), size=idx.size)
    # The reported variance is floored so the fusion update stays well-posed
    # in the noiseless limit.
    return Detection(pose=pose, cell_indices=idx, values=values,
                     noise_variance=max(var, 1e-9))


def inject_false_positive(detection: Detection, truth,
                          rng: np.random.Generator,
                          offset: float = 1.0) -> Detection:
    """Corrupt one off-target visible cell with a positive offset.

    Returns a new Detection; if no off-target cell is visible the detection
    is returned unchanged.
    """
    idx = detection.cell_indices
    off_target = np.nonzero(truth.values[idx] < 0.5)[0]
    if off_target.size == 0:
        return detection
    pick = int(rng.choice(off_target))
    values = detection.values.copy()
    values[pick] += offset
    return Detection(pose=detection.pose, cell_indices=idx, values=values,
                     noise_variance=detection.noise_variance)
