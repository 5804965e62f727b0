"""Polynomial waypoint trajectories with speed-profile time allocation.

Each waypoint pair is joined by a straight chord traversed with a quintic
rest-to-rest time law (zero velocity and acceleration at both ends), so a
multi-segment path briefly stops at every waypoint. Segment durations come
from a trapezoidal speed profile at the configured limits, falling back to a
triangular profile when the segment is too short to reach cruise speed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

# Duration assigned to a zero-length segment so timestamps stay strictly
# increasing when consecutive waypoints coincide.
EPS_DURATION = 0.01


@dataclass(frozen=True)
class SpeedLimits:
    max_speed: float = 5.0      # m/s
    max_accel: float = 3.0      # m/s^2

    def __post_init__(self):
        if self.max_speed <= 0 or self.max_accel <= 0:
            raise ValueError("speed limits must be positive")


@dataclass
class Trajectory:
    waypoints: np.ndarray      # (N, 3)
    durations: np.ndarray      # (N-1,) seconds per segment


def _segment_duration(length: float, lim: SpeedLimits) -> float:
    if length <= 0.0:
        return EPS_DURATION
    cruise_dist = lim.max_speed ** 2 / lim.max_accel
    if length >= cruise_dist:
        return length / lim.max_speed + lim.max_speed / lim.max_accel
    return 2.0 * np.sqrt(length / lim.max_accel)


def plan_polynomial(waypoints, lim: SpeedLimits) -> Trajectory:
    """Time-allocate a waypoint list into a smooth stop-at-waypoints path."""
    pts = np.atleast_2d(np.asarray(waypoints, dtype=float))
    if pts.shape[1] != 3:
        raise ValueError("waypoints must be (N, 3)")
    lengths = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    durations = np.array([_segment_duration(d, lim) for d in lengths])
    return Trajectory(waypoints=pts, durations=durations)


def flight_time(traj: Trajectory) -> float:
    return float(np.sum(traj.durations))


def _smoothstep(tau: np.ndarray) -> np.ndarray:
    """Quintic rest-to-rest progress: zero slope and curvature at 0 and 1."""
    return tau ** 3 * (10.0 - 15.0 * tau + 6.0 * tau ** 2)


def sample_position(traj: Trajectory, t: float) -> np.ndarray:
    """Position at time t; t is clamped to the trajectory's time span."""
    if traj.durations.size == 0:
        return traj.waypoints[0].copy()
    ends = np.cumsum(traj.durations)
    t = float(np.clip(t, 0.0, ends[-1]))
    seg = int(np.searchsorted(ends, t, side="left"))
    seg = min(seg, traj.durations.size - 1)
    t0 = ends[seg] - traj.durations[seg]
    tau = (t - t0) / traj.durations[seg]
    a = traj.waypoints[seg]
    b = traj.waypoints[seg + 1]
    return a + (b - a) * _smoothstep(np.clip(tau, 0.0, 1.0))


def sample_velocity(traj: Trajectory, t: float) -> np.ndarray:
    """Velocity at time t (zero outside the time span)."""
    if traj.durations.size == 0:
        return np.zeros(3)
    ends = np.cumsum(traj.durations)
    if t < 0.0 or t > ends[-1]:
        return np.zeros(3)
    seg = int(np.searchsorted(ends, t, side="left"))
    seg = min(seg, traj.durations.size - 1)
    t0 = ends[seg] - traj.durations[seg]
    T = traj.durations[seg]
    tau = np.clip((t - t0) / T, 0.0, 1.0)
    dsdtau = 30.0 * tau ** 2 - 60.0 * tau ** 3 + 30.0 * tau ** 4
    a = traj.waypoints[seg]
    b = traj.waypoints[seg + 1]
    return (b - a) * (dsdtau / T)


def measurement_poses(traj: Trajectory, frequency: float) -> np.ndarray:
    """Camera trigger positions at t = 0, 1/f, 2/f, ... up to flight_time."""
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    total = flight_time(traj)
    count = int(np.floor(total * frequency + 1e-9)) + 1
    times = np.arange(count) / frequency
    return np.array([sample_position(traj, t) for t in times])


def export_csv(traj: Trajectory, path, dt: float = 0.1) -> None:
    """Sampled (t, x, y, z) track, endpoints included."""
    total = flight_time(traj)
    times = np.append(np.arange(0.0, total, dt), total)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "y", "z"])
        for t in times:
            p = sample_position(traj, t)
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in p])
