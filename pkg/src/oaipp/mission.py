"""Mission execution: replanning loop, baseline planners, trial statistics.

A mission alternates planning and flying until the time budget runs out:
plan a path from the current pose (re-planning up to a retry cap if the
result is not collision-free), fly it while the camera fires on its own
clock, fuse every detection into the authoritative field, and repeat. When
the next path no longer fits in the remaining budget the vehicle hovers and
the mission ends. All planner kinds share the same sensing and fusion path;
only the planning callback differs.

Measurement clock: one detection is always taken at the start pose at t = 0;
within each flown path the camera fires at the sensor period, and the pose a
path starts from is measured exactly once (as the first tick of the path
that departs from it).
"""

from __future__ import annotations

import copy
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .config import Config, validate_config
from .fieldmap import (
    FieldMap,
    GpHyperparams,
    covariance_trace,
    fuse_measurement,
    init_field,
    make_ground_truth,
    rse,
)
from .objectives import ObjectiveConfig
from .optimize import (
    CmaesOptions,
    PlannerOptions,
    coarse_greedy_search,
    refine_path,
)
from .sensing import (
    CameraModel,
    PerformanceModel,
    SensorNoiseModel,
    camera_footprint,
    inject_false_positive,
    simulate_detection,
)
from .scenarios import build_world
from .trajectory import (
    SpeedLimits,
    Trajectory,
    flight_time,
    measurement_poses,
    plan_polynomial,
)
from .world import EsdfWorld, hard_collision_cost, line_of_sight, path_collision_cost

_HOVER_TIME = 0.02   # paths at or below this duration are parked hovers


class MissionAbort(RuntimeError):
    """No acceptable plan could be produced; the mission cannot continue."""


@dataclass
class MissionLog:
    samples: list = dc_field(default_factory=list)          # (t, rse, trace)
    executed_poses: list = dc_field(default_factory=list)   # (t, pose)
    planned_paths: list = dc_field(default_factory=list)    # (n, 3) arrays
    detections_count: int = 0
    collision_count: int = 0
    aborted: bool = False
    abort_reason: Optional[str] = None
    elapsed: float = 0.0
    final_mean: Optional[np.ndarray] = None
    final_variance: Optional[np.ndarray] = None


def _camera(cfg: Config) -> CameraModel:
    return CameraModel(tuple(cfg.sensing.fov_deg), cfg.sensing.frequency)


def _noise(cfg: Config) -> SensorNoiseModel:
    return SensorNoiseModel(cfg.sensing.noise_scale, cfg.sensing.noise_decay)


def _performance(cfg: Config) -> PerformanceModel:
    return PerformanceModel(cfg.sensing.optimal_altitude,
                            cfg.sensing.altitude_spread,
                            cfg.sensing.saturation_altitude)


def _limits(cfg: Config) -> SpeedLimits:
    return SpeedLimits(cfg.limits.v_max, cfg.limits.a_max)


def _objective_config(cfg: Config, mode: str) -> ObjectiveConfig:
    o = cfg.objective
    return ObjectiveConfig(info_weight=o.info_weight,
                           collision_weight=o.collision_weight,
                           kappa=o.kappa, mode=mode,
                           uav_radius=cfg.mission.uav_radius,
                           collision_sample_spacing=o.collision_sample_spacing,
                           performance=_performance(cfg), noise=_noise(cfg))


def _planner_options(cfg: Config) -> PlannerOptions:
    opt = cfg.optimizer
    return PlannerOptions(
        nbv_samples=opt.nbv_samples,
        altitude_range=(opt.altitude_min, opt.altitude_max),
        waypoints_per_plan=cfg.mission.waypoints_per_plan,
        cmaes=CmaesOptions(sigma0=opt.cmaes_sigma0,
                           population=opt.cmaes_population,
                           max_evaluations=opt.cmaes_max_evaluations,
                           f_tolerance=opt.cmaes_f_tolerance))


def _init_field(cfg: Config) -> FieldMap:
    hp = GpHyperparams(cfg.field.gp.length_scale,
                       cfg.field.gp.signal_variance,
                       cfg.field.gp.noise_variance)
    return init_field(cfg.field.resolution, cfg.field.extent,
                      cfg.field.prior_mean, hp,
                      origin=cfg.world.bounds_min[:2])


# --- baseline planners ----------------------------------------------------

def _merge_intervals(intervals):
    merged = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def _axis_segment_with_detours(world: EsdfWorld, a, b, margin: float):
    """Waypoints from a to b (axis-aligned, constant z) that skirt any box
    crossing the segment, offset by `margin` from the box faces."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    move = np.nonzero(np.abs(b - a) > 1e-12)[0]
    if move.size == 0:
        return [a]
    if move.size > 1 or move[0] == 2:
        # diagonal or vertical legs are not generated by the sweep builder
        return [a, b]
    ax = int(move[0])            # 0: x-leg, 1: y-leg
    side_ax = 1 - ax
    z = a[2]
    lo, hi = (a[ax], b[ax]) if a[ax] < b[ax] else (b[ax], a[ax])
    blocked = []
    for box in world.obstacles:
        if box.max_corner[2] < z - margin or box.min_corner[2] > z + margin:
            continue
        if not (box.min_corner[side_ax] - margin < a[side_ax] <
                box.max_corner[side_ax] + margin):
            continue
        b_lo = box.min_corner[ax] - margin
        b_hi = box.max_corner[ax] + margin
        if b_hi <= lo or b_lo >= hi:
            continue
        blocked.append((b_lo, b_hi, box))
    pts = [a]
    if blocked:
        intervals = _merge_intervals([[l, h] for l, h, _ in blocked])
        forward = a[ax] < b[ax]
        if not forward:
            intervals = intervals[::-1]
        for lo_i, hi_i in intervals:
            group = [box for l, h, box in blocked if l < hi_i and h > lo_i]
            near = min(box.min_corner[side_ax] for box in group) - margin
            far = max(box.max_corner[side_ax] for box in group) + margin
            # pick the side with the smaller excursion that stays in bounds
            options = sorted((abs(s - a[side_ax]), s) for s in (near, far))
            side = None
            for _, s in options:
                if world.bounds_min[side_ax] + margin <= s <= world.bounds_max[side_ax] - margin:
                    side = s
                    break
            if side is None:
                return None
            entry, exit_ = (lo_i, hi_i) if forward else (hi_i, lo_i)
            for coord, lateral in ((entry, a[side_ax]), (entry, side),
                                   (exit_, side), (exit_, a[side_ax])):
                p = a.copy()
                p[ax] = coord
                p[side_ax] = lateral
                pts.append(p)
    pts.append(b)
    return pts


def _densify(points, hop: float):
    out = [np.asarray(points[0], dtype=float)]
    for a, b in zip(points[:-1], points[1:]):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        n = max(1, int(np.ceil(np.linalg.norm(b - a) / hop)))
        for k in range(1, n + 1):
            out.append(a + (b - a) * (k / n))
    return out


# hop lengths tried when stretching a sweep to fill the budget; short
# rest-to-rest hops slow the vehicle so the sensor clock samples every track
_HOP_GRID = (1e9, 8.0, 6.0, 5.0, 4.0, 3.0, 2.5, 2.0, 1.6, 1.3, 1.1,
             0.9, 0.8, 0.7, 0.6, 0.5, 0.45, 0.4)


def lawnmower_plan(cfg: Config, world: EsdfWorld, start_pose,
                   budget: float) -> Optional[Trajectory]:
    """Boustrophedon coverage sweep at the detector's optimal altitude.

    Track spacing equals the cross-track footprint width. If even the
    fastest single pass does not fit in the budget the spacing is widened by
    integer factors (with a warning); if it fits easily, extra waypoints are
    inserted so the pass stretches toward the budget and measurements land
    across the whole pattern. Returns None when no pattern fits.
    """
    cam = _camera(cfg)
    lim = _limits(cfg)
    ground = float(world.bounds_min[2])
    z = ground + cfg.sensing.optimal_altitude
    half = camera_footprint(np.array([0.0, 0.0, z]), cam, ground)
    ox, oy = float(world.bounds_min[0]), float(world.bounds_min[1])
    ex, ey = float(cfg.field.extent[0]), float(cfg.field.extent[1])
    margin = (cfg.mission.uav_radius / 2.0 + world.voxel_size + 0.25)
    start = np.asarray(start_pose, dtype=float)

    x_lo = ox + min(half[0], ex / 2)
    x_hi = max(ox + ex - half[0], x_lo)
    base_spacing = 2.0 * half[1]

    for factor in range(1, 9):
        spacing = base_spacing * factor
        if ey <= 2 * half[1]:
            ys = [oy + ey / 2.0]
        else:
            n_tracks = 1 + int(np.ceil((ey - 2 * half[1]) / spacing - 1e-9))
            ys = [min(oy + half[1] + k * spacing, oy + ey - half[1])
                  for k in range(n_tracks)]

        # corner list: climb/transit to the first track, then sweep
        pts = [start]
        entry = np.array([start[0], start[1], z])
        if not np.allclose(entry, start):
            pts.append(entry)
        xs = (x_lo, x_hi)
        head = 0 if abs(start[0] - x_lo) <= abs(start[0] - x_hi) else 1
        corners = []
        for i, y in enumerate(ys):
            x_in, x_out = xs[(head + i) % 2], xs[(head + i + 1) % 2]
            corners.append(np.array([x_in, y, z]))
            corners.append(np.array([x_out, y, z]))
        # x-leg to the first corner's column, then y-leg onto the track
        approach = np.array([corners[0][0], start[1], z])
        route = [pts[-1], approach] + corners
        full = [route[0]]
        feasible = True
        for a, b in zip(route[:-1], route[1:]):
            seg = _axis_segment_with_detours(world, full[-1], b, margin)
            if seg is None:
                feasible = False
                break
            full.extend(seg[1:])
        if not feasible:
            continue
        if len(pts) > 1:
            full = [start] + full
        base = [p for i, p in enumerate(full)
                if i == 0 or np.linalg.norm(p - full[i - 1]) > 1e-9]
        if len(base) < 2:
            return None
        fastest = plan_polynomial(base, lim)
        if flight_time(fastest) <= budget:
            if factor > 1:
                warnings.warn(
                    f"lawnmower spacing widened x{factor} to fit the budget")
            break
    else:
        return None

    best = fastest
    for hop in _HOP_GRID:
        cand = plan_polynomial(_densify(base, hop), lim)
        if flight_time(cand) <= budget - 0.5:
            best = cand
        else:
            break
    return best


def random_waypoint_plan(current, cfg: Config, world: EsdfWorld,
                         rng: np.random.Generator) -> Trajectory:
    """Uniform random destination over the field with rejection of colliding
    or occluded picks; hovers in place when 100 draws all fail."""
    lim = _limits(cfg)
    current = np.asarray(current, dtype=float)
    ground = float(world.bounds_min[2])
    ox, oy = float(world.bounds_min[0]), float(world.bounds_min[1])
    ex, ey = float(cfg.field.extent[0]), float(cfg.field.extent[1])
    z_lo = ground + cfg.optimizer.altitude_min
    z_hi = min(float(world.bounds_max[2]),
               ground + cfg.sensing.saturation_altitude)
    lo = np.array([ox, oy, z_lo])
    hi = np.array([ox + ex, oy + ey, max(z_hi, z_lo)])
    for _ in range(100):
        dest = rng.uniform(lo, hi)
        if hard_collision_cost(world, dest, cfg.mission.uav_radius):
            continue
        if not line_of_sight(world, current, dest):
            continue
        return plan_polynomial([current, dest], lim)
    return plan_polynomial([current, current], lim)   # hover


# --- the mission loop -----------------------------------------------------

def _make_planner(kind: str, cfg: Config, field: FieldMap, world: EsdfWorld,
                  rng: np.random.Generator):
    """Planning callback: (current_pose, remaining_budget) -> Trajectory|None."""
    lim = _limits(cfg)
    if kind in ("oaipp-adaptive", "oaipp-nonadaptive"):
        mode = "adaptive" if kind == "oaipp-adaptive" else "nonadaptive"
        obj_cfg = _objective_config(cfg, mode)
        planner_opts = _planner_options(cfg)
        cam = _camera(cfg)

        def plan(current, remaining):
            init = coarse_greedy_search(field, world, current, obj_cfg, cam,
                                        lim, planner_opts, rng)
            seed = int(rng.integers(2 ** 63))
            refined, _ = refine_path(init, field, world, obj_cfg, cam, lim,
                                     planner_opts, seed=seed)
            return plan_polynomial(refined, lim)

        return plan

    if kind == "lawnmower":
        state = {"planned": False}

        def plan(current, remaining):
            if state["planned"]:
                return None
            state["planned"] = True
            return lawnmower_plan(cfg, world, current, remaining)

        return plan

    if kind == "random":
        def plan(current, remaining):
            return random_waypoint_plan(current, cfg, world, rng)

        return plan

    raise ValueError(f"unknown planner kind {kind!r}")


def run_mission(cfg: Config) -> MissionLog:
    """Execute one mission; deterministic for a fixed config and seed."""
    validate_config(cfg)
    world_rng = np.random.default_rng([cfg.mission.seed, 0])
    rng = np.random.default_rng([cfg.mission.seed, 1])
    world = build_world(cfg, world_rng)
    field = _init_field(cfg)
    truth = make_ground_truth(field, [tuple(t) for t in cfg.mission.targets])
    cam = _camera(cfg)
    noise = _noise(cfg)
    budget = float(cfg.mission.budget)
    spacing = cfg.objective.collision_sample_spacing
    r_uav = cfg.mission.uav_radius

    # one detection per mission may be corrupted; both draws always happen so
    # the random stream does not depend on the probability
    fp_pending = rng.random() < cfg.sensing.false_positive_prob
    fp_time = rng.random() * budget

    log = MissionLog()

    def fuse_at(pose, t_event):
        nonlocal fp_pending
        det = simulate_detection(field, truth, world, pose, cam, noise, rng)
        if det.cell_indices.size == 0:
            return
        if fp_pending and t_event >= fp_time:
            injected = inject_false_positive(det, truth, rng,
                                             cfg.sensing.false_positive_offset)
            if injected is not det:
                fp_pending = False
            det = injected
        fuse_measurement(field, det)
        log.detections_count += 1
        log.samples.append((t_event, rse(field, truth), covariance_trace(field)))
        log.executed_poses.append((t_event, np.asarray(pose, dtype=float).copy()))

    start = np.asarray(cfg.mission.start_pose, dtype=float)
    plan = _make_planner(cfg.mission.planner, cfg, field, world, rng)
    period = 1.0 / cam.frequency

    t = 0.0
    try:
        fuse_at(start, 0.0)
        current = start.copy()
        first_path = True
        while True:
            remaining = budget - t
            traj = None
            for _attempt in range(cfg.mission.retry_cap):
                cand = plan(current, remaining)
                if cand is None or flight_time(cand) <= _HOVER_TIME:
                    traj = cand
                    break
                if path_collision_cost(world, cand, spacing, r_uav) == 0:
                    traj = cand
                    break
            else:
                raise MissionAbort(
                    f"no collision-free path within {cfg.mission.retry_cap} "
                    f"attempts at t={t:.1f}s")
            if traj is None or flight_time(traj) <= _HOVER_TIME:
                break                      # planner is done; park and hover
            T = flight_time(traj)
            if T > remaining + 1e-9:
                break                      # would bust the budget: hover
            poses = measurement_poses(traj, cam.frequency)
            for k, pose in enumerate(poses):
                if k == 0:
                    if first_path:
                        continue           # already measured at t = 0
                    fuse_at(pose, t)
                else:
                    fuse_at(pose, t + k * period)
            log.collision_count += path_collision_cost(world, traj, spacing, r_uav)
            log.planned_paths.append(np.asarray(traj.waypoints, dtype=float))
            t += T
            current = np.asarray(traj.waypoints[-1], dtype=float)
            first_path = False
        log.elapsed = t
    except MissionAbort as e:
        log.aborted = True
        log.abort_reason = str(e)
        log.elapsed = t

    log.final_mean = field.mean.copy()
    log.final_variance = field.covariance.diagonal().copy()
    return log


# --- multi-trial statistics ------------------------------------------------

@dataclass
class TrialStats:
    times: np.ndarray
    rse_mean: np.ndarray
    rse_std: np.ndarray
    trace_mean: np.ndarray
    trace_std: np.ndarray
    n_trials: int
    aborted_seeds: list
    logs: list


def _resample_locf(samples, times):
    ts = np.array([s[0] for s in samples])
    out = np.empty((2, times.size))
    idx = np.clip(np.searchsorted(ts, times, side="right") - 1, 0, None)
    out[0] = np.array([s[1] for s in samples])[idx]
    out[1] = np.array([s[2] for s in samples])[idx]
    return out


def run_trials(cfg: Config, n_trials: int, bin_width: float = 5.0) -> TrialStats:
    """Run seeded trials (seed, seed+1, ...) and aggregate onto a common
    time grid with last-observation-carried-forward resampling. Aborted
    missions are excluded and reported in aborted_seeds."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    logs = []
    aborted = []
    for i in range(n_trials):
        c = copy.deepcopy(cfg)
        c.mission.seed = cfg.mission.seed + i
        log = run_mission(c)
        if log.aborted:
            aborted.append(c.mission.seed)
        else:
            logs.append(log)
    if not logs:
        raise MissionAbort("every trial aborted; nothing to aggregate")
    budget = float(cfg.mission.budget)
    times = np.arange(0.0, budget + bin_width / 2, bin_width)
    stacked = np.stack([_resample_locf(log.samples, times) for log in logs])
    return TrialStats(times=times,
                      rse_mean=stacked[:, 0, :].mean(axis=0),
                      rse_std=stacked[:, 0, :].std(axis=0),
                      trace_mean=stacked[:, 1, :].mean(axis=0),
                      trace_std=stacked[:, 1, :].std(axis=0),
                      n_trials=len(logs), aborted_seeds=aborted, logs=logs)
