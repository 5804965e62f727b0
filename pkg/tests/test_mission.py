"""Mission loop, baseline planners, and trial aggregation."""

import numpy as np
import pytest
from scipy.stats import chisquare

from oaipp.config import BoxConfig, Config
from oaipp.fieldmap import make_ground_truth
from oaipp.mission import (
    MissionLog,
    lawnmower_plan,
    random_waypoint_plan,
    run_mission,
    run_trials,
    _init_field,
)
from oaipp.scenarios import build_world, scenario_config
from oaipp.trajectory import flight_time
from oaipp.world import hard_collision_cost, path_collision_cost


def _benchmark(planner, seed=0, budget=None, noise=None):
    cfg = scenario_config("benchmark")
    cfg.mission.planner = planner
    cfg.mission.seed = seed
    if budget is not None:
        cfg.mission.budget = budget
    if noise is not None:
        cfg.sensing.noise_scale = noise
    return cfg


def test_budget_too_short_leaves_only_initial_sample():
    cfg = _benchmark("random", budget=0.5)
    log = run_mission(cfg)
    assert len(log.samples) == 1
    assert log.samples[0][0] == 0.0
    assert not log.aborted


def test_noiseless_coverage_drives_error_down():
    cfg = Config()
    cfg.mission.planner = "lawnmower"
    cfg.sensing.noise_scale = 1e-12
    cfg.sensing.false_positive_prob = 0.0
    log = run_mission(cfg)
    initial = log.samples[0][1]
    final = log.samples[-1][1]
    assert final < initial
    # a full sweep with a near-perfect sensor leaves at most the odd cell
    # carrying its prior offset
    assert final < 0.75 * np.sqrt(40 * 40)* 0.1


def test_same_seed_reproduces_mission_exactly():
    for planner, budget in (("random", 150.0), ("oaipp-adaptive", 40.0)):
        a = run_mission(_benchmark(planner, seed=5, budget=budget))
        b = run_mission(_benchmark(planner, seed=5, budget=budget))
        assert a.samples == b.samples
        assert np.array_equal(a.final_mean, b.final_mean)
        assert a.detections_count == b.detections_count


def test_different_seed_changes_random_mission():
    a = run_mission(_benchmark("random", seed=0))
    b = run_mission(_benchmark("random", seed=1))
    assert a.samples != b.samples


def test_trace_never_increases_within_mission():
    for planner in ("random", "lawnmower"):
        log = run_mission(_benchmark(planner, budget=90.0))
        traces = [s[2] for s in log.samples]
        assert all(b <= a + 1e-9 for a, b in zip(traces, traces[1:]))


def test_budget_and_sample_times_respected():
    for planner in ("random", "lawnmower"):
        for seed in range(3):
            cfg = _benchmark(planner, seed=seed)
            log = run_mission(cfg)
            assert log.elapsed <= cfg.mission.budget + 1e-9
            assert all(s[0] <= cfg.mission.budget + 1e-9 for s in log.samples)


def test_executed_paths_are_collision_free():
    cfg = _benchmark("oaipp-adaptive", budget=40.0)
    log = run_mission(cfg)
    assert log.collision_count == 0
    assert not log.aborted


# --- lawnmower -------------------------------------------------------------

def _sweep_leg_levels(waypoints, z, xspan_min):
    """y-levels of constant-y legs that sweep at least xspan_min in x."""
    pts = np.asarray(waypoints)
    levels = []
    i = 0
    while i < len(pts) - 1:
        j = i
        while (j + 1 < len(pts)
               and abs(pts[j + 1][1] - pts[i][1]) < 1e-6
               and abs(pts[j + 1][2] - z) < 1e-6):
            j += 1
        span = abs(pts[j][0] - pts[i][0])
        if span >= xspan_min:
            levels.append(round(float(pts[i][1]), 3))
        i = max(j, i + 1)
    return sorted(set(levels))


def test_lawnmower_has_three_tracks_at_cruise_altitude():
    cfg = scenario_config("benchmark")
    cfg.world.boxes = []          # geometry check without detours
    world = build_world(cfg, np.random.default_rng(0))
    traj = lawnmower_plan(cfg, world, cfg.mission.start_pose, cfg.mission.budget)
    assert traj is not None
    z = cfg.sensing.optimal_altitude
    levels = _sweep_leg_levels(traj.waypoints, z, xspan_min=10.0)
    assert len(levels) == 3
    # tracks abut the footprint to the field edges
    assert levels[0] == pytest.approx(5.774, abs=0.01)
    assert levels[-1] == pytest.approx(30.0 - 5.774, abs=0.01)


def test_lawnmower_detours_around_tall_obstacle():
    cfg = scenario_config("benchmark")   # obstacle crosses the 10 m plane
    world = build_world(cfg, np.random.default_rng(0))
    traj = lawnmower_plan(cfg, world, cfg.mission.start_pose, cfg.mission.budget)
    assert traj is not None
    assert path_collision_cost(world, traj, 0.25, cfg.mission.uav_radius) == 0
    assert flight_time(traj) <= cfg.mission.budget


def test_lawnmower_single_track_when_footprint_spans_field():
    cfg = scenario_config("benchmark")
    cfg.world.boxes = []
    cfg.field.extent = [30.0, 8.0]      # narrower than the 11.5 m footprint
    world = build_world(cfg, np.random.default_rng(0))
    traj = lawnmower_plan(cfg, world, [2.25, 2.25, 10.0], cfg.mission.budget)
    assert traj is not None
    levels = _sweep_leg_levels(traj.waypoints, 10.0, xspan_min=10.0)
    assert levels == [4.0]


def test_lawnmower_respects_budget_exactly():
    cfg = scenario_config("benchmark")
    world = build_world(cfg, np.random.default_rng(0))
    for budget in (60.0, 100.0, 150.0):
        traj = lawnmower_plan(cfg, world, cfg.mission.start_pose, budget)
        assert traj is not None
        assert flight_time(traj) <= budget


# --- random baseline -------------------------------------------------------

def test_random_destinations_avoid_obstacles():
    cfg = scenario_config("narrow")
    world = build_world(cfg, np.random.default_rng(0))
    rng = np.random.default_rng(11)
    current = np.asarray(cfg.mission.start_pose, dtype=float)
    for _ in range(100):
        traj = random_waypoint_plan(current, cfg, world, rng)
        dest = np.asarray(traj.waypoints[-1], dtype=float)
        assert hard_collision_cost(world, dest, cfg.mission.uav_radius) == 0
        current = dest


def test_random_destination_distribution_uniform():
    cfg = scenario_config("benchmark")
    cfg.world.boxes = []
    world = build_world(cfg, np.random.default_rng(0))
    rng = np.random.default_rng(123)
    current = np.array([15.0, 15.0, 14.0])
    z_lo = cfg.optimizer.altitude_min
    z_hi = min(float(world.bounds_max[2]), cfg.sensing.saturation_altitude)
    mids = np.array([15.0, 15.0, (z_lo + z_hi) / 2.0])
    counts = np.zeros(8)
    n = 10000
    for _ in range(n):
        dest = np.asarray(random_waypoint_plan(current, cfg, world, rng)
                          .waypoints[-1])
        octant = int(dest[0] > mids[0]) * 4 + int(dest[1] > mids[1]) * 2 \
            + int(dest[2] > mids[2])
        counts[octant] += 1
    _, p = chisquare(counts)
    assert p > 0.01


def test_random_hovers_when_no_destination_is_free():
    cfg = Config()
    cfg.world.bounds_min = [0.0, 0.0, 0.0]
    cfg.world.bounds_max = [10.0, 10.0, 8.0]
    cfg.field.extent = [10.0, 10.0]
    # ceiling blocks the entire samplable altitude band
    cfg.world.boxes = [BoxConfig(min=[0.0, 0.0, 4.0], max=[10.0, 10.0, 8.0])]
    cfg.optimizer.altitude_min = 5.0
    cfg.optimizer.altitude_max = 7.0
    cfg.sensing.saturation_altitude = 8.0
    world = build_world(cfg, np.random.default_rng(0))
    current = np.array([5.0, 5.0, 2.0])
    traj = random_waypoint_plan(current, cfg, world, np.random.default_rng(3))
    assert np.allclose(np.asarray(traj.waypoints[-1]), current)
    assert flight_time(traj) <= 0.05   # zero-length segments get epsilon time


# --- trial aggregation -----------------------------------------------------

def test_run_trials_single_trial_matches_log():
    cfg = _benchmark("random", budget=60.0)
    stats = run_trials(cfg, 1, bin_width=5.0)
    assert stats.n_trials == 1
    assert np.all(stats.rse_std == 0.0)
    assert np.all(stats.trace_std == 0.0)
    log = run_mission(cfg)
    # last bin equals the final recorded sample under carry-forward
    assert stats.rse_mean[-1] == pytest.approx(log.samples[-1][1])
    assert stats.times[0] == 0.0
    assert stats.times[-1] == pytest.approx(60.0)


def test_run_trials_seeds_are_consecutive():
    cfg = _benchmark("random", budget=40.0)
    stats = run_trials(cfg, 3)
    assert stats.n_trials == 3
    logs = [run_mission(_benchmark("random", seed=s, budget=40.0))
            for s in range(3)]
    finals = [lg.samples[-1][1] for lg in logs]
    assert stats.rse_mean[-1] == pytest.approx(np.mean(finals))


def test_run_trials_excludes_aborted_and_reports_them(monkeypatch):
    def fake_run(cfg):
        log = MissionLog()
        log.samples = [(0.0, 4.0, 100.0), (10.0, 3.0, 90.0)]
        if cfg.mission.seed == 1:
            log.aborted = True
            log.abort_reason = "forced"
        return log

    monkeypatch.setattr("oaipp.mission.run_mission", fake_run)
    cfg = _benchmark("random", budget=20.0)
    stats = run_trials(cfg, 3)
    assert stats.n_trials == 2
    assert stats.aborted_seeds == [1]
    assert np.all(stats.rse_std == 0.0)   # identical surviving logs


def test_run_trials_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_trials(_benchmark("random"), 0)


def test_false_positive_injection_is_recorded_in_field():
    cfg = _benchmark("random", seed=2, budget=90.0, noise=1e-12)
    cfg.sensing.false_positive_prob = 1.0
    log = run_mission(cfg)
    f = _init_field(cfg)
    truth = make_ground_truth(f, [tuple(t) for t in cfg.mission.targets])
    err = np.abs(log.final_mean - truth.values)
    # a +1.0 corruption of one near-noiseless reading leaves a visible bump
    assert err.max() > 0.05
