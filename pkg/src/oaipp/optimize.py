"""Path search: sampling-based greedy initialisation plus CMA-ES polish.

Planning happens in two stages. A coarse greedy pass picks waypoints one at a
time by sampling candidate viewpoints and keeping the best-scoring reachable
one, simulating each accepted view's effect on map uncertainty so later picks
chase what is still unknown. The resulting waypoint list then seeds a CMA-ES
run over the free waypoints (the first stays pinned to the vehicle), which
polishes positions and altitudes against the exact path objective.

The CMA-ES implementation is the standard weighted-recombination evolution
strategy with cumulative step-size adaptation and rank-one/rank-mu covariance
updates; it is generic and usable on any R^n objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .fieldmap import FieldMap
from .objectives import (
    CovarianceSim,
    ObjectiveConfig,
    TraceGainSim,
    acquisition_view,
    objective,
)
from .sensing import (
    CameraModel,
    detection_noise_variance,
    performance_weight,
    visible_cells,
)
from .trajectory import SpeedLimits, flight_time, plan_polynomial
from .world import EsdfWorld, _collision_mask, _line_of_sight_batch, path_collision_cost

_PENALTY = 1e18


@dataclass
class CmaesOptions:
    sigma0: Optional[float] = None        # None: caller-chosen default
    population: Optional[int] = None      # default 4 + floor(3 ln n)
    max_evaluations: int = 10000
    f_tolerance: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if self.population is not None and self.population < 4:
            raise ValueError("population must be at least 4")


@dataclass
class CmaesState:
    best_x: np.ndarray
    best_f: float
    evaluations: int
    generations: int
    sigma: float
    mean: np.ndarray
    covariance: np.ndarray
    history: list = dc_field(default_factory=list)   # best-ever f per generation


def cmaes_minimize(f: Callable[[np.ndarray], float], x0, opts: CmaesOptions) -> CmaesState:
    """Minimise a black-box function; deterministic for a fixed seed.

    The start point is evaluated first so the result can never be worse than
    the initial guess. Non-finite objective values are replaced by a large
    penalty so the ranking stays defined.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    rng = np.random.default_rng(opts.seed)
    sigma0 = 1.0 if opts.sigma0 is None else float(opts.sigma0)
    lam = opts.population or 4 + int(3 * np.log(n))
    mu = lam // 2
    w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    w /= w.sum()
    mu_eff = 1.0 / np.sum(w * w)

    c_sigma = (mu_eff + 2) / (n + mu_eff + 5)
    d_sigma = 1 + 2 * max(0.0, np.sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma
    c_c = (4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)
    c_1 = 2 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1 - c_1, 2 * (mu_eff - 2 + 1 / mu_eff) / ((n + 2) ** 2 + mu_eff))
    chi_n = np.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

    def safe_f(x) -> float:
        v = float(f(x))
        return v if np.isfinite(v) else _PENALTY

    mean = x0.copy()
    sigma = sigma0
    C = np.eye(n)
    p_sigma = np.zeros(n)
    p_c = np.zeros(n)

    best_f = safe_f(x0)
    best_x = x0.copy()
    evals = 1
    gen = 0
    history = []

    while evals + lam <= opts.max_evaluations:
        eigvals, B = np.linalg.eigh(0.5 * (C + C.T))
        floor = max(eigvals.max(), 1.0) * 1e-20
        eigvals = np.maximum(eigvals, floor)
        C = (B * eigvals) @ B.T
        D = np.sqrt(eigvals)

        z = rng.standard_normal((lam, n))
        y = z @ (B * D).T                  # y_i = B D z_i
        xs = mean + sigma * y
        fs = np.array([safe_f(x) for x in xs])
        evals += lam
        gen += 1

        order = np.argsort(fs, kind="stable")
        if fs[order[0]] < best_f:
            best_f = float(fs[order[0]])
            best_x = xs[order[0]].copy()
        history.append(best_f)

        y_sel = y[order[:mu]]
        y_w = w @ y_sel
        mean = mean + sigma * y_w

        inv_sqrt = (B / D) @ B.T           # C^{-1/2}
        p_sigma = (1 - c_sigma) * p_sigma + np.sqrt(
            c_sigma * (2 - c_sigma) * mu_eff
        ) * (inv_sqrt @ y_w)
        norm_ps = np.linalg.norm(p_sigma)
        h_sig = norm_ps / np.sqrt(1 - (1 - c_sigma) ** (2 * gen)) < (
            1.4 + 2 / (n + 1)
        ) * chi_n
        p_c = (1 - c_c) * p_c + h_sig * np.sqrt(c_c * (2 - c_c) * mu_eff) * y_w

        rank_mu = (y_sel * w[:, None]).T @ y_sel
        delta_h = (1 - h_sig) * c_c * (2 - c_c)
        C = (
            (1 - c_1 - c_mu) * C
            + c_1 * (np.outer(p_c, p_c) + delta_h * C)
            + c_mu * rank_mu
        )
        sigma *= np.exp((c_sigma / d_sigma) * (norm_ps / chi_n - 1))

        if fs.max() - fs.min() < opts.f_tolerance:
            break
        if sigma * np.sqrt(eigvals.max()) < 1e-16:
            break

    eigvals, B = np.linalg.eigh(0.5 * (C + C.T))
    eigvals = np.maximum(eigvals, max(eigvals.max(), 1.0) * 1e-20)
    C = (B * eigvals) @ B.T
    return CmaesState(best_x=best_x, best_f=best_f, evaluations=evals,
                      generations=gen, sigma=sigma, mean=mean, covariance=C,
                      history=history)


@dataclass
class PlannerOptions:
    """Knobs for the sampling/greedy/refinement pipeline."""

    nbv_samples: int = 100
    altitude_range: tuple = (2.0, 26.0)
    waypoints_per_plan: int = 4
    cmaes: CmaesOptions = dc_field(default_factory=lambda: CmaesOptions(max_evaluations=90))


def _pose_gain(mean, sim, geom: FieldMap, world: EsdfWorld,
               pose, cfg: ObjectiveConfig, cam: CameraModel) -> float:
    """Information value of a single view on the simulated field state."""
    idx = visible_cells(geom, world, pose, cam)
    if idx.size == 0:
        return 0.0
    alt = float(pose[2] - world.bounds_min[2])
    if cfg.mode == "adaptive":
        wgt = performance_weight(alt, cfg.performance)
        if wgt == 0.0:
            return 0.0
        return wgt * acquisition_view(mean[idx], sim.variances(idx), cfg.kappa)
    var = detection_noise_variance(alt, cfg.noise)
    return sim.gain_if_fused(idx, var)


def _sample_viewpoints(world: EsdfWorld, altitude_range, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    ground = world.bounds_min[2]
    z_lo = ground + altitude_range[0]
    z_hi = min(world.bounds_max[2], ground + altitude_range[1])
    lo = np.array([world.bounds_min[0], world.bounds_min[1], z_lo])
    hi = np.array([world.bounds_max[0], world.bounds_max[1], max(z_hi, z_lo)])
    return rng.uniform(lo, hi, size=(n, 3))


def _nbv_step(mean, sim, geom: FieldMap, world: EsdfWorld,
              from_pose, cfg: ObjectiveConfig, cam: CameraModel,
              lim: SpeedLimits, planner: PlannerOptions,
              rng: np.random.Generator):
    """One greedy pick: best-scoring reachable viewpoint, or hover when the
    sample set yields nothing reachable (degenerate)."""
    cands = _sample_viewpoints(world, planner.altitude_range,
                               planner.nbv_samples, rng)
    free = ~_collision_mask(world, cands, cfg.uav_radius)
    visible = _line_of_sight_batch(world, np.asarray(from_pose, float), cands)
    cands = cands[free & visible]
    if cands.shape[0] == 0:
        return np.asarray(from_pose, dtype=float).copy(), True

    best_score = -np.inf
    best = None
    for cand in cands:
        traj = plan_polynomial([from_pose, cand], lim)
        coll = path_collision_cost(world, traj, cfg.collision_sample_spacing,
                                   cfg.uav_radius)
        gain = _pose_gain(mean, sim, geom, world, cand, cfg, cam)
        score = (cfg.info_weight * gain - cfg.collision_weight * coll) / flight_time(traj)
        if score > best_score:
            best_score = score
            best = cand
    return best, False


def _fresh_sim(field: FieldMap, cfg: ObjectiveConfig):
    """Covariance-only simulator suited to the objective mode: the adaptive
    score reads variances, the nonadaptive one prices trace reductions."""
    if cfg.mode == "adaptive":
        return CovarianceSim(field.covariance)
    return TraceGainSim(field.covariance, field.covariance_squared())


def next_best_viewpoint(field: FieldMap, world: EsdfWorld, from_pose,
                        cfg: ObjectiveConfig, cam: CameraModel,
                        lim: SpeedLimits, planner: PlannerOptions,
                        rng: np.random.Generator):
    """Best single next viewpoint from sampled candidates; returns
    (pose, degenerate_flag)."""
    sim = _fresh_sim(field, cfg)
    return _nbv_step(field.mean, sim, field, world, from_pose, cfg, cam, lim,
                     planner, rng)


def coarse_greedy_search(field: FieldMap, world: EsdfWorld, start_pose,
                         cfg: ObjectiveConfig, cam: CameraModel,
                         lim: SpeedLimits, planner: PlannerOptions,
                         rng: np.random.Generator) -> np.ndarray:
    """Greedy waypoint initialisation.

    Dropping a simulated measurement after each accepted viewpoint makes the
    next pick look elsewhere; the authoritative field is never modified.
    """
    start = np.asarray(start_pose, dtype=float)
    sim = _fresh_sim(field, cfg)
    noise = cfg.noise

    def simulate_view(pose):
        idx = visible_cells(field, world, pose, cam)
        if idx.size:
            alt = float(pose[2] - world.bounds_min[2])
            sim.fuse(idx, detection_noise_variance(alt, noise))

    simulate_view(start)   # the path's first tick measures the start pose
    wps = [start]
    while len(wps) < planner.waypoints_per_plan:
        cand, _ = _nbv_step(field.mean, sim, field, world, wps[-1], cfg, cam,
                            lim, planner, rng)
        wps.append(cand)
        simulate_view(cand)
    return np.asarray(wps)


def refine_path(waypoints, field: FieldMap, world: EsdfWorld,
                cfg: ObjectiveConfig, cam: CameraModel, lim: SpeedLimits,
                planner: PlannerOptions, seed: int = 0):
    """CMA-ES polish of every waypoint but the first.

    Decision variables are clamped into the flight volume (altitude kept
    within the planner's range) before evaluation, so every candidate path is
    well-formed. Returns (waypoints, CmaesState); the result is never worse
    than the input because the seed path is evaluated first.
    """
    wps = np.atleast_2d(np.asarray(waypoints, dtype=float))
    if wps.shape[0] < 2:
        raise ValueError("refine_path needs at least two waypoints")
    fixed = wps[0]
    ground = world.bounds_min[2]
    z_lo = ground + planner.altitude_range[0]
    z_hi = min(world.bounds_max[2], ground + planner.altitude_range[1])
    lo = np.array([world.bounds_min[0], world.bounds_min[1], z_lo])
    hi = np.array([world.bounds_max[0], world.bounds_max[1], max(z_hi, z_lo)])

    def decode(x):
        pts = np.clip(x.reshape(-1, 3), lo, hi)
        return np.vstack([fixed[None, :], pts])

    def cost(x):
        return -objective(decode(x), field, world, cfg, cam, lim)

    sigma0 = planner.cmaes.sigma0
    if sigma0 is None:
        sigma0 = 0.1 * float(np.min(world.bounds_max - world.bounds_min))
    opts = CmaesOptions(
        sigma0=sigma0,
        population=planner.cmaes.population,
        max_evaluations=planner.cmaes.max_evaluations,
        f_tolerance=planner.cmaes.f_tolerance,
        seed=seed,
    )
    state = cmaes_minimize(cost, wps[1:].ravel(), opts)
    return decode(state.best_x), state
