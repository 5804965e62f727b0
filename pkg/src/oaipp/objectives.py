"""Information objectives that score candidate flight paths.

Two interchangeable information measures feed the same path criterion:

* a covariance-trace reduction (how much total map uncertainty a path's
  measurements would remove), and
* an adaptive acquisition sum (upper-confidence-bound mass seen by each view,
  weighted by the detector's altitude performance), which focuses flights on
  likely targets instead of uniform coverage.

Both simulate the measurement sequence on covariance only — no values exist
at planning time, so means stay fixed — and later views account for the
uncertainty earlier views will already have removed. The path score is
(info_weight * gain - collision_weight * collisions) / flight_time.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular

from .fieldmap import FieldMap
from .sensing import (
    CameraModel,
    PerformanceModel,
    SensorNoiseModel,
    detection_noise_variance,
    performance_weight,
    visible_cells,
)
from .trajectory import SpeedLimits, flight_time, measurement_poses, plan_polynomial
from .world import EsdfWorld, path_collision_cost

# Variance floor for simulated fusion, mirroring the detector's floor.
_VAR_FLOOR = 1e-9


@dataclass(frozen=True)
class ObjectiveConfig:
    info_weight: float = 1.0          # reward scale on information gain
    collision_weight: float = 1000.0  # penalty scale on collision samples
    kappa: float = 2.0                # UCB exploration factor
    mode: str = "adaptive"            # "adaptive" or "nonadaptive"
    uav_radius: float = 1.0
    collision_sample_spacing: float = 0.25
    performance: PerformanceModel = dc_field(default_factory=PerformanceModel)
    noise: SensorNoiseModel = dc_field(default_factory=SensorNoiseModel)

    def __post_init__(self):
        if self.mode not in ("adaptive", "nonadaptive"):
            raise ValueError(f"unknown objective mode {self.mode!r}")


class CovarianceSim:
    """Exact Kalman covariance updates without touching the base matrix.

    The simulated posterior is represented as ``base - sum_k U_k U_k^T``;
    each fuse appends one factor, so a handful of simulated measurements
    costs far less than copying and updating the full covariance.
    """

    def __init__(self, base: np.ndarray):
        self._base = base
        self._diag = base.diagonal().copy()
        self._factors: list[np.ndarray] = []

    def trace(self) -> float:
        return float(self._diag.sum())

    def variances(self, idx) -> np.ndarray:
        return np.maximum(self._diag[idx], 0.0)

    def columns(self, idx) -> np.ndarray:
        """Current covariance columns for the given cells, shape (n, m)."""
        V = self._base[:, idx].copy()
        for U in self._factors:
            V -= U @ U[idx, :].T
        return V

    def _downdate_factor(self, idx, noise_variance: float):
        V = self.columns(idx)
        S = V[idx, :] + max(noise_variance, _VAR_FLOOR) * np.eye(idx.size)
        L = cholesky(0.5 * (S + S.T), lower=True, check_finite=False)
        # U U^T = V S^-1 V^T
        return solve_triangular(L, V.T, lower=True, check_finite=False).T

    def fuse(self, idx, noise_variance: float) -> float:
        """Condition on a measurement of the given cells; returns the trace
        reduction it causes."""
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0:
            return 0.0
        U = self._downdate_factor(idx, noise_variance)
        self._diag -= np.einsum("ij,ij->i", U, U)
        self._factors.append(U)
        return float(np.sum(U * U))

    def gain_if_fused(self, idx, noise_variance: float) -> float:
        """Trace reduction a measurement of the given cells would cause,
        without committing it."""
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0:
            return 0.0
        U = self._downdate_factor(idx, noise_variance)
        return float(np.sum(U * U))


class TraceGainSim:
    """Trace-reduction bookkeeping through the squared covariance.

    Conditioning on a measurement of cells I with noise r drops the total
    variance by tr(P_:I S^-1 P_I:) = tr(S^-1 (P^2)_II) with S = P_II + rI.
    Tracking P and P^2 together therefore prices every candidate view with
    solves no larger than the view itself — no tall downdate factor — while
    staying exact. Both blocks are private copies of the inputs. Drop-in for
    CovarianceSim where only variances / gain_if_fused / fuse are used.
    """

    def __init__(self, cov_block: np.ndarray, sq_block: np.ndarray):
        self._P = np.array(cov_block)
        self._G = np.array(sq_block)

    def variances(self, idx) -> np.ndarray:
        return np.maximum(self._P.diagonal()[idx], 0.0)

    def _view_terms(self, idx, noise_variance: float):
        S = self._P[np.ix_(idx, idx)] + max(noise_variance, _VAR_FLOOR) * np.eye(idx.size)
        factor = cho_factor(0.5 * (S + S.T), lower=True, check_finite=False)
        K = self._G[np.ix_(idx, idx)]
        return factor, K

    @staticmethod
    def _trace_gain(factor, K) -> float:
        # tr(S^-1 K) = ||L^-1 C||_F^2 for K = C C^T: one triangular solve
        # instead of two. K is PSD up to roundoff; fall back when the
        # factorization objects.
        L = factor[0]
        try:
            C = cholesky(0.5 * (K + K.T), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            return float(np.trace(cho_solve(factor, K, check_finite=False)))
        Y = solve_triangular(L, C, lower=True, check_finite=False)
        return float(np.sum(Y * Y))

    def gain_if_fused(self, idx, noise_variance: float) -> float:
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0:
            return 0.0
        factor, K = self._view_terms(idx, noise_variance)
        return self._trace_gain(factor, K)

    def fuse(self, idx, noise_variance: float, downdate: bool = True) -> float:
        """Condition on a measurement of the given cells; returns the trace
        reduction. Pass downdate=False after the final query to skip the
        state update nobody will read."""
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0:
            return 0.0
        factor, K = self._view_terms(idx, noise_variance)
        gain = self._trace_gain(factor, K)
        if downdate:
            W = self._P[:, idx]                                  # (u, m)
            X = cho_solve(factor, W.T, check_finite=False)       # S^-1 P_I:
            A = self._G[:, idx]
            AX = A @ X
            self._G -= AX + AX.T - X.T @ (K @ X)
            self._P -= W @ X
            np.copyto(self._P, 0.5 * (self._P + self._P.T))
            np.copyto(self._G, 0.5 * (self._G + self._G.T))
        return gain


def _posterior_after_view(P, G, idx, noise_variance: float):
    """Exact covariance downdate for one measured view.

    Returns (trace_gain, P_next, G_next) where G is an optional running P@P
    square (G_next is None when G is None). Inputs are not modified.
    """
    S = P[np.ix_(idx, idx)] + max(noise_variance, _VAR_FLOOR) * np.eye(idx.size)
    factor = cho_factor(0.5 * (S + S.T), lower=True, check_finite=False)
    W = P[:, idx]
    X = cho_solve(factor, W.T, check_finite=False)
    D = W @ X
    gain = float(np.trace(D))
    P1 = P - D
    P1 = 0.5 * (P1 + P1.T)
    if G is None:
        return gain, P1, None
    K = G[np.ix_(idx, idx)]
    A = G[:, idx]
    AX = A @ X
    G1 = G - AX - AX.T + X.T @ (K @ X)
    G1 = 0.5 * (G1 + G1.T)
    return gain, P1, G1


def _prefix_posterior(field: FieldMap, idx, noise_variance: float,
                      need_square: bool):
    """Posterior after one view of the field, cached on the field object.

    Candidate paths proposed during one replanning round all start at the
    vehicle's current pose, so their first simulated view is shared; caching
    its downdate turns the per-candidate cost into the varying tail only.
    The key captures everything the result depends on (view cells, noise,
    current covariance — the cache is dropped on fusion), so a miss is just
    a recompute, never a wrong answer.
    """
    key = (idx.tobytes(), float(noise_variance), bool(need_square))
    hit = getattr(field, "_view_prefix", None)
    if hit is not None and hit[0] == key:
        return hit[1]
    G0 = field.covariance_squared() if need_square else None
    out = _posterior_after_view(field.covariance, G0, idx, noise_variance)
    field._view_prefix = (key, out)
    return out


def ucb(mean, std, kappa: float):
    """Optimistic cell value: mean plus kappa standard deviations."""
    return np.asarray(mean) + kappa * np.asarray(std)


def acquisition_view(mean: np.ndarray, variances: np.ndarray, kappa: float) -> float:
    """Total optimistic mass over one view's visible cells."""
    std = np.sqrt(np.maximum(variances, 0.0))
    return float(np.sum(ucb(mean, std, kappa)))


def _pose_altitude(pose, world: EsdfWorld) -> float:
    return float(pose[2] - world.bounds_min[2])


def _collect_views(field: FieldMap, world: EsdfWorld, poses,
                   cam: CameraModel, noise: SensorNoiseModel):
    """(cells, noise variance, altitude) per pose, and whether the first
    pose itself produced the first nonempty view (see _prefix_posterior)."""
    views = []
    first_pose_visible = False
    for k, pose in enumerate(np.atleast_2d(poses)):
        idx = visible_cells(field, world, pose, cam)
        if idx.size == 0:
            continue
        if k == 0:
            first_pose_visible = True
        h = _pose_altitude(pose, world)
        views.append((idx, detection_noise_variance(h, noise), h))
    return views, first_pose_visible


def info_gain_variance(field: FieldMap, world: EsdfWorld, poses,
                       cam: CameraModel, noise: SensorNoiseModel) -> float:
    """Trace reduction of the covariance after simulating every view in
    order.

    The per-view gain tr(S^-1 (P^2)_II) and the downdates of P and P^2 only
    read rows/columns at observed cells, so the simulation runs on the union
    block of the views — same numbers as a full-size simulation. The first
    view is resolved through the per-field prefix cache when possible.
    """
    views, first_pose_visible = _collect_views(field, world, poses, cam, noise)
    if not views:
        return 0.0
    gain = 0.0
    if first_pose_visible:
        idx0, var0, _ = views[0]
        g0, P, G = _prefix_posterior(field, idx0, var0, need_square=True)
        gain += g0
        views = views[1:]
        if not views:
            return gain
    else:
        P, G = field.covariance, field.covariance_squared()
    union = np.unique(np.concatenate([idx for idx, _, _ in views]))
    block = np.ix_(union, union)
    sim = TraceGainSim(P[block], G[block])
    for k, (idx, var, _) in enumerate(views):
        local = np.searchsorted(union, idx)
        gain += sim.fuse(local, var, downdate=k + 1 < len(views))
    return gain


def info_gain_adaptive(field: FieldMap, world: EsdfWorld, poses,
                       cam: CameraModel, perf: PerformanceModel,
                       noise: SensorNoiseModel, kappa: float) -> float:
    """Performance-weighted acquisition accumulated along the view sequence.

    Each view is scored on the field state left by the previous views
    (covariance only), then its own measurement is simulated. Only cells some
    view can see are ever queried, so the simulation runs on the principal
    submatrix over their union — identical numbers at a fraction of the cost,
    because simulated updates of cells inside the union never depend on
    covariance entries outside it. The shared first view is resolved through
    the per-field prefix cache.
    """
    views, first_pose_visible = _collect_views(field, world, poses, cam, noise)
    if not views:
        return 0.0

    def view_score(idx, h, variances):
        w = performance_weight(h, perf)
        if w == 0.0:
            return 0.0
        return w * acquisition_view(field.mean[idx], variances, kappa)

    total = 0.0
    if first_pose_visible:
        idx0, var0, h0 = views[0]
        total += view_score(idx0, h0, np.maximum(
            field.covariance.diagonal()[idx0], 0.0))
        views = views[1:]
        if not views:
            return total
        _, P, _ = _prefix_posterior(field, idx0, var0, need_square=False)
    else:
        P = field.covariance
    union = np.unique(np.concatenate([idx for idx, _, _ in views]))
    sim = CovarianceSim(P[np.ix_(union, union)])
    for k, (idx, var, h) in enumerate(views):
        local = np.searchsorted(union, idx)
        total += view_score(idx, h, sim.variances(local))
        if k + 1 < len(views):
            sim.fuse(local, var)
    return total


def objective(waypoints, field: FieldMap, world: EsdfWorld,
              cfg: ObjectiveConfig, cam: CameraModel, lim: SpeedLimits) -> float:
    """Rate-style path score: weighted information gain minus collision
    penalty, per second of flight."""
    traj = plan_polynomial(waypoints, lim)
    poses = measurement_poses(traj, cam.frequency)
    if cfg.mode == "adaptive":
        gain = info_gain_adaptive(field, world, poses, cam, cfg.performance,
                                  cfg.noise, cfg.kappa)
    else:
        gain = info_gain_variance(field, world, poses, cam, cfg.noise)
    collisions = path_collision_cost(world, traj, cfg.collision_sample_spacing,
                                     cfg.uav_radius)
    t = flight_time(traj)
    return (cfg.info_weight * gain - cfg.collision_weight * collisions) / t
