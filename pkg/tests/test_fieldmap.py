import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from types import SimpleNamespace

from oaipp.fieldmap import (
    FieldMap,
    GpHyperparams,
    covariance_trace,
    fuse_measurement,
    init_field,
    load_grid_csv,
    make_ground_truth,
    matern32,
    rse,
    save_grid_csv,
)

HP = GpHyperparams()


def det(idx, values, var):
    return SimpleNamespace(
        cell_indices=np.asarray(idx, dtype=int),
        values=np.asarray(values, dtype=float),
        noise_variance=var,
    )


def batch_posterior(mu0, P0, measurements):
    """Dense GP/Kalman batch conditioning on all stacked observations."""
    n = mu0.size
    H_rows = []
    z_all = []
    r_all = []
    for idx, z, var in measurements:
        for i, zi in zip(idx, z):
            row = np.zeros(n)
            row[i] = 1.0
            H_rows.append(row)
            z_all.append(zi)
            r_all.append(var)
    H = np.asarray(H_rows)
    z = np.asarray(z_all)
    R = np.diag(r_all)
    S = H @ P0 @ H.T + R
    K = P0 @ H.T @ np.linalg.inv(S)
    mean = mu0 + K @ (z - H @ mu0)
    cov = P0 - K @ H @ P0
    return mean, 0.5 * (cov + cov.T)


def test_matern_at_zero_is_signal_variance():
    assert matern32(0.0, HP) == HP.signal_variance


def test_matern_at_lengthscale():
    assert matern32(3.67, HP) == pytest.approx(0.880, abs=1e-3)


def test_matern_monotone_decreasing():
    d = np.linspace(0, 30, 200)
    v = matern32(d, HP)
    assert np.all(np.diff(v) < 0)


def test_single_cell_prior_variance():
    f = init_field(resolution=0.75, extent=(0.75, 0.75), prior_mean=0.1, hp=HP)
    assert f.n_cells == 1
    assert f.covariance[0, 0] == pytest.approx(0.7976, abs=5e-4)


def test_benchmark_grid_shape_and_prior():
    f = init_field(resolution=0.75, extent=(30.0, 30.0), prior_mean=0.1, hp=HP)
    assert (f.nx, f.ny) == (40, 40)
    assert f.n_cells == 1600
    assert np.all(f.mean == 0.1)
    # conditioning can only lower variance below the raw signal variance
    assert np.all(np.diag(f.covariance) < HP.signal_variance)
    assert np.all(np.diag(f.covariance) > 0)


def test_recursive_fusion_matches_batch_oracle():
    f = init_field(resolution=1.0, extent=(8.0, 8.0), prior_mean=0.1, hp=HP)
    mu0, P0 = f.mean.copy(), f.covariance.copy()
    rng = np.random.default_rng(7)
    measurements = []
    for _ in range(10):
        m = rng.integers(1, 12)
        idx = rng.choice(f.n_cells, size=m, replace=False)
        z = rng.normal(0.2, 0.5, size=m)
        var = float(rng.uniform(0.05, 0.8))
        measurements.append((idx, z, var))
        fuse_measurement(f, det(idx, z, var))
    mean_b, cov_b = batch_posterior(mu0, P0, measurements)
    np.testing.assert_allclose(f.mean, mean_b, atol=1e-6)
    np.testing.assert_allclose(f.covariance, cov_b, atol=1e-6)


def test_fusion_order_invariance():
    a = (np.array([0, 5, 9]), np.array([0.9, 0.2, 0.4]), 0.3)
    b = (np.array([2, 5]), np.array([0.1, 0.8]), 0.5)
    f1 = init_field(1.0, (5.0, 5.0), 0.1, HP)
    fuse_measurement(f1, det(*a))
    fuse_measurement(f1, det(*b))
    f2 = init_field(1.0, (5.0, 5.0), 0.1, HP)
    fuse_measurement(f2, det(*b))
    fuse_measurement(f2, det(*a))
    np.testing.assert_allclose(f1.mean, f2.mean, atol=1e-6)
    np.testing.assert_allclose(f1.covariance, f2.covariance, atol=1e-6)


def test_empty_detection_is_noop():
    f = init_field(1.0, (5.0, 5.0), 0.1, HP)
    mean0 = f.mean.copy()
    cov0 = f.covariance.copy()
    fuse_measurement(f, det([], [], 0.3))
    np.testing.assert_array_equal(f.mean, mean0)
    np.testing.assert_array_equal(f.covariance, cov0)


def test_mismatched_lengths_raise():
    f = init_field(1.0, (5.0, 5.0), 0.1, HP)
    with pytest.raises(ValueError):
        fuse_measurement(f, det([1, 2], [0.5], 0.3))


def test_trace_non_increasing_and_psd():
    f = init_field(1.0, (6.0, 6.0), 0.1, HP)
    rng = np.random.default_rng(11)
    prev = covariance_trace(f)
    for _ in range(40):
        m = rng.integers(1, 8)
        idx = rng.choice(f.n_cells, size=m, replace=False)
        fuse_measurement(f, det(idx, rng.normal(0, 1, m), float(rng.uniform(0.05, 0.5))))
        cur = covariance_trace(f)
        assert cur <= prev + 1e-9
        prev = cur
    assert np.linalg.eigvalsh(f.covariance).min() >= -1e-8


def test_rse_values():
    f = init_field(1.0, (4.0, 4.0), 0.0, HP)
    truth = make_ground_truth(f, [])
    assert rse(f, truth) == 0.0
    f.mean[5] = 0.3
    assert rse(f, truth) == pytest.approx(0.3)
    f.mean[:] = 0.1
    truth2 = make_ground_truth(f, [(1, 1)])
    expected = np.sqrt(15 * 0.1**2 + 0.9**2)
    assert rse(f, truth2) == pytest.approx(expected)


def test_cells_in_rect():
    f = init_field(1.0, (6.0, 6.0), 0.1, HP)
    idx = f.cells_in_rect(0.0, 2.0, 0.0, 2.0)
    centers = f.cell_centers()[idx]
    assert idx.size == 4
    assert np.all(centers <= 2.0)
    assert f.cells_in_rect(10.0, 12.0, 0.0, 2.0).size == 0


def test_grid_csv_roundtrip(tmp_path):
    f = init_field(1.0, (5.0, 4.0), 0.1, HP)
    f.mean[:] = np.linspace(0, 1, f.n_cells)
    p = tmp_path / "mean.csv"
    save_grid_csv(p, f.mean, f.nx, f.ny)
    back = load_grid_csv(p)
    np.testing.assert_array_equal(back, f.mean)
    text = p.read_text()
    assert text.splitlines()[0].startswith("c0,")
    assert "," in text and ";" not in text


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**31 - 1),
    n_meas=st.integers(1, 6),
    size=st.integers(2, 5),
)
def test_recursive_equals_batch_property(seed, n_meas, size):
    f = init_field(1.0, (float(size), float(size)), 0.1, HP)
    mu0, P0 = f.mean.copy(), f.covariance.copy()
    rng = np.random.default_rng(seed)
    measurements = []
    for _ in range(n_meas):
        m = int(rng.integers(1, f.n_cells + 1))
        idx = rng.choice(f.n_cells, size=m, replace=False)
        z = rng.normal(0.0, 1.0, size=m)
        var = float(rng.uniform(0.05, 1.0))
        measurements.append((idx, z, var))
        fuse_measurement(f, det(idx, z, var))
    mean_b, cov_b = batch_posterior(mu0, P0, measurements)
    np.testing.assert_allclose(f.mean, mean_b, atol=1e-6)
    np.testing.assert_allclose(f.covariance, cov_b, atol=1e-6)
