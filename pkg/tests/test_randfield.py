import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from richards_homog.grid import build_mesh
from richards_homog.randfield import (CovarianceSpec, PermeabilityField, build_kle_basis,
                                      energy_fractions, field_from_coefficients, interpolate_to,
                                      sample_field, to_feature_vector)


@pytest.fixture(scope="module")
def full_basis():
    return build_kle_basis(CovarianceSpec(), 32, 1.0)


def test_covariance_diagonal():
    spec = CovarianceSpec()
    pts = np.random.default_rng(0).random((50, 2))
    R = spec(pts, pts)
    np.testing.assert_allclose(np.diag(R), 2.0)
    np.testing.assert_allclose(R, R.T)
    with pytest.raises(ValueError):
        CovarianceSpec(sigma2=0)


def test_basis_properties(basis):
    lam = basis.eigenvalues
    assert np.all(np.diff(lam) <= 0) and lam[-1] >= 0
    gram = (basis.eigenfunctions * basis.weights[:, None]).T @ basis.eigenfunctions
    np.testing.assert_allclose(gram, np.eye(basis.n_modes), atol=1e-8)
    assert basis.energy_fraction >= 0.95
    assert basis.n_modes == 448


def test_trace_equals_variance(basis):
    assert abs(basis.all_eigenvalues.sum() - 2.0) < 1e-8


def test_energy_monotone(basis):
    e = energy_fractions(basis)
    assert np.all(np.diff(e) >= -1e-15)
    assert e[-1] == pytest.approx(1.0)


def test_long_correlation_single_mode():
    b = build_kle_basis(CovarianceSpec(2.0, 1e6, 1e6), 32, 0.95)
    assert b.eigenvalues[0] == pytest.approx(2.0, rel=1e-5)
    assert energy_fractions(b)[0] >= 0.999


def test_exact_reconstruction_all_modes(full_basis):
    R = full_basis.spec(full_basis.sample_points, full_basis.sample_points)
    rec = (full_basis.eigenfunctions * full_basis.eigenvalues) @ full_basis.eigenfunctions.T
    np.testing.assert_allclose(rec, R, atol=1e-10)


def _empirical_cov(basis, n=10_000, seed=0):
    U = basis.upsilon(np.random.default_rng(seed).standard_normal((n, basis.n_modes)))
    return U.T @ U / n


def test_sampled_covariance_statistics(full_basis):
    n = 10_000
    R = full_basis.spec(full_basis.sample_points, full_basis.sample_points)
    C = _empirical_cov(full_basis, n)
    # per-entry standard error of a Gaussian sample covariance
    sd = np.sqrt((np.outer(np.diag(R), np.diag(R)) + R**2) / n)
    assert np.max(np.abs(C - R) / sd) < 6.0
    assert np.mean(np.abs(C - R) > 3 * 2.0 / np.sqrt(n)) < 0.02


@pytest.mark.xfail(strict=True, reason="max over 1e6 entries of a ~2 standard-error band; see notes")
def test_sampled_covariance_literal_band(full_basis):
    n = 10_000
    R = full_basis.spec(full_basis.sample_points, full_basis.sample_points)
    assert np.max(np.abs(_empirical_cov(full_basis, n) - R)) <= 3 * 2.0 / np.sqrt(n)


def test_interpolation_at_sample_points(basis):
    nodal = np.random.default_rng(1).standard_normal(32 * 32)
    np.testing.assert_array_equal(interpolate_to(basis, nodal, build_mesh(32).cell_centers()), nodal)


def test_interpolation_reproduces_bilinear(basis):
    p = basis.sample_points
    nodal = 1 + 2 * p[:, 0] - p[:, 1] + 0.5 * p[:, 0] * p[:, 1]
    q = np.random.default_rng(2).uniform(1 / 64, 1 - 1 / 64, (200, 2))
    expect = 1 + 2 * q[:, 0] - q[:, 1] + 0.5 * q[:, 0] * q[:, 1]
    np.testing.assert_allclose(interpolate_to(basis, nodal, q), expect, atol=1e-12)


def test_zero_coefficients_give_geometric_mean(basis, fine):
    f = field_from_coefficients(basis, np.zeros(basis.n_modes), (1000, 4200), fine)
    np.testing.assert_allclose(f.fine_values, np.sqrt(1000 * 4200))
    assert f.fine_values[0] == pytest.approx(2049.39, abs=0.01)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_range_and_positivity(seed):
    b = _shared_basis()
    f = sample_field(b, seed, (1000.0, 4200.0), _shared_fine())
    lo, hi = f.value_range
    assert abs(lo - 1000) <= 1e-9 and abs(hi - 4200) <= 1e-9
    assert np.all(f.fine_values > 0)
    assert f.feature_vector.shape == (256,)


_cache = {}


def _shared_basis():
    if "b" not in _cache:
        _cache["b"] = build_kle_basis(CovarianceSpec(), 32, 0.95)
    return _cache["b"]


def _shared_fine():
    if "m" not in _cache:
        _cache["m"] = build_mesh(128)
    return _cache["m"]


def test_same_seed_bit_identical(basis, fine):
    a = sample_field(basis, 7, fine=fine)
    b = sample_field(basis, 7, fine=fine)
    assert a.fine_values.tobytes() == b.fine_values.tobytes()
    assert sample_field(basis, 8, fine=fine).fine_values.tobytes() != a.fine_values.tobytes()


def test_invalid_range(basis, fine):
    with pytest.raises(ValueError):
        field_from_coefficients(basis, np.zeros(basis.n_modes), (0, 10), fine)


def test_features_constant_and_halves():
    vals = np.full(128 * 128, 3.5)
    assert np.all(to_feature_vector(PermeabilityField(vals, 128, np.zeros(1))) == 3.5)
    x = build_mesh(128).cell_centers()[:, 0]
    half = np.where(x < 0.5, 1000.0, 4200.0)
    feat = to_feature_vector(PermeabilityField(half, 128, np.zeros(1))).reshape(16, 16)
    assert np.all(feat[:, :8] == 1000.0) and np.all(feat[:, 8:] == 4200.0)


def test_feature_mean(field42):
    assert abs(field42.feature_vector.mean() - field42.fine_values.mean()) < 1e-12
    with pytest.raises(ValueError):
        to_feature_vector(PermeabilityField(np.ones(100), 10, np.zeros(1)))
