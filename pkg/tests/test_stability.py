import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epde.quadrature import gauss_jacobi_grid
from epde.stability import (
    BOUNDARY_TOL,
    RegionField,
    RegionSpec,
    StabilityError,
    amplification_matrix,
    region_scan,
    secular_roots,
    spectral_radius,
)
from epde.stepper import bdf_coefficients


def dense_rho(sigma, alpha, k, M, dt):
    return np.abs(np.linalg.eigvals(amplification_matrix(sigma, alpha, k, M, dt))).max()


# -- spectral radius ----------------------------------------------------------------


def test_radius_identity():
    assert spectral_radius(np.eye(5)) == pytest.approx(1.0, rel=1e-12)


def test_radius_diagonal():
    assert spectral_radius(np.diag([0.5, -0.25])) == pytest.approx(0.5, rel=1e-12)


def test_radius_rotation():
    # two eigenvalues of equal modulus
    assert spectral_radius([[0.0, 2.0], [-2.0, 0.0]]) == pytest.approx(2.0, rel=1e-6)


def test_radius_nilpotent():
    assert spectral_radius([[0.0, 1.0], [0.0, 0.0]]) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_radius_random_complex(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    # oracle: roots of the characteristic polynomial
    ref = np.abs(np.roots(np.poly(A))).max()
    assert spectral_radius(A) == pytest.approx(ref, rel=1e-6)


def test_radius_no_overflow():
    A = 1e200 * np.diag([3.0, 1.0])
    assert spectral_radius(A) == pytest.approx(3e200, rel=1e-6)


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[np.inf]])])
def test_radius_rejects(bad):
    with pytest.raises(ValueError):
        spectral_radius(bad)


# -- amplification matrix -----------------------------------------------------------


def test_sigma_zero_k1_diagonal():
    alpha, M, dt = 0.4, 8, 0.01
    g = gauss_jacobi_grid(M, alpha)
    K = amplification_matrix(0.0, alpha, 1, M, dt)
    th = g.nodes
    ref = (1 - th) / ((1 - th) + dt * th)
    np.testing.assert_allclose(K, np.diag(ref), rtol=1e-14, atol=0)
    assert np.all((ref > 0) & (ref < 1))
    assert spectral_radius(K) < 1


def test_sigma_zero_k2_modes():
    alpha, M, dt = 0.5, 6, 0.01
    g = gauss_jacobi_grid(M, alpha)
    sch = bdf_coefficients(2)
    gam = (1 - g.nodes) / (sch.alpha_k * (1 - g.nodes) + dt * g.nodes)
    # per node: z^2 - gam (b0 z + b1) = 0
    mode = max(np.abs(np.roots([1.0, -sch.b[0] * gm, -sch.b[1] * gm])).max() for gm in gam)
    K = amplification_matrix(0.0, alpha, 2, M, dt)
    assert K.shape == (2 * (M + 1), 2 * (M + 1))
    assert spectral_radius(K) == pytest.approx(mode, rel=1e-6)


def test_companion_structure():
    K = amplification_matrix(-1 + 2j, 0.3, 4, 3, 0.02)
    n = 4
    np.testing.assert_array_equal(K[n:, :-n], np.eye(3 * n))
    np.testing.assert_array_equal(K[n:, -n:], 0)


def test_large_positive_sigma_limit():
    alpha, k, M, dt = 0.6, 3, 30, 0.01
    g = gauss_jacobi_grid(M, alpha)
    sch = bdf_coefficients(k)
    a = sch.alpha_k * (1 - g.nodes) + dt * g.nodes
    w = g.weights
    # sigma -> inf: A(sigma)^-1 -> D^-1 - D^-1 1 w^T D^-1 / (w^T D^-1 1)
    Ainv = np.diag(1 / a) - np.outer(1 / a, w / a) / np.sum(w / a)
    n = M + 1
    K = np.zeros((k * n, k * n))
    for j, bj in enumerate(sch.b):
        K[:n, j * n:(j + 1) * n] = Ainv * (bj * (1 - g.nodes))
    K[n:, :-n] = np.eye((k - 1) * n)
    limit = np.abs(np.linalg.eigvals(K)).max()
    radii = [dense_rho(s, alpha, k, M, dt) for s in (1e2, 1e4, 1e6)]
    assert abs(radii[0] - limit) > abs(radii[1] - limit) > abs(radii[2] - limit)
    assert radii[2] == pytest.approx(limit, abs=1e-12)


def test_singular_sigma_reported():
    alpha, k, M, dt = 0.5, 2, 4, 0.01
    g = gauss_jacobi_grid(M, alpha)
    a = bdf_coefficients(k).alpha_k * (1 - g.nodes) + dt * g.nodes
    with pytest.raises(StabilityError):
        amplification_matrix(1.0 / np.sum(g.weights / a), alpha, k, M, dt)


@settings(max_examples=20, deadline=None)
@given(st.floats(-20, 5), st.floats(0.01, 10), st.integers(1, 5), st.floats(0.1, 0.9))
def test_conjugate_symmetry(x, y, k, alpha):
    a = dense_rho(complex(x, y), alpha, k, 10, 0.01)
    b = dense_rho(complex(x, -y), alpha, k, 10, 0.01)
    assert a == pytest.approx(b, abs=1e-8)


# -- secular roots ------------------------------------------------------------------


@pytest.mark.parametrize("sigma", [0.0, -3.0, -1 + 4j, 2 - 1j, 0.3 + 0.2j])
@pytest.mark.parametrize("k", [1, 3, 5])
def test_secular_matches_dense(sigma, k):
    alpha, M, dt = 0.6, 12, 0.01
    z = secular_roots(sigma, alpha, k, M, dt)
    ref = np.linalg.eigvals(amplification_matrix(sigma, alpha, k, M, dt))
    assert z.size == ref.size
    assert np.abs(z).max() == pytest.approx(np.abs(ref).max(), abs=1e-12)


# -- region scan --------------------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValueError):
        RegionSpec(alpha=0.5, nx=1)
    with pytest.raises(ValueError):
        RegionSpec(alpha=1.0)
    with pytest.raises(ValueError):
        RegionSpec(alpha=0.5, x_range=(1.0, -1.0))
    with pytest.raises(ValueError):
        RegionSpec(alpha=0.5, x_range=(0.0, 0.0), nx=3)
    RegionSpec(alpha=0.5, x_range=(0.0, 0.0), nx=1)


def test_single_point_at_origin():
    spec = RegionSpec(alpha=0.5, x_range=(0.0, 0.0), y_range=(0.0, 0.0), nx=1, ny=1)
    field = region_scan(spec)
    assert field.rho.shape == (1, 1)
    assert field.rho[0, 0] < 1
    assert field.stable_count == 1


def test_real_axis_bdf3_stable():
    spec = RegionSpec(alpha=0.6, k=3, x_range=(-10.0, 0.0), y_range=(0.0, 0.0), nx=101, ny=1)
    field = region_scan(spec)
    assert np.all(field.rho < 1)
    assert np.all(field.rho >= 0)


def test_secular_scan_matches_companion():
    spec = RegionSpec(alpha=0.4, k=3, M=5, x_range=(-4.0, 2.0), y_range=(-3.0, 3.0), nx=7, ny=7)
    a = region_scan(spec)
    b = region_scan(spec, method="companion")
    np.testing.assert_allclose(a.rho, b.rho, atol=1e-6)


def test_asymmetric_window():
    spec = RegionSpec(alpha=0.4, k=2, M=8, x_range=(-2.0, 1.0), y_range=(-1.0, 3.0), nx=4, ny=9)
    field = region_scan(spec)
    assert not field.info["mirrored"]
    for i, x in enumerate(field.xs):
        for j, y in enumerate(field.ys):
            assert field.rho[i, j] == pytest.approx(dense_rho(complex(x, y), 0.4, 2, 8, 0.01), abs=1e-10)


def test_stable_region_shrinks_with_alpha():
    counts = []
    for alpha in (0.2, 0.8):
        spec = RegionSpec(alpha=alpha, k=3, nx=41, ny=41, x_range=(-1.0, 1.0), y_range=(-1.0, 1.0))
        counts.append(region_scan(spec).stable_count)
    assert counts[1] < counts[0]


def test_field_rows_and_flags():
    spec = RegionSpec(alpha=0.5, nx=2, ny=3)
    rho = np.array([[0.5, 1.0 + BOUNDARY_TOL / 2, np.nan], [2.0, 0.1, 0.9]])
    field = RegionField(spec, spec.xs, spec.ys, rho)
    rows = list(field.rows())
    assert len(rows) == 6
    # x is the outer index
    assert [r[0] for r in rows] == [-15.0] * 3 + [5.0] * 3
    assert [r[3] for r in rows] == ["stable", "boundary", "undefined", "unstable", "stable", "stable"]
    assert field.stable_count == 3
    assert field.nan_count == 1
