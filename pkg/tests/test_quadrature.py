import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epde.quadrature import ThetaGrid, gauss_jacobi_grid, jacobi_recurrence, reconstruct


def moment(n, alpha):
    """int_0^1 theta^n w_alpha dtheta = B(n+1-a, a) / (Gamma(a) Gamma(1-a)), in 40 digits."""
    with mpmath.workdps(40):
        a = mpmath.mpf(alpha)
        return mpmath.beta(n + 1 - a, a) / (mpmath.gamma(a) * mpmath.gamma(1 - a))


def test_recurrence_legendre_midpoint():
    d, e = jacobi_recurrence(1, 0.0, 0.0)
    assert d[0] == 0.0
    assert e.size == 0


def test_recurrence_first_coefficient():
    for alpha in (0.2, 0.5, 0.8):
        d, _ = jacobi_recurrence(1, alpha - 1, -alpha)
        assert d[0] == pytest.approx(1 - 2 * alpha, abs=1e-15)
        # mu1/mu0 on [-1, 1] from the beta moments on [0, 1], x = 2 theta - 1
        ratio = 2 * moment(1, alpha) / moment(0, alpha) - 1
        assert d[0] == pytest.approx(float(ratio), abs=1e-14)


def test_recurrence_legendre_two_point():
    _, e = jacobi_recurrence(2, 0.0, 0.0)
    assert e[0] == pytest.approx(1 / math.sqrt(3), rel=1e-15)


@pytest.mark.parametrize("a,b", [(-1.0, 0.0), (0.0, -1.5)])
def test_recurrence_domain(a, b):
    with pytest.raises(ValueError):
        jacobi_recurrence(3, a, b)


def test_single_node():
    for alpha in (0.5, 0.2):
        g = gauss_jacobi_grid(0, alpha)
        assert g.nodes[0] == pytest.approx(1 - alpha, abs=1e-15)
        assert g.weights[0] == 1.0


def test_moments_m10():
    g = gauss_jacobi_grid(10, 0.8)
    assert abs(g.weights.sum() - 1) <= 1e-13
    assert abs(g.weights @ g.nodes - 0.2) <= 1e-13


@pytest.mark.parametrize("alpha", [0.1, 0.2, 0.5, 0.8, 0.95])
@pytest.mark.parametrize("M", [0, 1, 4, 10, 30])
def test_polynomial_exactness(alpha, M):
    g = gauss_jacobi_grid(M, alpha)
    for n in range(2 * M + 2):
        exact = float(moment(n, alpha))
        assert abs(g.weights @ g.nodes**n - exact) <= 1e-12, n


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("M", [0, 3, 10, 29])
def test_interlacing(alpha, M):
    a = gauss_jacobi_grid(M, alpha).nodes
    b = gauss_jacobi_grid(M + 1, alpha).nodes
    assert np.all(b[:-1] < a) and np.all(a < b[1:])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 60), st.floats(0.01, 0.99))
def test_grid_invariants(M, alpha):
    g = gauss_jacobi_grid(M, alpha)
    assert g.size == M + 1
    assert np.all(g.nodes > 0) and np.all(g.nodes < 1)
    assert np.all(np.diff(g.nodes) > 0)
    assert np.all(g.weights > 0)
    assert abs(g.weights.sum() - 1) <= 1e-13
    assert abs(g.weights @ g.nodes - (1 - alpha)) <= 1e-13


def test_deterministic():
    a = gauss_jacobi_grid(30, 0.37)
    b = gauss_jacobi_grid(30, 0.37)
    assert a == b
    assert a.nodes.tobytes() == b.nodes.tobytes()


def test_grid_is_read_only():
    g = gauss_jacobi_grid(5, 0.5)
    with pytest.raises(ValueError):
        g.nodes[0] = 0.5


@pytest.mark.parametrize("M,alpha", [(-1, 0.5), (3, 0.0), (3, 1.0)])
def test_grid_domain(M, alpha):
    with pytest.raises(ValueError):
        gauss_jacobi_grid(M, alpha)


def test_reconstruct_constant():
    g = gauss_jacobi_grid(12, 0.3)
    assert reconstruct(np.full(13, 2.5), g) == pytest.approx(2.5, rel=1e-15)


def test_reconstruct_first_moment():
    g = gauss_jacobi_grid(7, 0.3)
    assert reconstruct(g.nodes, g) == pytest.approx(0.7, abs=1e-14)


def test_reconstruct_beta_moment():
    g = gauss_jacobi_grid(5, 0.5)
    exact = float(moment(1, 0.5) - moment(2, 0.5))
    assert reconstruct(g.nodes * (1 - g.nodes), g) == pytest.approx(exact, abs=1e-14)
    # the second moment for a = 1/2 is 3/8
    assert exact == pytest.approx(0.5 - 0.375, abs=1e-15)


def test_reconstruct_length_mismatch():
    g = gauss_jacobi_grid(4, 0.5)
    with pytest.raises(ValueError):
        reconstruct(np.ones(4), g)


def test_reconstruct_batched():
    g = gauss_jacobi_grid(4, 0.5)
    vals = np.vstack([np.ones(5), g.nodes])
    np.testing.assert_allclose(reconstruct(vals, g), [1.0, 0.5], atol=1e-15)


def test_grid_type():
    assert isinstance(gauss_jacobi_grid(2, 0.5), ThetaGrid)
