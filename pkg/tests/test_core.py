import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from epde.core import (
    FdeProblem,
    Linear,
    Nonlinear,
    ProblemError,
    StabilityWarning,
    gamma_product,
    theta_coefficients,
    validate_problem,
)

thetas = st.floats(1e-6, 1 - 1e-6)
alphas = st.floats(0.01, 0.99)


def test_theta_half():
    tc = theta_coefficients(0.5, 0.3)
    assert tc.c0 == 2.0
    assert tc.c1 == 1.0


def test_weight_at_half_half():
    tc = theta_coefficients(0.5, 0.5)
    assert tc.w_alpha == pytest.approx(2 / math.pi, rel=1e-15)
    assert tc.w_alpha0 == pytest.approx(1 / math.pi, rel=1e-15)
    assert tc.w_alpha1 == pytest.approx(1 / math.pi, rel=1e-15)


def test_gamma_product_matches_gammas():
    for a in (0.01, 0.3, 0.5, 0.99):
        assert gamma_product(a) == pytest.approx(math.gamma(a) * math.gamma(1 - a), rel=1e-13)


@pytest.mark.parametrize("theta", [0.0, 1.0, -0.1, 1.5])
def test_theta_outside_interval(theta):
    with pytest.raises(ValueError):
        theta_coefficients(theta, 0.5)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 2.0])
def test_alpha_outside_interval(alpha):
    with pytest.raises(ValueError):
        theta_coefficients(0.5, alpha)


def test_array_input():
    th = np.array([0.1, 0.5, 0.9])
    tc = theta_coefficients(th, 0.4)
    assert tc.c0.shape == (3,)
    assert np.all(tc.w_alpha > 0)


@given(thetas, alphas)
def test_weight_split(theta, alpha):
    tc = theta_coefficients(theta, alpha)
    assert tc.w_alpha > 0
    assert tc.w_alpha0 + tc.w_alpha1 == pytest.approx(tc.w_alpha, rel=1e-14)


@given(thetas, alphas)
def test_c0_inverse(theta, alpha):
    tc = theta_coefficients(theta, alpha)
    assert (1 - theta) * tc.c0 == pytest.approx(1.0, rel=1e-14)
    assert tc.c1 == theta * tc.c0


def test_validate_case_two():
    p = validate_problem({"alpha": 0.5, "phi0": 1.0, "T": 1.0, "lam": 1.0})
    assert isinstance(p, FdeProblem)
    assert p.is_linear
    assert p.F(0.3, 2.0) == -2.0


def test_validate_nonlinear():
    p = validate_problem({"alpha": 0.5, "phi0": 1.0, "horizon": 2.0, "F": lambda t, y: -y**3})
    assert not p.is_linear
    assert p.F(0.0, 2.0) == -8.0


def test_validate_alpha_endpoint():
    with pytest.raises(ProblemError) as exc:
        validate_problem({"alpha": 1.0, "phi0": 1.0, "T": 1.0, "lam": 1.0})
    assert [f for f, _ in exc.value.issues] == ["alpha"]


def test_validate_negative_horizon():
    with pytest.raises(ProblemError) as exc:
        validate_problem({"alpha": 0.3, "phi0": 1.0, "T": -1.0, "lam": 1.0})
    assert [f for f, _ in exc.value.issues] == ["horizon"]


def test_validate_reports_every_field():
    with pytest.raises(ProblemError) as exc:
        validate_problem({"alpha": 1.5, "T": 0.0})
    fields = {f for f, _ in exc.value.issues}
    assert fields == {"alpha", "phi0", "horizon", "rhs"}


def test_negative_lambda_flagged():
    with pytest.warns(StabilityWarning):
        p = validate_problem({"alpha": 0.5, "phi0": 1.0, "T": 1.0, "lam": -1.0})
    assert p.rhs.lam == -1.0


def test_direct_construction_checks():
    with pytest.raises(ProblemError):
        FdeProblem(alpha=0.0, phi0=1.0, horizon=1.0, rhs=Linear(1.0))
    p = FdeProblem(alpha=0.5, phi0=1.0, horizon=1.0, rhs=Nonlinear(lambda t, y: 0.0))
    assert p.F(0.0, 1.0) == 0.0
