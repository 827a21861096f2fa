import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epde.mittag_leffler import SERIES_RADIUS, MittagLefflerError, exact_solution, ml

# 60-digit series values
E05_M1 = 0.42758357615580700441
E08_M1 = 0.38694857861897685146
E08_T20 = 0.022381088674434903223  # E_0.8(-20^0.8)
E02_T20 = 0.32631565684395661109  # E_0.2(-20^0.2)


def series_oracle(alpha, z):
    """E_alpha(z) in arbitrary precision.

    The power series with the working precision raised to cover the
    largest term, or, for negative z whose largest series term exceeds
    exp(2000), the algebraic asymptotic series (its exponentially small
    remainder is then below exp(-2000)).
    """
    x = abs(z)
    peak = x ** (1.0 / alpha)
    with mpmath.workdps(40):
        a = mpmath.mpf(alpha)
        if z < 0 and peak > 2000:
            X = mpmath.mpf(x)
            return float(sum((-1) ** (n + 1) * X**-n * mpmath.rgamma(1 - a * n) for n in range(1, 80)))
    with mpmath.workdps(int(40 + peak / math.log(10))):
        a, zz = mpmath.mpf(alpha), mpmath.mpf(z)
        total, m = mpmath.mpf(0), 0
        while True:
            t = zz**m * mpmath.rgamma(a * m + 1)
            total += t
            if m > peak + 10 and abs(t) < mpmath.mpf(10) ** -40 * max(1, abs(total)):
                return float(total)
            m += 1


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.8, 1.0])
def test_zero_argument(alpha):
    assert ml(alpha, 0.0) == 1.0


def test_exp_anchor():
    assert ml(1.0, 1.0) == pytest.approx(math.e, abs=1e-15)


def test_half_minus_one():
    assert abs(ml(0.5, -1.0) - E05_M1) <= 1e-15
    # E_{1/2}(z) = exp(z^2) erfc(-z)
    assert abs(ml(0.5, -1.0) - math.exp(1.0) * math.erfc(1.0)) <= 1e-15


def test_reference_values():
    assert abs(ml(0.8, -1.0) - E08_M1) <= 1e-15
    assert abs(ml(0.8, -(20.0**0.8)) - E08_T20) <= 1e-13
    assert abs(ml(0.2, -(20.0**0.2)) - E02_T20) <= 1e-13


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.8])
def test_large_positive(alpha):
    ref = series_oracle(alpha, 5.0)
    assert abs(ml(alpha, 5.0) - ref) <= 1e-13 * ref


def test_exp_agreement():
    for x in np.linspace(-30, 5, 50):
        assert abs(ml(1.0, x) - math.exp(x)) <= 1e-13


@pytest.mark.parametrize("alpha", [0.1, 0.25, 0.5, 0.75, 0.9, 0.99])
@pytest.mark.parametrize("z", [-60.0, -30.0, -13.9, -10.0, -3.0, -0.5, 0.7, 1.5])
def test_against_high_precision(alpha, z):
    ref = series_oracle(alpha, z)
    assert abs(ml(alpha, z) - ref) <= 1e-13 * max(1.0, abs(ref))


@pytest.mark.parametrize("alpha,z", [(0.1, 2.0), (0.1, 5.0), (0.2, 5.0)])
def test_overflow_reported(alpha, z):
    # exp(z^(1/alpha)) / alpha exceeds the double range
    with pytest.raises(MittagLefflerError, match="overflow"):
        ml(alpha, z)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 0.99), st.floats(0.0, 50.0), st.floats(1e-3, 5.0))
def test_monotone_decreasing(alpha, x, dx):
    assert ml(alpha, -(x + dx)) < ml(alpha, -x)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_switch_continuity(alpha):
    for edge in (1.0, SERIES_RADIUS):
        inside = ml(alpha, -edge * (1 - 1e-12))
        outside = ml(alpha, -edge * (1 + 1e-12))
        assert abs(inside - outside) <= 1e-12


@pytest.mark.parametrize("alpha,z", [(0.0, -1.0), (1.5, -1.0), (0.5, -101.0), (0.5, math.nan)])
def test_domain(alpha, z):
    with pytest.raises(MittagLefflerError):
        ml(alpha, z)


def test_exact_solutions():
    assert exact_solution("I", 0.5, t=4.0) == 2.0
    assert abs(exact_solution("II", 0.8, 1.0, 1.0) - E08_M1) <= 1e-15
    assert exact_solution("IV", 0.3, t=1.0) == 1.0
    np.testing.assert_allclose(exact_solution("IV", 0.5, t=np.array([0.0, 4.0])), [0.0, 32.0])


@pytest.mark.parametrize("case", ["III", "V", "VI"])
def test_exact_solution_unavailable(case):
    with pytest.raises(MittagLefflerError, match="closed-form|unknown"):
        exact_solution(case, 0.5)
