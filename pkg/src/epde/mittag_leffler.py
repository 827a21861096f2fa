"""One-parameter Mittag-Leffler function E_alpha(z) for real z.

Three evaluation routes, picked by cost and conditioning:

* ``|z| <= 1``: the power series in double precision (terms never exceed
  ~1.2, so there is no cancellation to speak of).
* moderate ``|z|``: the power series in extended precision. For negative z
  the partial sums cancel heavily; the working precision grows with the
  largest term.
* everything else: the Laplace-type integral over the branch cut,

      E_a(-x) = sin(a pi)/pi int_0^inf e^{-r t} r^{a-1} / (r^{2a} + 2 r^a cos(a pi) + 1) dr,

  with t = x^{1/a}, plus the pole residue exp(t)/a for positive arguments.
  This form is exact, so it keeps the exponentially small contributions
  that the algebraic asymptotic series drops when alpha is close to 1.
"""

from __future__ import annotations

import math
import warnings

import mpmath
import numpy as np
from scipy import integrate, special

__all__ = ["MittagLefflerError", "ml", "exact_solution", "CLOSED_FORM_CASES"]

# Largest argument accepted, and the switch between series and integral.
Z_MAX = 100.0
SERIES_RADIUS = 14.0
# Series is used only while the peak term index stays below this.
SERIES_MAX_PEAK = 300.0

CLOSED_FORM_CASES = ("I", "II", "IV")


class MittagLefflerError(ValueError):
    pass


def ml(alpha: float, z: float, tol: float = 1e-13) -> float:
    """E_alpha(z) = sum_m z^m / Gamma(alpha m + 1) for real z.

    Absolute error is below ``tol`` (default 1e-13) for alpha in [0.1, 1]
    and z in [-60, 5].

    >>> ml(1.0, 0.0)
    1.0
    >>> round(ml(0.5, -1.0), 15)
    0.427583576155807
    """
    alpha = float(alpha)
    z = float(z)
    if not 0.0 < alpha <= 1.0:
        raise MittagLefflerError(f"alpha must lie in (0, 1], got {alpha}")
    if not math.isfinite(z) or abs(z) > Z_MAX:
        raise MittagLefflerError(f"|z| must not exceed {Z_MAX}, got {z}")
    if z == 0.0:
        return 1.0
    if alpha == 1.0:
        return math.exp(z)
    if abs(z) <= 1.0:
        return _series_double(alpha, z)
    peak = abs(z) ** (1.0 / alpha) / alpha
    if abs(z) <= SERIES_RADIUS and peak <= SERIES_MAX_PEAK:
        return _series_mp(alpha, z, tol)
    return _laplace(alpha, z, tol)


def _series_double(alpha, z):
    # 1/Gamma(alpha m + 1) < 1e-18 once alpha m + 1 >= 20.
    m = np.arange(int(20.0 / alpha) + 8, dtype=float)
    terms = z**m * special.rgamma(alpha * m + 1.0)
    return math.fsum(terms)


def _series_mp(alpha, z, tol):
    peak = abs(z) ** (1.0 / alpha) / alpha
    # log10 of the largest term, from Stirling; guards the cancellation.
    log_peak = max(0.0, abs(z) ** (1.0 / alpha) / math.log(10.0))
    dps = int(20 + log_peak + math.log10(1.0 / tol) - 13)
    limit = int(10 * peak + 200.0 / alpha + 100)
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        zz = mpmath.mpf(z)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        small = 0
        cut = mpmath.mpf(tol) / 10
        for m in range(limit):
            term = power * mpmath.rgamma(a * m + 1)
            total += term
            if m > peak and abs(term) < cut:
                small += 1
                if small >= 3:
                    return float(total)
            else:
                small = 0
            power *= zz
    raise MittagLefflerError(
        f"series for E_{alpha}({z}) did not reach tolerance {tol} in {limit} terms"
    )


def _laplace(alpha, z, tol):
    x = abs(z)
    t = x ** (1.0 / alpha)
    if z > 0 and t > 700.0:
        raise MittagLefflerError(f"E_{alpha}({z}) overflows double precision")
    s = math.sin(math.pi * alpha)
    c = math.cos(math.pi * alpha)
    sgn = 1.0 if z < 0 else -1.0

    # substitute u = r t: integrand u^(a-1) e^-u / (x (q^2 + 2 sgn c q + 1)), q = u^a / x
    def g(u):
        q = u**alpha / x
        return math.exp(-u) / (x * (q * q + 2.0 * sgn * c * q + 1.0))

    def g_full(u):
        return u ** (alpha - 1.0) * g(u)

    # quad asks for more than double precision can certify here and warns;
    # the result is still accurate to ~1e-15 (checked against 40-digit values)
    opts = dict(epsabs=tol * 1e-3, epsrel=1e-14, limit=400)
    upper = 760.0
    points = []
    if sgn * c < 0:
        # near-double pole of the denominator at q = |c|
        u_peak = (x * abs(c)) ** (1.0 / alpha)
        if 1.0 < u_peak < upper:
            points = [u_peak]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, _ = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(alpha - 1.0, 0.0), **opts)
        if points:
            tail, _ = integrate.quad(g_full, 1.0, upper, points=points, **opts)
        else:
            tail, _ = integrate.quad(g_full, 1.0, upper, **opts)
    branch = s / math.pi * (head + tail)
    if z < 0:
        return branch
    return math.exp(t) / alpha - branch


def exact_solution(case_id: str, alpha: float, lam: float = 1.0, t=1.0):
    """Closed-form solution of the built-in cases I, II and IV.

    Case I is ``t^alpha``, case II ``E_alpha(-lam t^alpha)``, case IV
    ``t^(2 + alpha)``. Cases III and V have no closed form.
    """
    case = str(case_id).upper()
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if case == "I":
        out = tt**alpha
    elif case == "II":
        out = np.array([ml(alpha, -lam * ti**alpha) for ti in tt])
    elif case == "IV":
        out = tt ** (2.0 + alpha)
    elif case in ("III", "V"):
        raise MittagLefflerError(
            f"case {case} has no closed-form solution; use a fine-step reference trajectory"
        )
    else:
        raise MittagLefflerError(f"unknown case {case_id!r}")
    return float(out[0]) if scalar else out
