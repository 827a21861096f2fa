"""Direct-convolution solvers used to cross-check the extended-system solver.

Both keep the whole trajectory and evaluate the memory sum in full every
step (O(N) storage, O(N^2) work). They use nothing from the collocation or
BDF code, so an agreement between the two routes is a real check.

* :func:`l1_solve`: the L1 discretization of the Caputo derivative,
  implicit in phi^{n+1}; linear right-hand sides only. Order 2 - alpha.
* :func:`frac_adams_solve`: the fractional Adams predictor-corrector of
  Diethelm, Ford and Freed on the equivalent Volterra equation
  ``phi(t) = phi0 + 1/Gamma(alpha) int_0^t (t-s)^(alpha-1) F(s, phi(s)) ds``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import FdeProblem, Linear
from .stepper import Trajectory

__all__ = ["ConvolutionHistory", "l1_solve", "frac_adams_solve", "power_differences"]


@dataclass
class ConvolutionHistory:
    """Every computed value so far; grows by one entry per step."""

    phi: np.ndarray
    F: np.ndarray
    n: int = 0

    @classmethod
    def allocate(cls, N: int, phi0: float):
        h = cls(np.empty(N + 1), np.empty(N + 1))
        h.phi[0] = phi0
        return h

    def __len__(self):
        return self.n + 1

    @property
    def values(self):
        return self.phi[: self.n + 1]


def power_differences(p: float, count: int) -> np.ndarray:
    """``(m+1)^p - m^p`` for m = 0..count-1, without cancellation for large m."""
    m = np.arange(count, dtype=float)
    out = np.empty(count)
    out[0] = 1.0
    if count > 1:
        mm = m[1:]
        out[1:] = mm**p * np.expm1(p * np.log1p(1.0 / mm))
    return out


def l1_solve(problem: FdeProblem, N: int) -> Trajectory:
    """L1 scheme on a uniform grid of N steps.

    With ``a_j = (j+1)^(1-alpha) - j^(1-alpha)`` and ``c = dt^-alpha / Gamma(2-alpha)``,
    ``c sum_{j=0}^{n} a_j (phi^{n+1-j} - phi^{n-j}) = -lam phi^{n+1} + f(t_{n+1})``.
    """
    if not isinstance(problem.rhs, Linear):
        raise TypeError("the L1 oracle handles linear right-hand sides only")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    alpha = problem.alpha
    lam = problem.rhs.lam
    f = problem.rhs.forcing
    dt = problem.horizon / N
    c = dt ** (-alpha) / math.gamma(2.0 - alpha)
    a = power_differences(1.0 - alpha, N + 1)
    hist = ConvolutionHistory.allocate(N, problem.phi0)
    diffs = np.empty(N)  # diffs[m] = phi^{m+1} - phi^m
    t0 = time.perf_counter()
    for n in range(N):
        # memory term: sum_{j=1}^{n} a_j diffs[n-j]
        mem = a[1 : n + 1] @ diffs[n - 1 :: -1] if n else 0.0
        rhs = c * hist.phi[n] - c * mem + f((n + 1) * dt)
        hist.phi[n + 1] = rhs / (c + lam)
        diffs[n] = hist.phi[n + 1] - hist.phi[n]
        hist.n = n + 1
    times = np.arange(N + 1) * dt
    info = {"dt": dt, "method": "l1", "wall_time": time.perf_counter() - t0, "stored": len(hist)}
    return Trajectory(times, hist.phi.copy(), None, info)


def frac_adams_solve(problem: FdeProblem, N: int) -> Trajectory:
    """Fractional Adams-Bashforth-Moulton predictor-corrector, one corrector sweep.

    Predictor (product rectangle rule):
        phi^P_{n+1} = phi0 + h^a / Gamma(a+1) sum_{j<=n} b_{n-j} F_j,
        b_m = (m+1)^a - m^a.
    Corrector (product trapezoidal rule):
        phi_{n+1} = phi0 + h^a / Gamma(a+2) (F(t_{n+1}, phi^P) + sum_{j<=n} a_{j,n+1} F_j),
        a_{0,n+1} = n^(a+1) - (n-a)(n+1)^a,
        a_{j,n+1} = (n-j+2)^(a+1) - 2(n-j+1)^(a+1) + (n-j)^(a+1).
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    alpha = problem.alpha
    F = problem.F
    dt = problem.horizon / N
    phi0 = problem.phi0
    pred_scale = dt**alpha / math.gamma(alpha + 1.0)
    corr_scale = dt**alpha / math.gamma(alpha + 2.0)
    b = power_differences(alpha, N + 1)
    d1 = power_differences(alpha + 1.0, N + 2)
    # second differences of m^(a+1): mid[m] = (m+2)^p - 2(m+1)^p + m^p
    mid = d1[1:] - d1[:-1]
    hist = ConvolutionHistory.allocate(N, phi0)
    hist.F[0] = F(0.0, phi0)
    t0 = time.perf_counter()
    for n in range(N):
        Fr = hist.F[n::-1]  # F_n, F_{n-1}, ..., F_0
        pred = phi0 + pred_scale * (b[: n + 1] @ Fr)
        t_next = (n + 1) * dt
        # j = 1..n use mid[n-j]; j = 0 has its own weight
        acc = mid[: n] @ Fr[: n] if n else 0.0
        a0 = n ** (alpha + 1.0) - (n - alpha) * (n + 1.0) ** alpha
        acc += a0 * hist.F[0]
        val = phi0 + corr_scale * (F(t_next, pred) + acc)
        hist.phi[n + 1] = val
        hist.F[n + 1] = F(t_next, val)
        hist.n = n + 1
    times = np.arange(N + 1) * dt
    info = {"dt": dt, "method": "frac_adams", "wall_time": time.perf_counter() - t0, "stored": len(hist)}
    return Trajectory(times, hist.phi.copy(), None, info)
