"""Stability of the fully discrete scheme on the model problem.

For ``F = -lam phi`` a BDF-k step is ``Phi^{n+1} = sum_j A(sigma)^-1 B_j Phi^{n-j}``
with ``sigma = -dt lam``, ``A(sigma) = diag(alpha_k (1-theta) + dt theta) - sigma 1 w^T``
and ``B_j = b_j diag(1-theta)``. The amplification operator is the block
companion matrix of this recursion; the scheme is stable at sigma when its
spectral radius is below one.

Two evaluation routes:

* :func:`amplification_matrix` + :func:`spectral_radius`: the companion
  matrix built literally, its radius from repeated squaring. Slow, simple,
  used as the reference.
* :func:`region_scan`: the eigenvalues are the roots of the scalar equation

      1 = sigma * sum_s w_s z^k / p_s(z),
      p_s(z) = a_s z^k - (1 - theta_s) sum_j b_j z^{k-1-j},

  (the rank-one coupling reduces the determinant to this secular form).
  All k(M+1) roots are tracked with Aberth-Ehrlich iteration, marching
  along Im(sigma) from a dense eigensolve on the starting row, so each grid
  point costs O((kM)^2) instead of a dense eigensolve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import math

import numba
import numpy as np

from .quadrature import ThetaGrid, gauss_jacobi_grid
from .stepper import bdf_coefficients

__all__ = [
    "RegionSpec",
    "RegionField",
    "StabilityError",
    "amplification_matrix",
    "spectral_radius",
    "secular_roots",
    "region_scan",
    "BOUNDARY_TOL",
]

# points with |rho - 1| below this are flagged "boundary"
BOUNDARY_TOL = 1e-6


class StabilityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RegionSpec:
    """Scheme parameters and the sigma window ``x + iy``.

    A range with equal end points describes a single line; it then needs a
    resolution of 1. Every other range needs at least 2 points.
    """

    alpha: float
    k: int = 3
    M: int = 30
    dt: float = 0.01
    x_range: tuple = (-15.0, 5.0)
    y_range: tuple = (-10.0, 10.0)
    nx: int = 301
    ny: int = 301

    def __post_init__(self):
        problems = []
        if not 0.0 < self.alpha < 1.0:
            problems.append(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.k not in (1, 2, 3, 4, 5):
            problems.append(f"k must be 1..5, got {self.k}")
        if self.M < 0:
            problems.append(f"M must be >= 0, got {self.M}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            problems.append(f"dt must be positive, got {self.dt}")
        for name, rng, n in (("x", self.x_range, self.nx), ("y", self.y_range, self.ny)):
            lo, hi = rng
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                problems.append(f"{name}_range must be finite and increasing, got {rng}")
            elif lo == hi and n != 1:
                problems.append(f"n{name} must be 1 for the degenerate {name}_range {rng}")
            elif lo < hi and n < 2:
                problems.append(f"n{name} must be >= 2, got {n}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def xs(self):
        return np.linspace(self.x_range[0], self.x_range[1], self.nx)

    @property
    def ys(self):
        return np.linspace(self.y_range[0], self.y_range[1], self.ny)


@dataclass
class RegionField:
    """Spectral radius on the grid; ``rho[i, j]`` belongs to ``xs[i] + 1j*ys[j]``."""

    spec: RegionSpec
    xs: np.ndarray
    ys: np.ndarray
    rho: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def stable(self):
        return self.rho < 1.0

    @property
    def stable_count(self) -> int:
        return int(np.count_nonzero(self.stable))

    @property
    def nan_count(self) -> int:
        return int(np.count_nonzero(np.isnan(self.rho)))

    @property
    def flags(self):
        out = np.where(self.rho < 1.0, "stable", "unstable").astype(object)
        out[np.abs(self.rho - 1.0) <= BOUNDARY_TOL] = "boundary"
        out[np.isnan(self.rho)] = "undefined"
        return out

    def rows(self):
        """``(re_sigma, im_sigma, rho, flag)`` with x as the outer index."""
        flags = self.flags
        for i, x in enumerate(self.xs):
            for j, y in enumerate(self.ys):
                yield float(x), float(y), float(self.rho[i, j]), flags[i, j]


# -- companion matrix and repeated squaring ----------------------------------


def _scheme_parts(alpha, k, M, dt, grid=None):
    grid = grid if grid is not None else gauss_jacobi_grid(M, alpha)
    scheme = bdf_coefficients(k)
    th = grid.nodes
    a = scheme.alpha_k * (1.0 - th) + dt * th
    return grid, scheme, a


def amplification_matrix(sigma, alpha, k, M, dt, grid: Optional[ThetaGrid] = None):
    """Block companion matrix of dimension k(M+1) for one BDF-k step.

    Raises :class:`StabilityError` where ``A(sigma)`` is singular, which
    happens only at ``sigma = 1 / sum_s w_s / a_s`` on the positive real axis.
    """
    grid, scheme, a = _scheme_parts(alpha, k, M, dt, grid)
    n = grid.size
    w = grid.weights
    c = np.sum(w / a)
    denom = 1.0 - sigma * c
    if abs(denom) <= 1e-14 * max(1.0, abs(sigma * c)):
        raise StabilityError(f"A(sigma) is singular at sigma={sigma}")
    # Sherman-Morrison: (D - sigma 1 w^T)^-1 = D^-1 + sigma D^-1 1 w^T D^-1 / (1 - sigma w^T D^-1 1)
    Ainv = np.diag(1.0 / a).astype(complex) + sigma * np.outer(1.0 / a, w / a) / denom
    K = np.zeros((k * n, k * n), dtype=complex)
    one_minus = 1.0 - grid.nodes
    for j, bj in enumerate(scheme.b):
        K[:n, j * n:(j + 1) * n] = Ainv * (bj * one_minus)
    if k > 1:
        K[n:, :-n] = np.eye((k - 1) * n)
    return K


def spectral_radius(matrix, squarings: int = 14, power_steps: int = 64) -> float:
    """Spectral radius from ``||B^(2^p)||^(1/2^p)``, refined by power iteration.

    Every squaring is renormalized and its scale kept as a logarithm, so
    the powers never overflow. The power iteration then runs on the last
    squared matrix, where the dominant eigenvalue is separated from the
    rest by the 2^p-th power of the modulus ratio.
    """
    B = np.array(matrix, dtype=complex)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValueError("matrix has non-finite entries")
    if not 0 <= squarings <= 14:
        raise ValueError(f"squarings must lie in 0..14, got {squarings}")
    if B.size == 0:
        return 0.0
    # the Frobenius norm squares entries, so prescale by the largest one
    nrm = np.abs(B).max()
    if nrm == 0.0:
        return 0.0
    # invariant: matrix^power = exp(log_scale) * B with B of unit scale
    log_scale = math.log(nrm)
    B = B / nrm
    power = 1
    for _ in range(squarings):
        B = B @ B
        nrm = np.linalg.norm(B)
        if nrm == 0.0:
            return 0.0
        log_scale = 2.0 * log_scale + math.log(nrm)
        B = B / nrm
        power *= 2
    rng = np.random.default_rng(0)
    v = rng.standard_normal(B.shape[0]) + 1j * rng.standard_normal(B.shape[0])
    v /= np.linalg.norm(v)
    logs = []
    for _ in range(power_steps):
        v = B @ v
        g = np.linalg.norm(v)
        if g == 0.0:
            return 0.0
        logs.append(math.log(g))
        v /= g
    # mean growth over the second half; ties in modulus only make it oscillate
    growth = float(np.mean(logs[power_steps // 2:]))
    return math.exp((log_scale + growth) / power)


# -- secular roots ------------------------------------------------------------


@numba.njit(cache=True)
def _newton_ratio(z, sigma, gam, wa, b, k):
    """q(z) / q'(z) for q = prod_s P_s * (1 - sigma sum_s wa_s z^k / P_s)."""
    zk = 1.0 + 0.0j
    for _ in range(k):
        zk *= z
    dzk = k * zk / z if z != 0 else (1.0 + 0.0j if k == 1 else 0.0j)
    h = 0.0j
    dh = 0.0j
    dlog = 0.0j
    for s in range(gam.size):
        # P = z^k - gam_s sum_j b_j z^{k-1-j} and its derivative by Horner
        tail = 0.0j
        dtail = 0.0j
        for j in range(k):
            dtail = dtail * z + tail
            tail = tail * z + b[j]
        P = zk - gam[s] * tail
        dP = dzk - gam[s] * dtail
        if P == 0:
            return 0.0j, False
        dlog += dP / P
        h += wa[s] * zk / P
        dh += wa[s] * (dzk * P - zk * dP) / (P * P)
    g = 1.0 - sigma * h
    if g == 0:
        return 0.0j, True
    d = -sigma * dh / g + dlog
    if d == 0:
        return 0.0j, False
    return 1.0 / d, True


@numba.njit(cache=True)
def _aberth(z, sigma, gam, wa, b, k, tol, maxit):
    """Refine all roots in ``z`` in place; returns the sweep count or -1."""
    n = z.size
    for it in range(maxit):
        worst = 0.0
        for i in range(n):
            zi = z[i]
            ratio, ok = _newton_ratio(zi, sigma, gam, wa, b, k)
            if not ok:
                return -1
            rep = 0.0j
            for j in range(n):
                if j != i:
                    rep += 1.0 / (zi - z[j])
            corr = ratio / (1.0 - ratio * rep)
            z[i] = zi - corr
            rel = abs(corr) / max(1.0, abs(zi))
            if rel > worst:
                worst = rel
        if not np.isfinite(worst):
            return -1
        if worst <= tol:
            return it + 1
    return -1


@numba.njit(cache=True)
def _march_column(z0, sigmas, gam, wa, b, k, c, root_sum_coef, tol, maxit, rho, start):
    """Track the roots along ``sigmas[start:]``; stops at the first failure.

    ``z0`` holds the roots at ``sigmas[start - 1]``. Returns the index of
    the first point that failed (``len(sigmas)`` when all converged) and
    the last good roots.
    """
    z = z0.copy()
    prev = z0.copy()
    have_prev = False
    b0, gsum, dsum = root_sum_coef
    for m in range(start, sigmas.size):
        sigma = sigmas[m]
        guess = z.copy()
        if have_prev:
            # linear extrapolation of each root along the march
            guess = 2.0 * z - prev
        trial = guess.copy()
        its = _aberth(trial, sigma, gam, wa, b, k, tol, maxit)
        if its < 0:
            trial = z.copy()
            its = _aberth(trial, sigma, gam, wa, b, k, tol, maxit)
        if its < 0:
            return m, z
        # the roots must add up to the exactly known trace
        denom = 1.0 - sigma * c
        expect = b0 * (gsum - sigma * (c * gsum - dsum)) / denom
        total = trial.sum()
        scale = np.abs(trial).sum()
        if abs(total - expect) > 1e-9 * max(1.0, scale):
            return m, z
        r = 0.0
        for q in range(trial.size):
            a = abs(trial[q])
            if a > r:
                r = a
        rho[m] = r
        prev = z
        z = trial
        have_prev = True
    return sigmas.size, z


class _Secular:
    """Per-scheme data of the secular equation."""

    def __init__(self, alpha, k, M, dt, grid=None):
        grid, scheme, a = _scheme_parts(alpha, k, M, dt, grid)
        self.alpha, self.k, self.M, self.dt = alpha, k, M, dt
        self.grid = grid
        self.gam = (1.0 - grid.nodes) / a
        self.wa = grid.weights / a
        self.b = np.array(scheme.b, dtype=float)
        self.c = float(self.wa.sum())
        self.root_sum_coef = (
            float(self.b[0]), float(self.gam.sum()), float(self.wa @ self.gam)
        )

    def dense_roots(self, sigma):
        K = amplification_matrix(sigma, self.alpha, self.k, self.M, self.dt, self.grid)
        return np.linalg.eigvals(K)


def secular_roots(sigma, alpha, k, M, dt, grid=None, tol=1e-13, maxit=80):
    """All k(M+1) eigenvalues of the amplification operator at ``sigma``.

    Starts Aberth iteration from the dense eigenvalues at ``sigma = 0``
    (where the nodes decouple); falls back to a dense eigensolve when the
    iteration fails.
    """
    sec = _Secular(alpha, k, M, dt, grid)
    z = sec.dense_roots(0.0).astype(complex)
    its = _aberth(z, complex(sigma), sec.gam, sec.wa, sec.b, k, tol, maxit)
    if its < 0:
        return sec.dense_roots(sigma)
    return z


def _scan_column(sec, sigmas, z_start, tol, maxit):
    """rho along one column of sigmas, starting from roots at ``sigmas[0]``."""
    rho = np.full(sigmas.size, np.nan)
    rho[0] = np.abs(z_start).max() if z_start is not None else np.nan
    z = z_start
    m = 1
    fallbacks = 0
    while m < sigmas.size:
        if z is None:
            z, m = _dense_or_none(sec, sigmas[m]), m + 1
            fallbacks += 1
            if z is not None:
                rho[m - 1] = np.abs(z).max()
            continue
        m_fail, z_last = _march_column(
            z.astype(complex), sigmas, sec.gam, sec.wa, sec.b, sec.k, sec.c,
            sec.root_sum_coef, tol, maxit, rho, m,
        )
        if m_fail >= sigmas.size:
            break
        fallbacks += 1
        z_new = _dense_or_none(sec, sigmas[m_fail])
        if z_new is not None:
            rho[m_fail] = np.abs(z_new).max()
            z = z_new
        else:
            z = z_last
        m = m_fail + 1
    return rho, fallbacks


def _dense_or_none(sec, sigma):
    try:
        return sec.dense_roots(sigma)
    except StabilityError:
        return None


def region_scan(spec: RegionSpec, method: str = "secular", tol: float = 1e-13, maxit: int = 80) -> RegionField:
    """Spectral radius of the amplification operator on the sigma grid.

    ``method="secular"`` marches Aberth iteration along each column of
    constant Re(sigma), starting on the row closest to the real axis;
    ``method="companion"`` evaluates every point with
    :func:`amplification_matrix` and :func:`spectral_radius`.
    Points where A(sigma) is singular get ``rho = nan``.
    """
    xs, ys = spec.xs, spec.ys
    rho = np.full((xs.size, ys.size), np.nan)
    info = {"method": method, "fallbacks": 0, "mirrored": False}
    if method == "companion":
        grid = gauss_jacobi_grid(spec.M, spec.alpha)
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                try:
                    K = amplification_matrix(complex(x, y), spec.alpha, spec.k, spec.M, spec.dt, grid)
                except StabilityError:
                    continue
                rho[i, j] = spectral_radius(K)
        return RegionField(spec, xs, ys, rho, info)
    if method != "secular":
        raise ValueError(f"unknown method {method!r}")

    sec = _Secular(spec.alpha, spec.k, spec.M, spec.dt)
    # real coefficients: rho(conj sigma) = rho(sigma); scan one half when the grid allows
    mirrored = ys.size > 1 and np.allclose(ys, -ys[::-1], rtol=0, atol=1e-12 * max(1.0, np.abs(ys).max()))
    j0 = int(np.argmin(np.abs(ys)))
    if mirrored:
        j0 = ys.size // 2
        # with an even count the two middle rows mirror each other; start on the upper one
        if ys.size % 2 == 0:
            j0 = ys.size // 2
    up = list(range(j0, ys.size))
    down = [] if mirrored else list(range(j0, -1, -1))
    for i, x in enumerate(xs):
        z0 = _dense_or_none(sec, complex(x, ys[j0]))
        if z0 is None:
            info["fallbacks"] += 1
        for idx in (up, down):
            if len(idx) == 0:
                continue
            sig = np.array([complex(x, ys[j]) for j in idx])
            col, fb = _scan_column(sec, sig, z0, tol, maxit)
            info["fallbacks"] += fb
            rho[i, idx] = col
    if mirrored:
        for j in range(j0):
            rho[:, j] = rho[:, ys.size - 1 - j]
        info["mirrored"] = True
    return RegionField(spec, xs, ys, rho, info)
