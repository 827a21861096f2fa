"""BDF-k time stepping of the collocated extended system.

At the collocation nodes theta_s the scheme reads, after multiplying the
extended equation through by (1 - theta),

    A Phi^{n+1} = sum_j b_j diag(1 - theta) Phi^{n-j} + dt (theta phi0 + f(t_{n+1}))

with ``A = diag(alpha_k (1 - theta) + dt theta) + dt lam 1 w^T``. ``A`` is
factorized once; every step afterwards costs O(M^2) (O(M) when lam = 0),
so a run of N steps is O(N) work with O(k M) state.
"""

from __future__ import annotations

import time
import warnings
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction as Fr
from typing import Callable, Optional

import mpmath
import numpy as np
from scipy import integrate, linalg

from .core import FdeProblem, Linear, StabilityWarning, theta_coefficients
from .quadrature import ThetaGrid, gauss_jacobi_grid

__all__ = [
    "BdfScheme",
    "StepSystem",
    "SolverState",
    "Trajectory",
    "SolverError",
    "PicardError",
    "bdf_coefficients",
    "assemble_system",
    "factorize",
    "step_linear",
    "step_nonlinear_picard",
    "startup",
    "exact_states",
    "solve",
]

_BDF_TABLE = {
    1: (Fr(1), (Fr(1),)),
    2: (Fr(3, 2), (Fr(2), Fr(-1, 2))),
    3: (Fr(11, 6), (Fr(3), Fr(-3, 2), Fr(1, 3))),
    4: (Fr(25, 12), (Fr(4), Fr(-3), Fr(4, 3), Fr(-1, 4))),
    5: (Fr(137, 60), (Fr(5), Fr(-5), Fr(10, 3), Fr(-5, 4), Fr(1, 5))),
}
# Smallest multipliers for which the G-stability energy identity holds.
_TAU = {1: 0.0, 2: 0.0, 3: 0.0836, 4: 0.2878, 5: 0.8160}
# phi^{n+1} ~ sum_j c_j phi^{n-j}, exact for polynomials of degree < len
_EXTRAPOLATION = {
    1: (1.0,),
    2: (2.0, -1.0),
    3: (3.0, -3.0, 1.0),
    4: (4.0, -6.0, 4.0, -1.0),
    5: (5.0, -10.0, 10.0, -5.0, 1.0),
}


class SolverError(RuntimeError):
    pass


class PicardError(SolverError):
    def __init__(self, msg, residual=None, step=None):
        super().__init__(msg)
        self.residual = residual
        self.step = step


@dataclass(frozen=True)
class BdfScheme:
    """BDF-k as ``alpha_k y^{n+1} - sum_j b_j y^{n-j} = dt f^{n+1}``."""

    k: int
    alpha_k: float
    b: tuple
    tau_k: float
    exact: tuple = field(repr=False, default=())

    @property
    def b_array(self):
        return np.array(self.b)


def bdf_coefficients(k: int) -> BdfScheme:
    if k not in _BDF_TABLE:
        raise ValueError(f"BDF order must be 1..5, got {k}")
    ak, bs = _BDF_TABLE[k]
    return BdfScheme(
        k=k,
        alpha_k=float(ak),
        b=tuple(float(x) for x in bs),
        tau_k=_TAU[k],
        exact=(ak, bs),
    )


# -- factorizations ---------------------------------------------------------


class _DiagonalSolve:
    kind = "diagonal"

    def __init__(self, diag):
        self.diag = diag

    def solve(self, r):
        return r / self.diag


class _EigSolve:
    """``A = X diag(lam) X^-1`` for ``A = D + c 1 w^T`` with w > 0.

    With ``S = diag(sqrt(w))``, ``S A S^-1 = D + c sqrt(w) sqrt(w)^T`` is
    symmetric, so a symmetric eigensolve gives real eigenvalues and an
    orthogonal Q; then ``X = S^-1 Q`` and ``X^-1 = Q^T S``.

    ``X`` inherits the spread of ``1 / sqrt(w)``, which costs up to two
    digits when the weights span many decades; one step of iterative
    refinement (A applied in O(M) through its diagonal-plus-rank-one
    form) restores a residual at rounding level.
    """

    kind = "eig"

    def __init__(self, diag, c, weights):
        s = np.sqrt(weights)
        sym = np.diag(diag) + c * np.outer(s, s)
        evals, Q = np.linalg.eigh(sym)
        if np.any(evals == 0) or not np.all(np.isfinite(evals)):
            raise SolverError(f"step matrix is singular (eigenvalue {evals.min():.3e})")
        self.eigenvalues = evals
        self._s = s
        self._Q = Q
        self._Xinv = Q.T * s
        self._X = Q / s[:, None]
        self._diag = np.asarray(diag, dtype=float)
        self._c = c
        self._w = weights

    def _apply_inverse(self, r):
        return self._X @ ((self._Xinv @ r) / self.eigenvalues)

    def solve(self, r):
        x = self._apply_inverse(r)
        residual = r - (self._diag * x + self._c * (self._w @ x))
        return x + self._apply_inverse(residual)


class _LUSolve:
    kind = "lu"

    def __init__(self, A):
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            try:
                self._lu = linalg.lu_factor(A, check_finite=True)
            except (linalg.LinAlgError, linalg.LinAlgWarning) as exc:
                raise SolverError(f"LU factorization of the step matrix failed: {exc}") from exc
        piv = np.abs(np.diag(self._lu[0]))
        if piv.min() == 0:
            raise SolverError(f"step matrix is singular (zero pivot at {int(piv.argmin())})")

    def solve(self, r):
        return linalg.lu_solve(self._lu, r)


def factorize(A, lam: float, grid: ThetaGrid, method: str = "auto"):
    """Reusable solver for the step matrix ``A``.

    ``method``: ``"auto"`` picks the diagonal solve for lam = 0, the
    symmetrized eigendecomposition for lam > 0 and LU for lam < 0;
    ``"eig"`` and ``"lu"`` force a route.
    """
    A = np.asarray(A, dtype=float)
    if method == "auto":
        method = "diagonal" if lam == 0 else ("eig" if lam > 0 else "lu")
    if method == "diagonal":
        if lam != 0:
            raise ValueError("diagonal solve requires lam == 0")
        d = np.diag(A).copy()
        if np.any(d == 0):
            raise SolverError("step matrix has a zero diagonal entry")
        return _DiagonalSolve(d)
    if method == "eig":
        if grid.size == 1:
            return _DiagonalSolve(np.diag(A).copy())
        # A = D + c 1 w^T: any off-diagonal entry of the first row gives c
        c = A[0, -1] / grid.weights[-1]
        return _EigSolve(np.diag(A) - c * grid.weights, c, grid.weights)
    if method == "lu":
        return _LUSolve(A)
    raise ValueError(f"unknown factorization method {method!r}")


# -- assembled system -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepSystem:
    grid: ThetaGrid
    scheme: BdfScheme
    dt: float
    lam: float
    diag: np.ndarray  # alpha_k (1 - theta) + dt theta
    Bdiag: np.ndarray  # 1 - theta
    factorization: object

    @property
    def A(self):
        return np.diag(self.diag) + self.dt * self.lam * np.outer(
            np.ones(self.grid.size), self.grid.weights
        )

    def B(self, j: int):
        return self.scheme.b[j] * np.diag(self.Bdiag)

    def solve(self, r):
        return self.factorization.solve(r)


def assemble_system(
    grid: ThetaGrid, scheme: BdfScheme, dt: float, lam: float = 0.0, method: str = "auto"
) -> StepSystem:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt >= 1:
        warnings.warn(f"dt={dt} >= 1: error estimates assume dt < 1", StabilityWarning, stacklevel=2)
    th = grid.nodes
    diag = scheme.alpha_k * (1.0 - th) + dt * th
    A = np.diag(diag) + dt * lam * np.outer(np.ones(grid.size), grid.weights)
    if method == "auto" and lam > 0:
        fac = _EigSolve(diag, dt * lam, grid.weights)
    elif method == "eig":
        fac = _EigSolve(diag, dt * lam, grid.weights)
    else:
        fac = factorize(A, lam, grid, method)
    return StepSystem(grid, scheme, float(dt), float(lam), diag, 1.0 - th, fac)


# -- state and stepping -----------------------------------------------------


class SolverState:
    """Ring buffer of the most recent collocation vectors, newest last."""

    def __init__(self, k: int, phi_init, t0: float = 0.0):
        self.k = k
        self.history = deque([np.asarray(phi_init, dtype=float)], maxlen=k)
        self.n = 0
        self.t = t0

    def push(self, vec, t):
        self.history.append(vec)
        self.n += 1
        self.t = t

    @property
    def current(self):
        return self.history[-1]

    @property
    def buffer_size(self) -> int:
        """Number of floats held in the history buffer."""
        return sum(v.size for v in self.history)


def _history_increment(state: SolverState, scheme: BdfScheme):
    """``sum_{j>=1} b_j (Phi^{n-j} - Phi^n)``.

    Since ``sum_j b_j = alpha_k`` the step can be solved for the increment
    ``Phi^{n+1} - Phi^n``; the history then enters only through
    differences of nearby vectors, which are formed without rounding, and
    the accumulated round-off scales with the increments instead of the
    state itself.
    """
    cur = state.current
    acc = np.zeros_like(cur)
    for j in range(1, scheme.k):
        acc += scheme.b[j] * (state.history[-1 - j] - cur)
    return acc


def step_linear(state: SolverState, system: StepSystem, f_next: float, phi0: float):
    """One BDF-k step of the linear collocated system; returns Phi^{n+1}.

    Solves ``A Phi^{n+1} = sum_j b_j diag(1-theta) Phi^{n-j} + dt (theta phi0 + f_next)``,
    arranged as a solve for the increment over Phi^n.
    """
    if len(state.history) < system.scheme.k:
        raise SolverError(
            f"history holds {len(state.history)} vectors, BDF-{system.scheme.k} needs {system.scheme.k}"
        )
    cur = state.current
    th = system.grid.nodes
    rhs = system.Bdiag * _history_increment(state, system.scheme)
    rhs += system.dt * (th * (phi0 - cur) + f_next - system.lam * (cur @ system.grid.weights))
    return cur + system.solve(rhs)


def step_nonlinear_picard(
    state: SolverState,
    grid: ThetaGrid,
    scheme: BdfScheme,
    dt: float,
    F: Callable[[float, float], float],
    phi0: float,
    tol: float = 1e-15,
    max_iter: int = 100,
    t_next: Optional[float] = None,
    diag=None,
    return_iterations: bool = False,
    predict: bool = False,
):
    """One BDF-k step with F lagged in a Picard fixed-point loop.

    Each sweep solves the diagonal system
    ``diag(alpha_k (1-theta) + dt theta) Phi = history + dt (theta phi0 + F(t, C[Phi_prev]))``
    starting from ``Phi_prev = Phi^n`` (or, with ``predict``, from the
    polynomial extrapolation of the reconstructed history) and stops when
    successive reconstructions differ by at most ``tol * max(1, |phi|)``,
    or by no more than the rounding noise of the reconstruction.
    """
    if len(state.history) < scheme.k:
        raise SolverError(f"history holds {len(state.history)} vectors, BDF-{scheme.k} needs {scheme.k}")
    th = grid.nodes
    if diag is None:
        diag = scheme.alpha_k * (1.0 - th) + dt * th
    if t_next is None:
        t_next = state.t + dt
    cur = state.current
    base = (1.0 - th) * _history_increment(state, scheme) + dt * th * (phi0 - cur)
    w = grid.weights
    if predict:
        # F only sees the reconstruction, so extrapolating that scalar
        # from the history is enough to start close to the fixed point.
        past = [float(v @ w) for v in list(state.history)[::-1]]
        phi_hat = sum(c * v for c, v in zip(_EXTRAPOLATION[len(past)], past))
    else:
        phi_hat = float(cur @ w)
    delta = np.inf
    eps = np.finfo(float).eps
    for it in range(1, max_iter + 1):
        try:
            inc = (base + dt * F(t_next, phi_hat)) / diag
        except OverflowError:
            inc = np.full_like(base, np.inf)
        new = float(cur @ w + inc @ w)
        if not np.isfinite(new):
            raise PicardError(
                f"Picard iteration diverged after {it} sweeps; reduce dt",
                residual=np.inf,
                step=state.n + 1,
            )
        delta = abs(new - phi_hat)
        phi_hat = new
        # a tol below the rounding noise of the reconstruction is unreachable
        noise = 8.0 * eps * float((np.abs(cur) + np.abs(inc)) @ w)
        if delta <= max(tol * max(1.0, abs(new)), noise):
            Phi = cur + inc
            return (Phi, it) if return_iterations else Phi
    raise PicardError(
        f"Picard iteration did not converge in {max_iter} sweeps (last change {delta:.3e}); "
        "reduce dt",
        residual=delta,
        step=state.n + 1,
    )


@dataclass
class Trajectory:
    times: np.ndarray
    phi: np.ndarray
    states: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def final(self) -> float:
        return float(self.phi[-1])


# -- startup ----------------------------------------------------------------


def exact_states(problem: FdeProblem, grid: ThetaGrid, rtol: float = 1e-13):
    """Time-exact solution of the theta-collocated system, as ``t -> Phi(t)``.

    The collocated system is the integer-order ODE system

        dPhi/dt = -c1 Phi + c0 F(t, w . Phi) + c1 phi0,   Phi(0) = phi0,

    which the BDF march discretizes in time. Seeding the startup history
    with its exact values leaves only the BDF-k error, so order studies see
    the pure temporal rate. Seeding the exact values of the continuous
    (un-collocated) problem instead would inject the theta-quadrature error
    of small times, which is large: the solution has a layer in theta of
    width ~t near theta = 1.

    Linear problems are solved mode by mode after diagonalizing
    ``diag(c1) + lam c0 w^T``; nonlinear ones by a tight-tolerance
    Runge-Kutta integration.
    """
    if problem.is_linear:
        return _linear_modal_states(problem, grid)
    return _ivp_states(problem, grid, rtol)


def _linear_modal_states(problem, grid, dps=34):
    # The eigenvector matrix is mildly ill-conditioned (its scaling spans
    # sqrt(w (1 - theta))), enough to cost ~1e-14 in double precision, so
    # the modal algebra runs in extended precision.
    with mpmath.workdps(dps):
        th = [mpmath.mpf(x) for x in grid.nodes]
        w = [mpmath.mpf(x) for x in grid.weights]
        n = grid.size
        c0 = [1 / (1 - x) for x in th]
        c1 = [x / (1 - x) for x in th]
        lam = mpmath.mpf(problem.rhs.lam)
        phi0 = mpmath.mpf(problem.phi0)
        # diag(c1) + lam c0 w^T is similar to a symmetric matrix via S = diag(sqrt(w / c0))
        s = [mpmath.sqrt(w[i] / c0[i]) for i in range(n)]
        K = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                K[i, j] = lam * s[i] * c0[i] * w[j] / s[j]
            K[i, i] += c1[i]
        K = (K + K.T) / 2
        mu, Q = mpmath.eigsy(K)
        Xinv = [[Q[j, m] * s[j] for j in range(n)] for m in range(n)]
        y0 = [phi0 * sum(Xinv[m]) for m in range(n)]
        gc = [phi0 * mpmath.fdot(Xinv[m], c1) for m in range(n)]
        gf = [mpmath.fdot(Xinv[m], c0) for m in range(n)]
        X = [[Q[i, m] / s[i] for m in range(n)] for i in range(n)]
        mu = [mu[m] for m in range(n)]
    mu_f = np.array([float(m) for m in mu])
    forcing = problem.rhs.forcing
    cache = {}

    def convolution(t):
        out = []
        for rate in mu_f:
            cut = t - min(t, 40.0 / rate)
            pts = [cut] if 0 < cut < t else None
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val = integrate.quad(
                    lambda u, r=rate: np.exp(-r * (t - u)) * forcing(u),
                    0.0, t, points=pts, epsabs=1e-18, epsrel=1e-15, limit=200,
                )[0]
            out.append(val)
        return out

    def states(t):
        t = float(t)
        if t == 0:
            return np.full(n, float(problem.phi0))
        if t not in cache:
            conv = convolution(t)
            with mpmath.workdps(dps):
                tt = mpmath.mpf(t)
                y = []
                for m in range(n):
                    e = mpmath.exp(-mu[m] * tt)
                    y.append(e * y0[m] + (1 - e) / mu[m] * gc[m] + gf[m] * conv[m])
                cache[t] = np.array([float(mpmath.fdot(X[i], y)) for i in range(n)])
        return cache[t].copy()

    return states


def _ivp_states(problem, grid, rtol):
    tc = theta_coefficients(grid.nodes, problem.alpha)
    w = grid.weights
    F = problem.F
    phi0 = problem.phi0

    def rhs(t, y):
        return -tc.c1 * y + tc.c0 * F(t, y @ w) + tc.c1 * phi0

    y0 = np.full(grid.size, float(phi0))
    cache = {}

    def states(t):
        t = float(t)
        if t == 0:
            return y0.copy()
        if t not in cache:
            sol = integrate.solve_ivp(
                rhs, (0.0, t), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-2
            )
            if not sol.success:
                raise SolverError(f"reference integration failed at t={t}: {sol.message}")
            cache[t] = sol.y[:, -1]
        return cache[t].copy()

    return states


def _march(state, system, problem, n_steps, dt, mode, picard, record=None):
    """Advance ``state`` by ``n_steps`` with a fixed system; optionally record."""
    grid = system.grid
    F = problem.F
    for _ in range(n_steps):
        t_next = state.t + dt
        if mode == "linear":
            new = step_linear(state, system, problem.rhs.forcing(t_next), problem.phi0)
        else:
            new, its = step_nonlinear_picard(
                state, grid, system.scheme, dt, F, problem.phi0,
                t_next=t_next, diag=system.diag, return_iterations=True,
                tol=picard["tol"], max_iter=picard["max_iter"],
                predict=picard.get("predict", True),
            )
            picard["count"] = picard.get("count", 0) + its
        state.push(new, t_next)
        if record is not None:
            record(state)


def startup(
    problem: FdeProblem,
    grid: ThetaGrid,
    scheme: BdfScheme,
    dt: float,
    mode: str = "cascade",
    refine: int = 64,
    exact: Optional[Callable[[float], np.ndarray]] = None,
    step_mode: Optional[str] = None,
    picard: Optional[dict] = None,
) -> SolverState:
    """Fill the history with Phi^0 .. Phi^{k-1}.

    ``cascade``: Phi^n by BDF-n, n = 1..k-1. ``refined``: each startup
    interval split into ``refine`` BDF-1 substeps. ``exact``: values from
    ``exact(t)`` returning nodal states (see :func:`exact_states`).
    """
    k = scheme.k
    step_mode = step_mode or ("linear" if problem.is_linear else "picard")
    picard = {"tol": 1e-15, "max_iter": 100} if picard is None else picard
    lam = problem.rhs.lam if step_mode == "linear" else 0.0
    state = SolverState(k, np.full(grid.size, float(problem.phi0)))
    if k == 1:
        return state
    if mode == "exact":
        if exact is None:
            raise ValueError("exact startup needs an evaluator of the nodal states")
        for n in range(1, k):
            vals = np.asarray(exact(n * dt), dtype=float)
            if vals.shape != (grid.size,):
                raise ValueError(f"exact state must have shape ({grid.size},), got {vals.shape}")
            state.push(vals, n * dt)
        return state
    if mode == "cascade":
        for order in range(1, k):
            sub = SolverState(order, state.history[0])
            sub.history.extend(list(state.history)[1:])
            sub.n, sub.t = state.n, state.t
            system = assemble_system(grid, bdf_coefficients(order), dt, lam)
            _march(sub, system, problem, 1, dt, step_mode, picard)
            state.push(sub.current, sub.t)
        return state
    if mode == "refined":
        if refine < 1:
            raise ValueError(f"refine must be >= 1, got {refine}")
        h = dt / refine
        system = assemble_system(grid, bdf_coefficients(1), h, lam)
        sub = SolverState(1, state.current)
        for n in range(1, k):
            _march(sub, system, problem, refine, h, step_mode, picard)
            sub.t = n * dt
            state.push(sub.current, n * dt)
        return state
    raise ValueError(f"unknown startup mode {mode!r}")


# -- driver -----------------------------------------------------------------


def solve(
    problem: FdeProblem,
    M: int,
    k: int,
    N: int,
    *,
    startup_mode: str = "cascade",
    refine: int = 64,
    exact: Optional[Callable[[float], np.ndarray]] = None,
    step_mode: Optional[str] = None,
    factorization: str = "auto",
    picard_tol: float = 1e-15,
    picard_max_iter: int = 100,
    picard_predict: bool = True,
    store_states: bool = False,
    grid: Optional[ThetaGrid] = None,
) -> Trajectory:
    """March the collocated system from t = 0 to the horizon in N steps.

    ``step_mode`` is ``"linear"`` (factorized solve, default for linear
    problems) or ``"picard"`` (lagged F, default for nonlinear ones).
    """
    if N < k:
        raise ValueError(f"need N >= k, got N={N}, k={k}")
    if grid is None:
        grid = gauss_jacobi_grid(M, problem.alpha)
    scheme = bdf_coefficients(k)
    dt = problem.horizon / N
    step_mode = step_mode or ("linear" if problem.is_linear else "picard")
    if step_mode == "linear" and not isinstance(problem.rhs, Linear):
        raise ValueError("linear stepping needs a Linear right-hand side")
    picard = {"tol": picard_tol, "max_iter": picard_max_iter, "predict": picard_predict}

    t0 = time.perf_counter()
    state = startup(problem, grid, scheme, dt, startup_mode, refine, exact, step_mode, picard)
    lam = problem.rhs.lam if step_mode == "linear" else 0.0
    system = assemble_system(grid, scheme, dt, lam, factorization)

    phi = np.empty(N + 1)
    w = grid.weights
    for n, vec in enumerate(state.history):
        phi[n] = vec @ w
    states = None
    if store_states:
        states = np.empty((N + 1, grid.size))
        for n, vec in enumerate(state.history):
            states[n] = vec
    peak = state.buffer_size

    def record(st):
        nonlocal peak
        phi[st.n] = st.current @ w
        if states is not None:
            states[st.n] = st.current
        peak = max(peak, st.buffer_size)

    try:
        _march(state, system, problem, N - state.n, dt, step_mode, picard, record)
    except PicardError as exc:
        raise PicardError(f"step {exc.step}: {exc}", exc.residual, exc.step) from exc
    phi[0] = problem.phi0
    times = np.arange(N + 1) * dt
    info = {
        "dt": dt,
        "M": grid.M,
        "k": k,
        "startup": startup_mode,
        "step_mode": step_mode,
        "factorization": system.factorization.kind,
        "peak_state_size": peak,
        "wall_time": time.perf_counter() - t0,
        "picard_iterations": picard.get("count", 0),
    }
    return Trajectory(times, phi, states, info)
