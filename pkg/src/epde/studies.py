"""Convergence studies in dt and in M.

Errors are measured at the horizon, ``|phi_num(T) - phi_ref(T)|``, or as a
maximum over the common time grid (``norm="max"``). References:

* ``exact``: the closed form of a built-in case.
* ``semidiscrete``: the time-exact solution of the same theta-collocated
  system (same M), see :func:`epde.stepper.exact_states`. It isolates the
  temporal error from the theta-quadrature error, which otherwise puts a
  floor of ~1e-12 under the BDF-4/5 errors.
* ``self``: the same scheme at ``dt_min / 16`` and ``M + 10``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cases import case_exact, has_closed_form
from .core import FdeProblem
from .quadrature import gauss_jacobi_grid
from .stepper import exact_states, solve

__all__ = [
    "ConvergenceRow",
    "ConvergenceTable",
    "MConvergenceTable",
    "ReferenceUnavailable",
    "observed_orders",
    "fitted_slope",
    "run_convergence",
    "run_mconvergence",
    "REFERENCES",
]

REFERENCES = ("auto", "exact", "semidiscrete", "self")
SELF_REF_REFINE = 16
SELF_REF_EXTRA_M = 10


class ReferenceUnavailable(ValueError):
    """No reference solution is available for the requested study."""


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    N: int
    error: float
    observed_order: float  # nan on the first row


@dataclass
class ConvergenceTable:
    rows: list
    slope: float
    reference: str
    info: dict = field(default_factory=dict)

    @property
    def errors(self):
        return np.array([r.error for r in self.rows])

    @property
    def dts(self):
        return np.array([r.dt for r in self.rows])


@dataclass
class MConvergenceTable:
    Ms: list
    errors: list
    ratio: float  # error(M_max) / error(M_min)
    reference: str
    info: dict = field(default_factory=dict)


def observed_orders(dts, errors):
    """``log(e_{i-1}/e_i) / log(dt_{i-1}/dt_i)``; log2 of the error ratio for halving.

    >>> [round(float(x), 12) for x in observed_orders([0.1, 0.05], [4e-4, 1e-4])[1:]]
    [2.0]
    """
    dts = np.asarray(dts, dtype=float)
    errors = np.asarray(errors, dtype=float)
    out = np.full(dts.size, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[1:] = np.log(errors[:-1] / errors[1:]) / np.log(dts[:-1] / dts[1:])
    return out


def fitted_slope(dts, errors, last: int = 4) -> float:
    """Least-squares slope of log(error) against log(dt) over the last rows."""
    dts = np.asarray(dts, dtype=float)[-last:]
    errors = np.asarray(errors, dtype=float)[-last:]
    if dts.size < 2 or np.any(errors <= 0) or not np.all(np.isfinite(errors)):
        return math.nan
    return float(np.polyfit(np.log(dts), np.log(errors), 1)[0])


def _resolve_reference(problem, reference):
    if reference not in REFERENCES:
        raise ValueError(f"reference must be one of {REFERENCES}, got {reference!r}")
    if reference == "auto":
        case = problem.meta.get("case")
        if case is not None and has_closed_form(case, problem.meta.get("lam")):
            return "exact"
        raise ReferenceUnavailable(
            f"{problem.name or 'this problem'} has no closed-form solution; "
            "pass --self-reference (or reference='self') to use a fine-step run"
        )
    if reference == "exact":
        case = problem.meta.get("case")
        if case is None or not has_closed_form(case, problem.meta.get("lam")):
            raise ReferenceUnavailable(
                f"{problem.name or 'this problem'} has no closed-form solution; "
                "pass --self-reference (or reference='self') to use a fine-step run"
            )
    return reference


def _check_steps(Ns, horizon):
    Ns = [int(n) for n in Ns]
    if len(Ns) < 3:
        raise ValueError(f"a convergence study needs at least 3 step counts, got {len(Ns)}")
    if any(n < 1 for n in Ns) or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError(f"step counts must be positive and increasing, got {Ns}")
    return Ns


def steps_from_dts(dts, horizon):
    """Step counts for a dt list; every dt must divide the horizon."""
    out = []
    for dt in dts:
        n = horizon / float(dt)
        if not dt > 0 or abs(n - round(n)) > 1e-9 * n:
            raise ValueError(f"dt={dt} does not divide the horizon {horizon}")
        out.append(int(round(n)))
    return out


def run_convergence(
    problem: FdeProblem,
    k: int,
    M: int,
    Ns: Sequence[int],
    *,
    startup: str = "exact",
    reference: str = "auto",
    norm: str = "endpoint",
    refine: int = 64,
    picard_tol: float = 1e-15,
    picard_max_iter: int = 100,
) -> ConvergenceTable:
    """One solve per step count at fixed M; errors against ``reference``.

    The table's ``slope`` is the least-squares slope over its last 4 rows.
    """
    if norm not in ("endpoint", "max"):
        raise ValueError(f"norm must be 'endpoint' or 'max', got {norm!r}")
    Ns = _check_steps(Ns, problem.horizon)
    ref_kind = _resolve_reference(problem, reference)
    T = problem.horizon
    grid = gauss_jacobi_grid(M, problem.alpha)
    states = exact_states(problem, grid) if (startup == "exact" or ref_kind == "semidiscrete") else None
    opts = dict(refine=refine, picard_tol=picard_tol, picard_max_iter=picard_max_iter)

    ref_fn = None
    ref_final = None
    ref_traj = None
    if ref_kind == "exact":
        ref_fn = case_exact(problem)
        ref_final = ref_fn(T)
    elif ref_kind == "semidiscrete":
        if norm == "max":
            raise ValueError("the max norm needs an exact or self reference")
        ref_final = float(grid.weights @ states(T))
    else:
        M_ref = M + SELF_REF_EXTRA_M
        N_ref = Ns[-1] * SELF_REF_REFINE
        grid_ref = gauss_jacobi_grid(M_ref, problem.alpha)
        ref_states = exact_states(problem, grid_ref) if startup == "exact" else None
        ref_traj = solve(
            problem, M_ref, k, N_ref, startup_mode=startup, exact=ref_states, grid=grid_ref, **opts
        )
        ref_final = ref_traj.final
        if norm == "max" and any(N_ref % n for n in Ns):
            raise ValueError("the max norm with a self reference needs step counts dividing the reference count")

    rows_dt, errs, infos = [], [], []
    for N in Ns:
        tr = solve(problem, M, k, N, startup_mode=startup, exact=states, grid=grid, **opts)
        if norm == "endpoint":
            err = abs(tr.final - ref_final)
        elif ref_fn is not None:
            err = float(np.max(np.abs(tr.phi - np.asarray(ref_fn(tr.times)))))
        else:
            stride = (len(ref_traj.phi) - 1) // N
            err = float(np.max(np.abs(tr.phi - ref_traj.phi[::stride])))
        rows_dt.append(T / N)
        errs.append(err)
        infos.append(tr.info)
    orders = observed_orders(rows_dt, errs)
    rows = [ConvergenceRow(dt, N, e, o) for dt, N, e, o in zip(rows_dt, Ns, errs, orders)]
    info = {
        "k": k,
        "M": M,
        "startup": startup,
        "norm": norm,
        "alpha": problem.alpha,
        "T": T,
        "wall_time": sum(i["wall_time"] for i in infos),
        "picard_iterations": sum(i["picard_iterations"] for i in infos),
    }
    return ConvergenceTable(rows, fitted_slope(rows_dt, errs), ref_kind, info)


def run_mconvergence(
    problem: FdeProblem,
    Ms: Sequence[int],
    *,
    k: int = 3,
    dt: Optional[float] = None,
    startup: str = "exact",
    reference: str = "auto",
) -> MConvergenceTable:
    """Error at the horizon against the reference for each M, at a fixed small dt."""
    Ms = [int(m) for m in Ms]
    if len(Ms) < 2:
        raise ValueError("an M study needs at least 2 values of M")
    if any(m < 0 for m in Ms) or any(b <= a for a, b in zip(Ms, Ms[1:])):
        raise ValueError(f"M values must be non-negative and increasing, got {Ms}")
    if reference == "semidiscrete":
        raise ValueError("a semidiscrete reference has the same M as the run; use exact or self")
    ref_kind = _resolve_reference(problem, reference)
    T = problem.horizon
    dt = 1e-4 * T if dt is None else float(dt)
    N = int(round(T / dt))
    if N < k or abs(N * dt - T) > 1e-9 * T:
        raise ValueError(f"dt={dt} must divide the horizon {T} into at least k steps")

    if ref_kind == "exact":
        ref = case_exact(problem)(T)
    else:
        M_ref = Ms[-1] + SELF_REF_EXTRA_M
        g = gauss_jacobi_grid(M_ref, problem.alpha)
        st = exact_states(problem, g) if startup == "exact" else None
        ref = solve(problem, M_ref, k, N, startup_mode=startup, exact=st, grid=g).final
    errors = []
    for M in Ms:
        g = gauss_jacobi_grid(M, problem.alpha)
        st = exact_states(problem, g) if startup == "exact" else None
        errors.append(abs(solve(problem, M, k, N, startup_mode=startup, exact=st, grid=g).final - ref))
    ratio = errors[-1] / errors[0] if errors[0] > 0 else math.nan
    info = {"k": k, "dt": dt, "N": N, "startup": startup, "alpha": problem.alpha, "T": T}
    return MConvergenceTable(Ms, errors, ratio, ref_kind, info)
