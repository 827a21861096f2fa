"""Built-in benchmark problems I-V.

I    D^a phi = Gamma(1+a),                    phi0 = 0, phi = t^a
II   D^a phi = -lam phi,                      phi0 = 1, phi = E_a(-lam t^a)
III  D^a phi = -lam phi + sin t,              phi0 = 1, no closed form
IV   D^a phi = -lam phi^3 + f(t),             phi0 = 0, phi = t^(2+a)
     with f = Gamma(3+a) t^2 / 2 + lam t^(6+3a)
V    D^a phi = -lam phi^3,                    phi0 = 1, no closed form
"""

from __future__ import annotations

import math
from functools import partial

from .core import FdeProblem, Linear, Nonlinear
from .mittag_leffler import exact_solution

__all__ = ["CASES", "make_case", "case_exact", "has_closed_form"]

CASES = ("I", "II", "III", "IV", "V")


def _const(value, t):
    return value


def _sin(t):
    return math.sin(t)


def _cubic(lam, forcing, t, phi):
    return -lam * phi**3 + forcing(t)


def _case4_forcing(alpha, lam, t):
    return math.gamma(3.0 + alpha) * t * t / 2.0 + lam * t ** (6.0 + 3.0 * alpha)


def _zero(t):
    return 0.0


def make_case(case_id: str, alpha: float, horizon: float = 1.0, lam: float = None) -> FdeProblem:
    """Problem instance for one of the cases I-V.

    ``lam`` defaults to 0 for case I and 1 otherwise.
    """
    case = str(case_id).upper()
    if case not in CASES:
        raise KeyError(f"unknown case {case_id!r}; choose from {', '.join(CASES)}")
    if case == "I":
        lam = 0.0 if lam is None else lam
        rhs = Linear(lam, partial(_const, math.gamma(1.0 + alpha)))
        phi0 = 0.0
    elif case == "II":
        lam = 1.0 if lam is None else lam
        rhs = Linear(lam)
        phi0 = 1.0
    elif case == "III":
        lam = 1.0 if lam is None else lam
        rhs = Linear(lam, _sin)
        phi0 = 1.0
    elif case == "IV":
        lam = 1.0 if lam is None else lam
        rhs = Nonlinear(partial(_cubic, lam, partial(_case4_forcing, alpha, lam)))
        phi0 = 0.0
    else:
        lam = 1.0 if lam is None else lam
        rhs = Nonlinear(partial(_cubic, lam, _zero))
        phi0 = 1.0
    return FdeProblem(
        alpha=float(alpha),
        phi0=phi0,
        horizon=float(horizon),
        rhs=rhs,
        name=f"case {case}",
        meta={"case": case, "lam": float(lam)},
    )


def has_closed_form(case_id: str, lam: float = None) -> bool:
    case = str(case_id).upper()
    # case I stays t^a only without reaction
    if case == "I":
        return not lam
    return case in ("II", "IV")


def case_exact(problem: FdeProblem):
    """Scalar exact solution ``t -> phi(t)`` for a built-in problem."""
    case = problem.meta.get("case")
    lam = problem.meta.get("lam", 1.0)
    if case is None or not has_closed_form(case, lam):
        raise ValueError(f"{problem.name or 'problem'} has no closed-form solution")
    return partial(exact_solution, case, problem.alpha, lam)
