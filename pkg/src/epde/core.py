"""Problem description for Caputo fractional ODEs and the theta-direction
coefficient functions of the extended (integer-order) reformulation.

The fractional problem is

    D^alpha phi(t) = F(t, phi(t)),  phi(0) = phi0,  0 < alpha < 1,

and its extended form evolves a family phi(t, theta), theta in (0, 1):

    d/dt phi + c1(theta) phi = c0(theta) F(t, C[phi](t)) + c1(theta) phi0,

with C[phi](t) = int_0^1 phi(t, theta) w_alpha(theta) dtheta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Union

import numpy as np

__all__ = [
    "Linear",
    "Nonlinear",
    "RhsSpec",
    "FdeProblem",
    "ThetaCoeffs",
    "ProblemError",
    "StabilityWarning",
    "theta_coefficients",
    "gamma_product",
    "validate_problem",
]


class ProblemError(ValueError):
    """Raised when a problem description is invalid.

    ``issues`` lists every failed check as ``(field, message)`` pairs so a
    caller can report all of them at once.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        text = "; ".join(f"{name}: {msg}" for name, msg in self.issues)
        super().__init__(text)


class StabilityWarning(UserWarning):
    """Parameters fall outside the regime where the scheme is proven stable."""


def _zero(t):
    return 0.0


@dataclass(frozen=True)
class Linear:
    """Right-hand side ``F(t, phi) = -lam * phi + forcing(t)``."""

    lam: float
    forcing: Callable[[float], float] = _zero

    def __call__(self, t, phi):
        return -self.lam * phi + self.forcing(t)


@dataclass(frozen=True)
class Nonlinear:
    """Right-hand side given as a general evaluator ``F(t, phi)``."""

    F: Callable[[float, float], float]

    def __call__(self, t, phi):
        return self.F(t, phi)


RhsSpec = Union[Linear, Nonlinear]


@dataclass(frozen=True)
class FdeProblem:
    alpha: float
    phi0: float
    horizon: float
    rhs: RhsSpec
    name: str = ""
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        issues = _check_fields(self.alpha, self.phi0, self.horizon, self.rhs)
        if issues:
            raise ProblemError(issues)

    @property
    def is_linear(self) -> bool:
        return isinstance(self.rhs, Linear)

    def F(self, t, phi):
        return self.rhs(t, phi)


@dataclass(frozen=True)
class ThetaCoeffs:
    c0: float
    c1: float
    w_alpha: float
    w_alpha0: float
    w_alpha1: float


def gamma_product(alpha: float) -> float:
    """Gamma(alpha) * Gamma(1 - alpha), evaluated as pi / sin(pi alpha)."""
    return math.pi / math.sin(math.pi * alpha)


def theta_coefficients(theta, alpha: float) -> ThetaCoeffs:
    """Evaluate c0, c1 and the Jacobi-type weights at ``theta``.

    Accepts a scalar or an array of thetas; every theta must lie strictly
    inside (0, 1).

    >>> tc = theta_coefficients(0.5, 0.5)
    >>> tc.c0, tc.c1
    (2.0, 1.0)
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    th = np.asarray(theta, dtype=float)
    if not np.all((th > 0.0) & (th < 1.0)):
        raise ValueError("theta must lie strictly inside (0, 1)")
    one_minus = 1.0 - th
    c0 = 1.0 / one_minus
    c1 = th * c0
    w = th ** (-alpha) * one_minus ** (alpha - 1.0) / gamma_product(alpha)
    out = (c0, c1, w, one_minus * w, th * w)
    if th.ndim == 0:
        out = tuple(float(v) for v in out)
    return ThetaCoeffs(*out)


def _check_fields(alpha, phi0, horizon, rhs):
    issues = []
    if alpha is None:
        issues.append(("alpha", "missing"))
    elif not isinstance(alpha, (int, float)) or not math.isfinite(alpha):
        issues.append(("alpha", f"not a finite number: {alpha!r}"))
    elif not 0.0 < alpha < 1.0:
        issues.append(("alpha", f"must lie in the open interval (0, 1), got {alpha}"))
    if phi0 is None:
        issues.append(("phi0", "missing"))
    elif not isinstance(phi0, (int, float)) or not math.isfinite(phi0):
        issues.append(("phi0", f"not a finite number: {phi0!r}"))
    if horizon is None:
        issues.append(("horizon", "missing"))
    elif not isinstance(horizon, (int, float)) or not math.isfinite(horizon):
        issues.append(("horizon", f"not a finite number: {horizon!r}"))
    elif horizon <= 0:
        issues.append(("horizon", f"must be positive, got {horizon}"))
    if rhs is None:
        issues.append(("rhs", "missing"))
    elif not isinstance(rhs, (Linear, Nonlinear)):
        issues.append(("rhs", f"expected Linear or Nonlinear, got {type(rhs).__name__}"))
    return issues


def validate_problem(spec: Mapping[str, Any]) -> FdeProblem:
    """Build an :class:`FdeProblem` from a loose mapping.

    Recognised keys: ``alpha``, ``phi0``, ``horizon`` (or ``T``), and either
    ``rhs`` (a ready ``Linear``/``Nonlinear``), ``lam`` plus optional
    ``forcing`` for a linear problem, or ``F`` for a nonlinear one.
    All problems are reported together in a :class:`ProblemError`.
    """
    spec = dict(spec)
    horizon = spec.get("horizon", spec.get("T"))
    rhs = spec.get("rhs")
    issues = []
    if rhs is None:
        if "F" in spec and spec["F"] is not None:
            if not callable(spec["F"]):
                issues.append(("F", "must be callable"))
            else:
                rhs = Nonlinear(spec["F"])
        elif "lam" in spec and spec["lam"] is not None:
            forcing = spec.get("forcing") or _zero
            if not callable(forcing):
                issues.append(("forcing", "must be callable"))
            try:
                lam = float(spec["lam"])
            except (TypeError, ValueError):
                issues.append(("lam", f"not a number: {spec['lam']!r}"))
                lam = None
            if lam is not None and callable(forcing):
                rhs = Linear(lam, forcing)
    alpha = spec.get("alpha")
    phi0 = spec.get("phi0")
    issues = _check_fields(alpha, phi0, horizon, rhs) + [
        i for i in issues if i[0] != "rhs"
    ]
    if issues:
        raise ProblemError(issues)
    if isinstance(rhs, Linear) and rhs.lam < 0:
        warnings.warn(
            f"lam={rhs.lam} < 0 lies outside the proven stability regime",
            StabilityWarning,
            stacklevel=2,
        )
    return FdeProblem(
        alpha=float(alpha),
        phi0=float(phi0),
        horizon=float(horizon),
        rhs=rhs,
        name=str(spec.get("name", "")),
        meta=dict(spec.get("meta", {})),
    )
