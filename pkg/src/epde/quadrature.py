"""Gauss-Jacobi collocation in the theta direction.

Nodes and weights for ``w_alpha(theta) ~ theta^-alpha (1-theta)^(alpha-1)``
on [0, 1] come from the Golub-Welsch construction: the eigenvalues of the
symmetric Jacobi matrix are the nodes, the squared first components of its
eigenvectors are the weights. The Lagrange basis on these nodes is never
formed; nodal values plus quadrature weights are all the solver needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

__all__ = [
    "ThetaGrid",
    "QuadratureError",
    "jacobi_recurrence",
    "gauss_jacobi_grid",
    "reconstruct",
]


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ThetaGrid:
    """Collocation nodes ``theta_j`` and weights ``w_j`` (sum to 1), j=0..M."""

    alpha: float
    M: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.M + 1

    def __eq__(self, other):
        if not isinstance(other, ThetaGrid):
            return NotImplemented
        return (
            self.alpha == other.alpha
            and self.M == other.M
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


def jacobi_recurrence(n: int, a: float, b: float):
    """Jacobi-matrix coefficients for the weight (1-x)^a (1+x)^b on [-1, 1].

    Returns ``(d, e)``: the ``n`` diagonal entries and the ``n - 1``
    off-diagonal entries, ``e[i-1] = sqrt(beta_i)``.

    >>> d, e = jacobi_recurrence(2, 0.0, 0.0)
    >>> float(d[0]), round(float(e[0]) ** 2, 15)
    (0.0, 0.333333333333333)
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if a <= -1 or b <= -1:
        raise ValueError(f"exponents must exceed -1, got a={a}, b={b}")
    i = np.arange(n, dtype=float)
    s = 2.0 * i + a + b
    d = np.empty(n)
    d[0] = (b - a) / (a + b + 2.0)
    if n > 1:
        d[1:] = (b * b - a * a) / (s[1:] * (s[1:] + 2.0))
    beta = np.empty(max(n - 1, 0))
    if n > 1:
        # i = 1 written separately: the general formula is 0/0 when a + b = -1.
        beta[0] = 4.0 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
        j = i[2:]
        sj = s[2:]
        beta[1:] = 4.0 * j * (j + a) * (j + b) * (j + a + b) / (sj**2 * (sj + 1) * (sj - 1))
    return d, np.sqrt(beta)


def gauss_jacobi_grid(M: int, alpha: float) -> ThetaGrid:
    """(M+1)-point Gauss rule for ``w_alpha`` on [0, 1].

    >>> g = gauss_jacobi_grid(0, 0.2)
    >>> float(g.nodes[0]), float(g.weights[0])
    (0.8, 1.0)
    """
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    n = M + 1
    d, e = jacobi_recurrence(n, alpha - 1.0, -alpha)
    if n == 1:
        x = d.copy()
        v0 = np.ones(1)
    else:
        try:
            x, vecs = eigh_tridiagonal(d, e, lapack_driver="stev")
        except LinAlgError as exc:
            raise QuadratureError(
                f"tridiagonal eigensolve failed for M={M}, alpha={alpha}: {exc}"
            ) from exc
        v0 = vecs[0]
    order = np.argsort(x)
    x = x[order]
    w = v0[order] ** 2
    w = w / w.sum()
    nodes = 0.5 * (1.0 + x)
    if not (np.all(nodes > 0) and np.all(nodes < 1) and np.all(np.diff(nodes) > 0)):
        raise QuadratureError(f"nodes not strictly interior/increasing for M={M}, alpha={alpha}")
    return ThetaGrid(alpha=float(alpha), M=int(M), nodes=nodes, weights=w)


def reconstruct(values, grid: ThetaGrid):
    """Quadrature approximation of ``C[phi] = int phi w_alpha dtheta``.

    ``values`` holds nodal values along its last axis.
    """
    values = np.asarray(values)
    if values.shape[-1] != grid.size:
        raise ValueError(
            f"expected {grid.size} nodal values along the last axis, got {values.shape[-1]}"
        )
    return values @ grid.weights
