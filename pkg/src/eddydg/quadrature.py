"""Quadrature rules on the reference simplices.

Conical product construction: 1D Gauss-Jacobi rules are tensorized and
collapsed onto the simplex (Duffy map), with the collapse Jacobian
absorbed into the Jacobi weights.  This yields rules of any requested
exactness degree whose points lie strictly inside the reference cell.

Reference cells:
    segment      [0, 1]                                measure 1
    triangle     conv{(0,0), (1,0), (0,1)}             measure 1/2
    tetrahedron  conv{0, e1, e2, e3}                   measure 1/6
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = ["QuadratureRule", "rule_segment", "rule_triangle", "rule_tet"]

#: measure of each reference cell, keyed by rule kind
REFERENCE_MEASURE = {"segment": 1.0, "triangle": 0.5, "tetrahedron": 1.0 / 6.0}


@dataclass(frozen=True)
class QuadratureRule:
    """Positive quadrature rule on a reference simplex.

    Attributes
    ----------
    kind : str
        One of ``"segment"``, ``"triangle"``, ``"tetrahedron"``.
    degree : int
        Total polynomial degree integrated exactly.
    points : ndarray, shape (nq, dim)
        Points in reference coordinates, strictly inside the cell.
    weights : ndarray, shape (nq,)
        Positive weights summing to the reference measure.
    """

    kind: str
    degree: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def barycentric(self):
        """Barycentric coordinates, shape (nq, dim + 1).

        First coordinate belongs to the origin vertex, the rest follow
        the coordinate vertices in order.
        """
        lam0 = 1.0 - self.points.sum(axis=1)
        return np.column_stack([lam0, self.points])


def _freeze(rule):
    rule.points.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


def _gauss_jacobi01(n, alpha):
    """n-point Gauss rule on [0,1] with weight (1-t)^alpha."""
    if alpha == 0:
        x, w = np.polynomial.legendre.leggauss(n)
    else:
        x, w = roots_jacobi(n, alpha, 0.0)
    # map [-1,1] -> [0,1]; dt = dx/2 and (1-x)^alpha = 2^alpha (1-t)^alpha
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


def _npoints(degree):
    # n-point Gauss is exact to 2n-1
    return max(1, (degree + 2) // 2)


@lru_cache(maxsize=None)
def rule_segment(degree):
    """Gauss-Legendre rule on [0,1] exact to the given total degree."""
    t, w = _gauss_jacobi01(_npoints(degree), 0)
    return _freeze(QuadratureRule("segment", degree, t.reshape(-1, 1), w))


@lru_cache(maxsize=None)
def rule_triangle(degree):
    """Conical product rule on the reference triangle."""
    n = _npoints(degree)
    tx, wx = _gauss_jacobi01(n, 0)
    ty, wy = _gauss_jacobi01(n, 1)  # (1-t) collapse Jacobian
    xi, eta = np.meshgrid(tx, ty, indexing="ij")
    points = np.column_stack([(xi * (1.0 - eta)).ravel(), eta.ravel()])
    weights = np.outer(wx, wy).ravel()
    return _freeze(QuadratureRule("triangle", degree, points, weights))


@lru_cache(maxsize=None)
def rule_tet(degree):
    """Conical product rule on the reference tetrahedron."""
    n = _npoints(degree)
    tx, wx = _gauss_jacobi01(n, 0)
    ty, wy = _gauss_jacobi01(n, 1)
    tz, wz = _gauss_jacobi01(n, 2)  # (1-t)^2 collapse Jacobian
    xi, eta, zeta = np.meshgrid(tx, ty, tz, indexing="ij")
    x = xi * (1.0 - eta) * (1.0 - zeta)
    y = eta * (1.0 - zeta)
    points = np.column_stack([x.ravel(), y.ravel(), zeta.ravel()])
    weights = (
        wx[:, None, None] * wy[None, :, None] * wz[None, None, :]
    ).ravel()
    return _freeze(QuadratureRule("tetrahedron", degree, points, weights))
