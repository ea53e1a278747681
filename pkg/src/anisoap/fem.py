"""Biquadratic tensor-product basis and Gauss quadrature on the reference square.

The reference element is [-1,1]^2 with the 3x3 node lattice {-1,0,1}^2 and
lexicographic local numbering (local index a = 3*j + i).  Physical elements
are affine images, so Jacobians are constant per element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import Grid


@dataclass(frozen=True)
class QuadRule:
    """Tensor-product quadrature on [-1,1]^2: points (n,2), weights (n,)."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.weights)


def _tensor_rule(x1d: np.ndarray, w1d: np.ndarray) -> QuadRule:
    X, Y = np.meshgrid(x1d, x1d, indexing="ij")
    W = np.outer(w1d, w1d)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return QuadRule(points=pts, weights=W.ravel())


def gauss_rule() -> QuadRule:
    """The 3x3 Gauss rule used for matrix assembly, exact through degree 5.

    1D nodes are {-sqrt(3/5), 0, +sqrt(3/5)} with weights {5/9, 8/9, 5/9}.
    """
    r = np.sqrt(3.0 / 5.0)
    return _tensor_rule(np.array([-r, 0.0, r]),
                        np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]))


def error_quad_rule(order: int = 4) -> QuadRule:
    """Gauss rule with ``order`` points per direction for error integration.

    Order 3 returns exactly the assembly rule; orders 4 and 5 give one and
    two extra degrees so that quadrature error stays below discretization
    error in reported norms.
    """
    if order == 3:
        return gauss_rule()
    if order in (4, 5):
        x, w = np.polynomial.legendre.leggauss(order)
        return _tensor_rule(x, w)
    raise ConfigurationError(f"unsupported error quadrature order {order}")


def _shape1d(t):
    """Values of the three 1D quadratics with nodes {-1,0,1} at t."""
    t = np.asarray(t, dtype=float)
    return np.stack([0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)], axis=-1)


def _dshape1d(t):
    t = np.asarray(t, dtype=float)
    ones = np.ones_like(t)
    return np.stack([t - 0.5 * ones, -2.0 * t, t + 0.5 * ones], axis=-1)


def shape_eval(local_index: int, xi, eta):
    """Value and reference gradient of local basis function ``local_index``.

    Returns ``(value, d/dxi, d/deta)``; inputs may be scalars or arrays.
    """
    if not 0 <= local_index <= 8:
        raise IndexError(f"local basis index {local_index} out of range 0..8")
    i, j = local_index % 3, local_index // 3
    nx, ny = _shape1d(xi)[..., i], _shape1d(eta)[..., j]
    dnx, dny = _dshape1d(xi)[..., i], _dshape1d(eta)[..., j]
    return nx * ny, dnx * ny, nx * dny


def shape_table(rule: QuadRule):
    """Tabulate all 9 basis functions at the rule points.

    Returns arrays ``(N, dXi, dEta)`` each of shape (n_points, 9).
    """
    xi, eta = rule.points[:, 0], rule.points[:, 1]
    nx, ny = _shape1d(xi), _shape1d(eta)
    dnx, dny = _dshape1d(xi), _dshape1d(eta)
    N = np.empty((rule.n, 9))
    dXi = np.empty((rule.n, 9))
    dEta = np.empty((rule.n, 9))
    for a in range(9):
        i, j = a % 3, a // 3
        N[:, a] = nx[:, i] * ny[:, j]
        dXi[:, a] = dnx[:, i] * ny[:, j]
        dEta[:, a] = nx[:, i] * dny[:, j]
    return N, dXi, dEta


def map_to_element(grid: Grid, ex: int, ey: int, xi, eta):
    """Affine map of the reference square onto element (ex, ey).

    Returns ``(x, y, det, inv_jac)`` with ``det = hx*hy`` and the constant
    inverse Jacobian as a (2,2) array.
    """
    xc = grid.xmin + grid.hx * (2 * ex + 1)
    yc = grid.ymin + grid.hy * (2 * ey + 1)
    x = xc + grid.hx * np.asarray(xi)
    y = yc + grid.hy * np.asarray(eta)
    det = grid.hx * grid.hy
    inv_jac = np.array([[1.0 / grid.hx, 0.0], [0.0, 1.0 / grid.hy]])
    return x, y, det, inv_jac
