"""Quadrature on triangles in barycentric coordinates."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points ``(nq, 3)`` and weights summing to one."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


def _strang_fix_7():
    s = np.sqrt(15.0)
    a1 = (6.0 - s) / 21.0
    a2 = (6.0 + s) / 21.0
    w1 = (155.0 - s) / 1200.0
    w2 = (155.0 + s) / 1200.0
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    wts = [9.0 / 40.0]
    for a, w in ((a1, w1), (a2, w2)):
        b = 1.0 - 2.0 * a
        pts += [(b, a, a), (a, b, a), (a, a, b)]
        wts += [w, w, w]
    return QuadratureRule(np.array(pts), np.array(wts), 5)


DEGREE5 = _strang_fix_7()


def collapsed_gauss(order):
    """Tensor Gauss-Legendre rule mapped onto the triangle (Duffy transform).

    Exact for polynomials of total degree ``2 * order - 2``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    s, t = np.meshgrid(x, x, indexing="ij")
    ws, wt = np.meshgrid(w, w, indexing="ij")
    # (s, t) in the unit square -> (xi, eta) = (s, t (1 - s)) with Jacobian (1 - s)
    xi = s.ravel()
    eta = (t * (1.0 - s)).ravel()
    wts = 2.0 * (ws * wt * (1.0 - s)).ravel()
    pts = np.column_stack([1.0 - xi - eta, xi, eta])
    return QuadratureRule(pts, wts, 2 * order - 2)
