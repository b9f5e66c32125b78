from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from hdgcurve.fe.quadrature import TriangleRule, map_triangle


def poly_dim(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def monomial_exponents(degree: int) -> np.ndarray:
    """Exponents (a, b) of x^a y^b ordered by total degree: (0,0), (1,0), (0,1), (2,0), ..."""
    rows = [(a, d - a) for d in range(degree + 1) for a in range(d, -1, -1)]
    out = np.array(rows, dtype=int).reshape(-1, 2)
    out.setflags(write=False)
    return out


def _scaled(points: np.ndarray, centers: np.ndarray, scales: np.ndarray) -> np.ndarray:
    return (points - centers[:, None, :]) / scales[:, None, None]


def scaled_monomials(points: np.ndarray, centers: np.ndarray, scales: np.ndarray, degree: int) -> np.ndarray:
    ex = monomial_exponents(degree)
    z = _scaled(points, centers, scales)
    return z[..., 0:1] ** ex[:, 0] * z[..., 1:2] ** ex[:, 1]


def scaled_monomial_gradients(
    points: np.ndarray, centers: np.ndarray, scales: np.ndarray, degree: int
) -> np.ndarray:
    ex = monomial_exponents(degree)
    a, b = ex[:, 0], ex[:, 1]
    z = _scaled(points, centers, scales)
    zx, zy = z[..., 0:1], z[..., 1:2]
    dx = a * zx ** np.maximum(a - 1, 0) * zy**b
    dy = b * zx**a * zy ** np.maximum(b - 1, 0)
    inv = (1.0 / scales)[:, None, None]
    return np.stack([dx * inv, dy * inv], axis=-1)


@dataclass(frozen=True)
class ElementBasis:
    """Per-element L2-orthonormal basis of P_degree built on scaled monomials.

    phi_i = sum_j coeffs[t, i, j] * m_j with m_j the monomials centred at the
    element centroid and scaled by its diameter. Evaluating at points outside
    the element is ordinary polynomial evaluation, i.e. the natural extension.
    """

    degree: int
    centers: np.ndarray
    scales: np.ndarray
    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return poly_dim(self.degree)

    @classmethod
    def orthonormal(cls, degree: int, corners: np.ndarray, rule: TriangleRule) -> ElementBasis:
        if rule.degree < 2 * degree:
            raise ValueError(f"rule of degree {rule.degree} cannot orthonormalize P_{degree}")
        corners = np.asarray(corners, dtype=float)
        centers = corners.mean(axis=1)
        edges = corners[:, [1, 2, 0], :] - corners
        scales = np.hypot(edges[..., 0], edges[..., 1]).max(axis=1)
        points, weights = map_triangle(corners, rule)
        m = scaled_monomials(points, centers, scales, degree)
        mass = np.einsum("tq,tqi,tqj->tij", weights, m, m)
        chol = np.linalg.cholesky(mass)
        coeffs = np.linalg.inv(chol)
        return cls(degree=degree, centers=centers, scales=scales, coeffs=coeffs)

    def _select(self, elements):
        if elements is None:
            return self.centers, self.scales, self.coeffs
        idx = np.asarray(elements, dtype=int)
        return self.centers[idx], self.scales[idx], self.coeffs[idx]

    def values(self, points: np.ndarray, elements=None) -> np.ndarray:
        """Basis values (N, P, dim) at points (N, P, 2); element i owns points[i]."""
        c, s, C = self._select(elements)
        m = scaled_monomials(np.asarray(points, dtype=float), c, s, self.degree)
        return np.einsum("npj,nij->npi", m, C)

    def gradients(self, points: np.ndarray, elements=None) -> np.ndarray:
        """Basis gradients (N, P, dim, 2)."""
        c, s, C = self._select(elements)
        dm = scaled_monomial_gradients(np.asarray(points, dtype=float), c, s, self.degree)
        return np.einsum("npjd,nij->npid", dm, C)


def extrapolate(basis: ElementBasis, element: int, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate the polynomial with the given coefficients on `element` at arbitrary points.

    coeffs has shape (dim,) for scalars or (2, dim) for vector fields; the
    result has shape (P,) or (P, 2).
    """
    pts = np.asarray(points, dtype=float).reshape(1, -1, 2)
    phi = basis.values(pts, elements=[element])[0]
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim == 1:
        return phi @ coeffs
    return phi @ coeffs.T


def edge_basis(s: np.ndarray, degree: int) -> np.ndarray:
    """Legendre basis on [0, 1], orthonormal for the unit interval; shape (..., degree+1).

    Divide by sqrt(h_e) to make it orthonormal on a face of length h_e.
    """
    s = np.asarray(s, dtype=float)
    v = legendre.legvander(2.0 * s - 1.0, degree)
    return v * np.sqrt(2.0 * np.arange(degree + 1) + 1.0)
