from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class LineRule:
    """Gauss-Legendre rule on [0, 1]; weights sum to 1."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


@dataclass(frozen=True)
class TriangleRule:
    """Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def _points_for_degree(degree: int) -> int:
    if degree < 0:
        raise ValueError(f"quadrature degree must be >= 0, got {degree}")
    return max(1, (degree + 2) // 2)


@lru_cache(maxsize=None)
def gauss_points(n: int) -> LineRule:
    if n < 1:
        raise ValueError(f"need at least one Gauss point, got {n}")
    x, w = roots_legendre(n)
    return LineRule(points=0.5 * (x + 1.0), weights=0.5 * w, degree=2 * n - 1)


def line_rule(degree: int) -> LineRule:
    return gauss_points(_points_for_degree(degree))


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> TriangleRule:
    # Collapsed (Duffy) product of Gauss-Legendre in xi and Gauss-Jacobi(1, 0) in eta.
    n = _points_for_degree(degree)
    xi, w_xi = roots_legendre(n)
    t, w_t = roots_jacobi(n, 1.0, 0.0)
    xi = 0.5 * (xi + 1.0)
    eta = 0.5 * (t + 1.0)
    X = np.outer(xi, 1.0 - eta)
    Y = np.broadcast_to(eta, X.shape)
    W = np.outer(0.5 * w_xi, 0.25 * w_t)
    points = np.column_stack([X.ravel(), Y.ravel()])
    return TriangleRule(points=points, weights=W.ravel(), degree=2 * n - 1)


@dataclass(frozen=True)
class QuadratureSet:
    """The three rules one discretization of degree k needs."""

    triangle: TriangleRule
    edge: LineRule
    segment: LineRule

    @classmethod
    def for_degree(cls, k: int, *, extra: int = 0) -> QuadratureSet:
        order = 2 * k + 2 + extra
        return cls(triangle=triangle_rule(order), edge=line_rule(order), segment=gauss_points(k + 1))


def map_triangle(corners: np.ndarray, rule: TriangleRule) -> tuple[np.ndarray, np.ndarray]:
    """Physical points (nT, nq, 2) and weights (nT, nq) for corners (nT, 3, 2)."""
    corners = np.asarray(corners, dtype=float)
    a = corners[:, 0, :]
    e1 = corners[:, 1, :] - a
    e2 = corners[:, 2, :] - a
    ref = rule.points
    points = a[:, None, :] + ref[None, :, 0:1] * e1[:, None, :] + ref[None, :, 1:2] * e2[:, None, :]
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    weights = det[:, None] * rule.weights[None, :]
    return points, weights


def map_edges(ends: np.ndarray, rule: LineRule) -> tuple[np.ndarray, np.ndarray]:
    """Points (ne, nq, 2) and weights (ne, nq) on segments given by ends (ne, 2, 2)."""
    ends = np.asarray(ends, dtype=float)
    a = ends[:, 0, :]
    d = ends[:, 1, :] - a
    points = a[:, None, :] + rule.points[None, :, None] * d[:, None, :]
    lengths = np.hypot(d[:, 0], d[:, 1])
    weights = lengths[:, None] * rule.weights[None, :]
    return points, weights
