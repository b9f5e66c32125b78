from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdgcurve.fe.quadrature import QuadratureSet, gauss_points, line_rule, map_edges, map_triangle, triangle_rule


def _reference_monomial(a: int, b: int) -> float:
    # int over the unit triangle of x^a y^b
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(0, 13))
def test_line_rule_exact_up_to_degree(degree):
    rule = line_rule(degree)
    assert rule.degree >= degree
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    for p in range(degree + 1):
        assert rule.weights @ rule.points**p == pytest.approx(1.0 / (p + 1), rel=1e-13)


@pytest.mark.parametrize("degree", range(0, 13))
def test_triangle_rule_weights_and_points(degree):
    rule = triangle_rule(degree)
    assert rule.degree >= degree
    assert rule.weights.sum() == pytest.approx(0.5, rel=1e-14)
    assert np.all(rule.weights > 0.0)
    x, y = rule.points.T
    assert np.all(x >= 0.0) and np.all(y >= 0.0) and np.all(x + y <= 1.0)


@settings(max_examples=60, deadline=None)
@given(degree=st.integers(0, 12), data=st.data())
def test_triangle_rule_integrates_monomials(degree, data):
    total = data.draw(st.integers(0, degree))
    a = data.draw(st.integers(0, total))
    b = total - a
    rule = triangle_rule(degree)
    x, y = rule.points.T
    assert rule.weights @ (x**a * y**b) == pytest.approx(_reference_monomial(a, b), rel=1e-12, abs=1e-15)


def test_gauss_points_rejects_empty_rule():
    with pytest.raises(ValueError):
        gauss_points(0)
    with pytest.raises(ValueError):
        line_rule(-1)


def test_quadrature_set_orders():
    quad = QuadratureSet.for_degree(2)
    assert quad.triangle.degree >= 6
    assert quad.edge.degree >= 6
    assert quad.segment.size == 3


def test_map_triangle_weights_sum_to_area():
    corners = np.array([[[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]], [[1.0, 1.0], [1.0, 3.0], [-1.0, 2.0]]])
    pts, W = map_triangle(corners, triangle_rule(4))
    assert W.sum(axis=1) == pytest.approx([1.0, 2.0])
    # centroid is the weighted mean of the mapped points
    centroid = np.einsum("tq,tqd->td", W, pts) / W.sum(axis=1)[:, None]
    assert centroid == pytest.approx(corners.mean(axis=1))


def test_map_edges_weights_sum_to_length():
    ends = np.array([[[0.0, 0.0], [3.0, 4.0]], [[1.0, 1.0], [1.0, 0.5]]])
    pts, W = map_edges(ends, line_rule(5))
    assert W.sum(axis=1) == pytest.approx([5.0, 0.5])
    assert pts.shape == (2, line_rule(5).size, 2)
