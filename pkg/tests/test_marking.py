from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdgcurve.estimate.estimator import EstimatorReport
from hdgcurve.estimate.marking import mark_dorfler


def test_half_of_the_total_is_one_element():
    eta_sq = np.array([4.0, 1.0, 1.0, 1.0, 1.0])
    assert mark_dorfler(eta_sq, math.sqrt(0.5)).tolist() == [0]


def test_ties_go_to_the_lower_index():
    eta_sq = np.array([1.0, 2.0, 2.0, 1.0])
    assert mark_dorfler(eta_sq, math.sqrt(0.3)).tolist() == [1]
    assert mark_dorfler(eta_sq, math.sqrt(0.6)).tolist() == [1, 2]


def test_theta_one_marks_every_positive_indicator():
    eta_sq = np.array([0.0, 3.0, 0.0, 1e-30])
    assert mark_dorfler(eta_sq, 1.0).tolist() == [1, 3]


def test_accepts_an_estimator_report():
    terms = np.zeros((3, 5))
    terms[:, 0] = [1.0, 9.0, 0.5]
    report = EstimatorReport(terms=terms, osc_sq=np.zeros(3))
    assert mark_dorfler(report, 0.5).tolist() == [1]


def test_all_zero_marks_nothing():
    assert mark_dorfler(np.zeros(4), 0.5).size == 0


@pytest.mark.parametrize("theta", [0.0, -0.1, 1.5])
def test_rejects_theta_outside_unit_interval(theta):
    with pytest.raises(ValueError):
        mark_dorfler(np.ones(3), theta)


def test_rejects_empty_input():
    with pytest.raises(ValueError):
        mark_dorfler(np.zeros(0), 0.5)


@settings(max_examples=100, deadline=None)
@given(
    eta_sq=st.lists(st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=1e3)), min_size=1, max_size=40),
    theta=st.floats(min_value=0.05, max_value=0.99),
)
def test_marked_set_is_sufficient_and_minimal(eta_sq, theta):
    eta_sq = np.asarray(eta_sq)
    total = eta_sq.sum()
    marked = mark_dorfler(eta_sq, theta)
    assert np.all(np.diff(marked) > 0)
    if total == 0.0:
        assert marked.size == 0
        return
    target = theta**2 * total
    assert eta_sq[marked].sum() >= target * (1.0 - 1e-12)
    # no smaller set reaches the bound: the largest |M| - 1 indicators fall short
    if marked.size > 1:
        best_smaller = np.sort(eta_sq)[::-1][: marked.size - 1].sum()
        assert best_smaller < target * (1.0 + 1e-12)
