from __future__ import annotations

from typing import Union

import numpy as np

from hdgcurve.estimate.estimator import EstimatorReport


def mark_dorfler(report: Union[EstimatorReport, np.ndarray], theta: float) -> np.ndarray:
    """Smallest set M with sum_{T in M} eta_T^2 >= theta^2 eta^2, sorted ascending.

    Greedy on eta_T^2 in decreasing order, ties to the lower element index.
    With theta = 1 every element with eta_T > 0 is marked. `report` may be
    an EstimatorReport or an array of squared indicators.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    eta_sq = report.eta_sq if isinstance(report, EstimatorReport) else np.asarray(report, dtype=float)
    if eta_sq.size == 0:
        raise ValueError("cannot mark an empty estimator")
    if theta == 1.0:
        return np.flatnonzero(eta_sq > 0.0)
    total = eta_sq.sum()
    if total <= 0.0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(-eta_sq, kind="stable")
    cum = np.cumsum(eta_sq[order])
    # relative slack so theta = sqrt(c) hits the bound c exactly
    target = theta**2 * total * (1.0 - 8.0 * np.finfo(float).eps)
    count = int(np.searchsorted(cum, target, side="left")) + 1
    return np.sort(order[: min(count, order.size)])
