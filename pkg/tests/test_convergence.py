from __future__ import annotations

import math

import pytest

from hdgcurve.estimate.adapt import SolverSettings, solve_on_mesh
from hdgcurve.geometry.mesh import build_interior_mesh
from hdgcurve.geometry.refine import refine_uniform
from hdgcurve.presets import build_problem


def _rates(problem, k: int, h0: float, levels: int) -> list:
    """Observed orders for every consecutive pair of uniformly refined levels."""
    tri = build_interior_mesh(problem, h0)
    history = []
    for level in range(levels):
        if level:
            tri = refine_uniform(tri, problem)
        sol = solve_on_mesh(tri, problem, SolverSettings(k=k))
        history.append((tri.h_mean, sol.errors, sol.report.eta))
    out = []
    for (h0, e0, eta0), (h1, e1, eta1) in zip(history, history[1:]):
        rate = math.log(h0 / h1)
        out.append(
            {
                "u": math.log(e0.u / e1.u) / rate,
                "q": math.log(e0.q / e1.q) / rate,
                "ustar": math.log(e0.ustar / e1.ustar) / rate,
                "eta": math.log(eta0 / eta1) / rate,
            }
        )
    return out


@pytest.mark.slow
@pytest.mark.parametrize("k", [1, 2])
def test_disk_sine_converges_at_the_optimal_rates(k):
    rates = _rates(build_problem("disk_sine", k=k), k, 0.2, 4)
    assert len(rates) == 3
    # the coarsest pair is pre-asymptotic: its boundary band is coarser than target_h
    assert rates[0]["u"] >= k and rates[0]["q"] >= k
    for pair in rates[1:]:
        assert k + 0.8 <= pair["u"] <= k + 1.3
        assert k + 0.8 <= pair["q"] <= k + 1.3
        assert pair["ustar"] >= k + 1.4
        assert pair["eta"] >= k + 0.7


@pytest.mark.slow
def test_shafranov_converges():
    rates = _rates(build_problem("shafranov", k=1), 1, 0.06, 3)
    assert rates[-1]["u"] >= 1.7
    assert rates[-1]["q"] >= 1.7
