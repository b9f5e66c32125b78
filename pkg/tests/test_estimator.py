from __future__ import annotations

import numpy as np
import pytest

from hdgcurve.estimate.adapt import SolverSettings, solve_on_mesh
from hdgcurve.estimate.estimator import TERM_NAMES, element_patches, estimate, local_efficiency_ratios
from hdgcurve.fe.norms import error_norms
from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.refine import refine_uniform
from hdgcurve.hdg.state import HdgState
from hdgcurve.presets import build_problem


@pytest.fixture(scope="module")
def disk_solution(disk_mesh, disk_sine):
    return solve_on_mesh(disk_mesh, disk_sine, SolverSettings(k=1))


@pytest.mark.parametrize("preset,k", [("square_linear", 1), ("square_linear", 2), ("square_poly", 2), ("square_poly", 3)])
def test_estimator_vanishes_for_reproduced_solutions(square_mesh, preset, k):
    problem = build_problem(preset, k=k)
    sol = solve_on_mesh(square_mesh, problem, SolverSettings(k=k))
    scale = 4.0**k
    assert sol.report.eta <= 1e-9 * scale
    assert sol.report.osc <= 1e-9 * scale


def test_terms_and_totals(disk_solution):
    report = disk_solution.report
    assert report.terms.shape == (disk_solution.tri.n_elements, len(TERM_NAMES))
    assert np.all(report.terms >= 0.0)
    assert report.eta == pytest.approx(np.sqrt(report.terms.sum()))
    assert report.eta_T == pytest.approx(np.sqrt(report.terms.sum(axis=1)))
    # only elements touching the boundary carry the boundary term
    boundary = report.term("boundary")
    touching = np.unique(disk_solution.tmap.elements)
    assert np.all(boundary[np.setdiff1d(np.arange(boundary.size), touching)] == 0.0)
    assert np.all(boundary[touching] > 0.0)


def test_effectivity_is_bounded(disk_solution):
    report = disk_solution.report
    assert np.isfinite(report.effectivity)
    assert 0.1 < report.effectivity < 100.0
    ratios = local_efficiency_ratios(disk_solution.space, disk_solution.tmap, report)
    assert np.all(np.isfinite(ratios))
    assert np.all(ratios >= 0.0)


def test_patches_hold_face_neighbours(square_tri):
    patches = element_patches(PolySpace.build(square_tri, 1))
    assert [p.tolist() for p in patches] == [[0, 1], [1, 0]]


def test_estimate_needs_postprocessed_solution(disk_solution, disk_sine):
    bare = HdgState(
        k=1,
        q=disk_solution.state.q,
        u=disk_solution.state.u,
        uhat=disk_solution.state.uhat,
        tau=disk_solution.state.tau,
    )
    with pytest.raises(ValueError):
        estimate(disk_solution.space, disk_solution.tmap, bare, disk_sine)


def test_saved_state_gives_the_same_estimate(tmp_path, disk_solution, disk_sine):
    path = disk_solution.state.save(tmp_path / "state.npz")
    loaded = HdgState.load(path)
    errors = error_norms(disk_solution.space, disk_solution.tmap, loaded, disk_sine)
    again = estimate(disk_solution.space, disk_solution.tmap, loaded, disk_sine, errors=errors)
    assert again.eta == pytest.approx(disk_solution.report.eta, rel=1e-13)
    assert again.osc == pytest.approx(disk_solution.report.osc, rel=1e-13)
    assert errors.e_h == pytest.approx(disk_solution.errors.e_h, rel=1e-13)


@pytest.mark.slow
def test_effectivity_is_stable_under_refinement(disk_mesh, disk_sine):
    tri = disk_mesh
    effectivity, upper = [], []
    for level in range(4):
        if level:
            tri = refine_uniform(tri, disk_sine)
        sol = solve_on_mesh(tri, disk_sine, SolverSettings(k=1))
        effectivity.append(sol.report.effectivity)
        ratios = local_efficiency_ratios(sol.space, sol.tmap, sol.report)
        upper.append(float(np.percentile(ratios, 95)))
    assert max(effectivity) / min(effectivity) <= 3.0
    for coarse, fine in zip(upper, upper[1:]):
        assert 0.5 <= fine / coarse <= 2.0
