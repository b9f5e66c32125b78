from __future__ import annotations

import numpy as np
import pytest

from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.transfer import construct_transfer_map
from hdgcurve.hdg.postprocess import LocalNoConvergence, local_postprocess, postprocess_state
from hdgcurve.hdg.solve import picard_solve


@pytest.fixture(scope="module")
def disk_solution(disk_mesh, disk_sine):
    space = PolySpace.build(disk_mesh, 1)
    tmap = construct_transfer_map(disk_mesh, disk_sine, 1)
    state, _ = picard_solve(space, tmap, disk_sine)
    return space, state


@pytest.mark.parametrize("k", [1, 2])
def test_linear_data_is_recovered_exactly(square_mesh, square_linear, k):
    space = PolySpace.build(square_mesh, k)
    tmap = construct_transfer_map(square_mesh, square_linear, k)
    state, _ = picard_solve(space, tmap, square_linear)
    post = local_postprocess(space, state, square_linear)
    x, y = space.points[..., 0], space.points[..., 1]
    assert space.star_at_points(post.ustar) == pytest.approx(square_linear.exact.u(x, y), abs=1e-10)
    assert post.sweeps <= 2


def test_element_means_are_kept(disk_solution, disk_sine):
    space, state = disk_solution
    post = local_postprocess(space, state, disk_sine)
    W = space.weights
    mean_star = np.einsum("tq,tq->t", W, space.star_at_points(post.ustar))
    mean_u = np.einsum("tq,tq->t", W, space.scalar_at_points(state.u))
    assert mean_star == pytest.approx(mean_u, abs=1e-12)


def test_sweeps_contract(disk_solution, disk_sine):
    space, state = disk_solution
    post = local_postprocess(space, state, disk_sine)
    assert post.sweeps > 1
    assert np.all(post.contraction < 1.0)
    assert post.lipschitz_h2 == pytest.approx(disk_sine.lipschitz * space.tri.diameters**2)
    # the fixed point map contracts like L h_T^2 up to a Poincare constant
    assert post.contraction.max() <= post.lipschitz_h2.max()


def test_postprocessed_solution_is_closer(disk_solution, disk_sine):
    space, state = disk_solution
    post_state = postprocess_state(space, state, disk_sine)
    x, y = space.points[..., 0], space.points[..., 1]
    exact = disk_sine.exact.u(x, y)
    err_u = np.einsum("tq,tq->", space.weights, (space.scalar_at_points(state.u) - exact) ** 2)
    err_star = np.einsum("tq,tq->", space.weights, (space.star_at_points(post_state.ustar) - exact) ** 2)
    assert err_star < err_u


def test_sweep_limit_raises(disk_solution, disk_sine):
    space, state = disk_solution
    with pytest.raises(LocalNoConvergence) as info:
        local_postprocess(space, state, disk_sine, max_iters=1)
    assert info.value.elements.size > 0
