from __future__ import annotations

import numpy as np
import pytest

from hdgcurve.fe import SingularProjection
from hdgcurve.fe.projection import hdg_project, l2_project, l2_project_vector
from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.refine import refine_uniform


def _u(x, y):
    return 1.0 + x - 2.0 * y + 0.5 * x * y + 0.25 * x**2


def _q(x, y):
    return np.stack([-(1.0 + 0.5 * y + 0.5 * x), -(-2.0 + 0.5 * x)], axis=-1)


def _smooth_u(x, y):
    return np.sin(2.0 * x) * np.cos(y)


def _smooth_q(x, y):
    return -np.stack([2.0 * np.cos(2.0 * x) * np.cos(y), -np.sin(2.0 * x) * np.sin(y)], axis=-1)


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("tau", [1.0, 10.0, (0.0, 1.0, 3.0)])
def test_hdg_projection_reproduces_polynomial_data(square_tri, k, tau):
    space = PolySpace.build(square_tri, k)
    for t in range(square_tri.n_elements):
        Pq, Pu = hdg_project(space, t, _q, _u, tau)
        pts = space.points[t]
        assert space.phi[t] @ Pu == pytest.approx(_u(pts[:, 0], pts[:, 1]), abs=1e-12)
        assert (space.phi[t] @ Pq.T) == pytest.approx(_q(pts[:, 0], pts[:, 1]), abs=1e-12)


def test_hdg_projection_rejects_negative_or_zero_tau(square_tri):
    space = PolySpace.build(square_tri, 1)
    with pytest.raises(SingularProjection):
        hdg_project(space, 0, _q, _u, -1.0)
    with pytest.raises(SingularProjection):
        hdg_project(space, 0, _q, _u, 0.0)


def test_l2_projection_of_polynomials_is_exact(square_tri):
    space = PolySpace.build(square_tri, 2)
    u = l2_project(space, _u)
    q = l2_project_vector(space, _q)
    x, y = space.points[..., 0], space.points[..., 1]
    assert space.scalar_at_points(u) == pytest.approx(_u(x, y), abs=1e-12)
    assert space.vector_at_points(q) == pytest.approx(_q(x, y), abs=1e-12)


@pytest.mark.parametrize("k", [1, 2])
def test_hdg_projection_error_order(square_tri, square_linear, k):
    errs, hs = [], []
    tri = square_tri
    for _ in range(4):
        tri = refine_uniform(tri, square_linear)
        space = PolySpace.build(tri, k)
        eu = eq = 0.0
        for t in range(tri.n_elements):
            Pq, Pu = hdg_project(space, t, _smooth_q, _smooth_u, 1.0)
            pts, W = space.points[t], space.weights[t]
            eu += W @ (space.phi[t] @ Pu - _smooth_u(pts[:, 0], pts[:, 1])) ** 2
            eq += W @ ((space.phi[t] @ Pq.T - _smooth_q(pts[:, 0], pts[:, 1])) ** 2).sum(axis=1)
        errs.append((np.sqrt(eu), np.sqrt(eq)))
        hs.append(tri.h)
    (eu0, eq0), (eu1, eq1) = errs[-2], errs[-1]
    rate = np.log(hs[-2] / hs[-1])
    assert np.log(eu0 / eu1) / rate >= k + 0.9
    assert np.log(eq0 / eq1) / rate >= k + 0.9
