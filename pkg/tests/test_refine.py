from __future__ import annotations

import numpy as np
import pytest

from hdgcurve.geometry.levelset import evaluate
from hdgcurve.geometry.mesh import build_interior_mesh
from hdgcurve.geometry.refine import refine, refine_uniform


def _boundary_length(tri) -> float:
    return float(tri.face_lengths[tri.boundary_faces].sum())


def test_marking_one_element_splits_across_the_refinement_edge(square_tri, square_linear):
    fine = refine(square_tri, [0], square_linear)
    # the diagonal is the refinement edge of both triangles, so both split
    assert fine.n_elements == 4
    assert fine.n_vertices == 5
    assert fine.vertices[4] == pytest.approx([0.5, 0.5])
    assert np.all(fine.generation == 1)
    assert fine.parent.tolist() == [0, 0, 1, 1]
    assert fine.areas.sum() == pytest.approx(1.0)
    assert _boundary_length(fine) == pytest.approx(4.0)


def test_repeated_local_refinement_stays_conforming(square_tri, square_linear):
    tri = square_tri
    rng = np.random.default_rng(7)
    for _ in range(6):
        marked = rng.choice(tri.n_elements, size=max(1, tri.n_elements // 4), replace=False)
        tri = refine(tri, marked, square_linear)
        # a hanging node would open an extra boundary inside the square
        assert _boundary_length(tri) == pytest.approx(4.0)
        assert tri.areas.sum() == pytest.approx(1.0)
        tri.check_conforming()
    # bisecting right isosceles triangles only produces right isosceles triangles
    assert tri.shape_regularity == pytest.approx(square_tri.shape_regularity, rel=1e-9)


def test_marked_elements_are_refined(square_tri, square_linear):
    tri = refine_uniform(square_tri, square_linear)
    fine = refine(tri, [2], square_linear)
    children = np.flatnonzero(fine.parent == 2)
    assert children.size >= 2
    assert fine.areas[children].sum() == pytest.approx(tri.areas[2])


def test_uniform_refinement_halves_h(square_tri, square_linear):
    fine = refine_uniform(square_tri, square_linear)
    assert fine.n_elements == 4 * square_tri.n_elements
    assert fine.h == pytest.approx(0.5 * square_tri.h)
    assert np.all(fine.generation == 2)
    assert np.bincount(fine.parent).tolist() == [4, 4]


def test_refine_rejects_bad_marks(square_tri, square_linear):
    with pytest.raises(ValueError):
        refine(square_tri, [], square_linear)
    with pytest.raises(IndexError):
        refine(square_tri, [2], square_linear)
    with pytest.raises(IndexError):
        refine(square_tri, [-1], square_linear)


def test_snapped_boundary_vertices_land_on_the_circle(disk_mesh, disk_sine):
    fine = refine_uniform(disk_mesh, disk_sine)
    fine.check_conforming()
    phi = evaluate(disk_sine.levelset, fine.vertices)
    assert phi.max() <= 1e-10
    assert np.abs(phi[fine.boundary_vertices]).max() <= 1e-10
    # the snapped polygon hugs the circle more closely than the coarse one
    assert fine.areas.sum() > disk_mesh.areas.sum()
    assert fine.areas.sum() < np.pi


def test_midpoint_refinement_keeps_the_polygon(disk_mesh, disk_sine):
    fine = refine_uniform(disk_mesh, disk_sine, snap=False)
    assert fine.areas.sum() == pytest.approx(disk_mesh.areas.sum(), rel=1e-12)
    new = np.arange(disk_mesh.n_vertices, fine.n_vertices)
    new_boundary = np.intersect1d(new, fine.boundary_vertices)
    assert new_boundary.size == disk_mesh.boundary_faces.size
    assert np.all(evaluate(disk_sine.levelset, fine.vertices[new_boundary]) < 0.0)


def test_mean_size_halves_under_uniform_refinement(disk_mesh, disk_sine, square_tri, square_linear):
    fine = refine_uniform(square_tri, square_linear)
    assert fine.h_mean == pytest.approx(0.5 * square_tri.h_mean)
    # snapping only adds the thin slivers between chords and the circle
    disk_fine = refine_uniform(disk_mesh, disk_sine)
    assert disk_fine.h_mean == pytest.approx(0.5 * disk_mesh.h_mean, rel=0.02)
    assert disk_fine.h_mean <= disk_fine.h


def test_marking_everything_doubles_a_compatibly_labelled_mesh(square_tri, square_linear):
    tri = square_tri
    counts = [tri.n_elements]
    for _ in range(4):
        tri = refine(tri, np.arange(tri.n_elements), square_linear)
        tri.check_conforming()
        counts.append(tri.n_elements)
    assert counts == [2, 4, 8, 16, 32]


def test_marking_everything_on_a_longest_edge_labelling(square_linear):
    # Delaunay meshes label the longest edge, which neighbours need not share: closure adds bisections
    tri = build_interior_mesh(square_linear, 0.25)
    fine = refine(tri, np.arange(tri.n_elements), square_linear)
    fine.check_conforming()
    assert fine.n_elements >= 2 * tri.n_elements
    assert np.all(np.bincount(fine.parent, minlength=tri.n_elements) >= 2)
    assert refine_uniform(tri, square_linear).n_elements == 4 * tri.n_elements
