from __future__ import annotations

import numpy as np
import pytest

from hdgcurve.geometry.domains import AnnulusSectorDomain
from hdgcurve.geometry.levelset import evaluate
from hdgcurve.geometry.mesh import (
    BOUNDARY,
    InvertedElement,
    MeshFormatError,
    MeshTopologyError,
    Triangulation,
    build_interior_mesh,
    read_mesh,
    write_mesh,
)
from hdgcurve.presets import build_problem


def test_two_triangle_topology(square_tri):
    assert square_tri.n_faces == 5
    assert square_tri.boundary_faces.size == 4
    assert square_tri.interior_faces.size == 1
    (f,) = square_tri.interior_faces
    assert tuple(square_tri.faces[f]) == (0, 2)
    assert square_tri.neighbours[0, 0] == 1 and square_tri.neighbours[1, 0] == 0
    assert np.all(square_tri.neighbours[:, 1:] == BOUNDARY)
    assert square_tri.areas == pytest.approx([0.5, 0.5])
    assert square_tri.h == pytest.approx(np.sqrt(2.0))


def test_normals_point_outward(square_tri):
    centroids = square_tri.corners.mean(axis=1)
    for t in range(square_tri.n_elements):
        for l, f in enumerate(square_tri.element_faces[t]):
            mid = square_tri.vertices[square_tri.faces[f]].mean(axis=0)
            assert square_tri.normals[t, l] @ (mid - centroids[t]) > 0.0
    assert np.hypot(*square_tri.normals.reshape(-1, 2).T) == pytest.approx(np.ones(6))


def test_rejects_clockwise_and_malformed_input():
    v = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InvertedElement):
        Triangulation(vertices=v, triangles=np.array([[0, 2, 1]]))
    with pytest.raises(MeshTopologyError):
        Triangulation(vertices=v, triangles=np.array([[0, 1, 3]]))
    with pytest.raises(MeshTopologyError):
        Triangulation(vertices=v, triangles=np.zeros((0, 3), dtype=int))


def test_write_then_read_keeps_mesh(tmp_path, disk_mesh):
    path = write_mesh(tmp_path / "disk.mesh", disk_mesh)
    back = read_mesh(path)
    assert np.array_equal(back.triangles, disk_mesh.triangles)
    assert np.array_equal(back.vertices, disk_mesh.vertices)


def test_read_mesh_rejects_bad_files(tmp_path, square_tri):
    bad = tmp_path / "bad.mesh"
    bad.write_text("not a mesh\n", encoding="utf-8")
    with pytest.raises(MeshFormatError):
        read_mesh(bad)

    good = write_mesh(tmp_path / "sq.mesh", square_tri).read_text(encoding="utf-8").splitlines()
    (tmp_path / "short.mesh").write_text("\n".join(good[:4]) + "\n", encoding="utf-8")
    with pytest.raises(MeshFormatError):
        read_mesh(tmp_path / "short.mesh")

    # drop one declared boundary face and repeat another
    tampered = good[:-1] + [good[-2]]
    (tmp_path / "tampered.mesh").write_text("\n".join(tampered) + "\n", encoding="utf-8")
    with pytest.raises(MeshFormatError):
        read_mesh(tmp_path / "tampered.mesh")


def test_disk_mesh_lies_inside_and_conforms(disk_mesh, disk_sine):
    phi = evaluate(disk_sine.levelset, disk_mesh.vertices)
    assert phi.max() <= 1e-12 * disk_sine.domain.diameter
    disk_mesh.check_conforming()
    assert disk_mesh.h <= 2.0 * 0.3
    assert disk_mesh.shape_regularity < 20.0
    # boundary vertices sit on the circle
    b = disk_mesh.boundary_vertices
    assert np.abs(phi[b]).max() <= 1e-12


def test_concave_arc_chords_stay_inside():
    problem = build_problem("square_linear", domain=AnnulusSectorDomain())
    mesh = build_interior_mesh(problem, 0.15)
    mids = mesh.vertices[mesh.faces[mesh.boundary_faces]].mean(axis=1)
    assert evaluate(problem.levelset, mids).max() <= 1e-10
    assert evaluate(problem.levelset, mesh.vertices).max() <= 1e-10
    mesh.check_conforming()


def test_build_interior_mesh_rejects_bad_h(disk_sine):
    with pytest.raises(ValueError):
        build_interior_mesh(disk_sine, 0.0)
