from __future__ import annotations

import logging

import numpy as np

from hdgcurve.geometry.levelset import evaluate, first_crossing
from hdgcurve.geometry.mesh import BOUNDARY, Triangulation, signed_areas
from hdgcurve.geometry.problem import CurvedProblem

log = logging.getLogger(__name__)


def _close_marking(tri: Triangulation, face_marked: np.ndarray) -> np.ndarray:
    """Mark refinement edges until every element with a marked face has its refinement edge marked."""
    face_marked = face_marked.copy()
    ef = tri.element_faces
    while True:
        need = face_marked[ef].any(axis=1) & ~face_marked[ef[:, 0]]
        if not need.any():
            return face_marked
        face_marked[ef[need, 0]] = True


def _snap_midpoints(tri: Triangulation, problem: CurvedProblem, faces: np.ndarray) -> np.ndarray:
    """Project midpoints of boundary faces onto the curved boundary along the outward normal."""
    phi = problem.levelset
    a = tri.vertices[tri.faces[faces, 0]]
    b = tri.vertices[tri.faces[faces, 1]]
    mid = 0.5 * (a + b)
    owner = tri.face_elements[faces, 0]
    normal = tri.normals[owner, tri.face_local[faces, 0]]
    lengths = tri.face_lengths[faces]
    atol = 1e-12 * problem.domain.diameter
    out = mid.copy()
    for i in range(faces.size):
        s = first_crossing(phi, mid[i], normal[i], 2.0 * lengths[i], xtol=atol, atol=atol)
        if s is not None:
            out[i] = mid[i] + s * normal[i]
    return out


def _chords_inside(problem: CurvedProblem, a: np.ndarray, p: np.ndarray, b: np.ndarray) -> np.ndarray:
    s = np.linspace(0.0, 1.0, 9)[1:-1]
    tol = 1e-10 * problem.domain.diameter
    left = a[:, None, :] + s[None, :, None] * (p - a)[:, None, :]
    right = p[:, None, :] + s[None, :, None] * (b - p)[:, None, :]
    return (evaluate(problem.levelset, left).max(axis=1) <= tol) & (evaluate(problem.levelset, right).max(axis=1) <= tol)


def _bisect(tri: Triangulation, face_marked: np.ndarray, problem: CurvedProblem, snap: bool) -> Triangulation:
    nv = tri.n_vertices
    marked_faces = np.flatnonzero(face_marked)
    new_index = np.full(tri.n_faces, -1, dtype=np.int64)
    new_index[marked_faces] = nv + np.arange(marked_faces.size)
    a = tri.vertices[tri.faces[marked_faces, 0]]
    b = tri.vertices[tri.faces[marked_faces, 1]]
    new_vertices = 0.5 * (a + b)

    t = tri.triangles
    m = new_index[tri.element_faces]
    t0, t1, t2 = t[:, 0], t[:, 1], t[:, 2]
    m0, m1, m2 = m[:, 0], m[:, 1], m[:, 2]
    idx = np.arange(tri.n_elements)
    split = m0 >= 0
    left2 = split & (m2 >= 0)
    left1 = split & ~(m2 >= 0)
    right2 = split & (m1 >= 0)
    right1 = split & ~(m1 >= 0)

    # (m0, t0, t1) has refinement edge (t0, t1) = face 2; (m0, t2, t0) has (t2, t0) = face 1.
    blocks = [
        (np.column_stack([t0, t1, t2])[~split], idx[~split], 0),
        (np.column_stack([m0, t0, t1])[left1], idx[left1], 1),
        (np.column_stack([m2, m0, t0])[left2], idx[left2], 2),
        (np.column_stack([m2, t1, m0])[left2], idx[left2], 2),
        (np.column_stack([m0, t2, t0])[right1], idx[right1], 1),
        (np.column_stack([m1, m0, t2])[right2], idx[right2], 2),
        (np.column_stack([m1, t0, m0])[right2], idx[right2], 2),
    ]
    children = np.vstack([blk[0] for blk in blocks])
    parents = np.concatenate([blk[1] for blk in blocks])
    depth = np.concatenate([tri.generation[blk[1]] + blk[2] for blk in blocks])
    order = np.argsort(parents, kind="stable")
    children, parents, depth = children[order], parents[order], depth[order]

    vertices = np.vstack([tri.vertices, new_vertices])
    on_boundary = tri.face_elements[marked_faces, 1] == BOUNDARY
    if snap and on_boundary.any():
        bfaces = marked_faces[on_boundary]
        vids = new_index[bfaces]
        snapped = _snap_midpoints(tri, problem, bfaces)
        ok = _chords_inside(problem, a[on_boundary], snapped, b[on_boundary])
        trial = vertices.copy()
        trial[vids[ok]] = snapped[ok]
        area = signed_areas(trial, children)
        inverted = np.unique(children[area <= 0.0])
        ok &= ~np.isin(vids, inverted)
        vertices[vids[ok]] = snapped[ok]
        if (~ok).any():
            log.debug("kept %d boundary midpoint(s) unsnapped", int((~ok).sum()))

    return Triangulation(vertices=vertices, triangles=children, parent=parents, generation=depth)


def refine(
    tri: Triangulation, marked, problem: CurvedProblem, *, snap: bool = True, all_edges: bool = False
) -> Triangulation:
    """Newest-vertex bisection of the marked elements plus closure.

    With all_edges every edge of a marked element is bisected, so each marked
    element gets four children; otherwise only its refinement edge is.

    New boundary vertices are moved onto the curved boundary unless that
    would invert an element or push a new chord outside the domain.
    """
    marked = np.unique(np.asarray(marked, dtype=np.int64))
    if marked.size == 0:
        raise ValueError("refine needs at least one marked element")
    if marked.min() < 0 or marked.max() >= tri.n_elements:
        raise IndexError("marked element index out of range")
    face_marked = np.zeros(tri.n_faces, dtype=bool)
    face_marked[tri.element_faces[marked] if all_edges else tri.element_faces[marked, 0]] = True
    face_marked = _close_marking(tri, face_marked)
    out = _bisect(tri, face_marked, problem, snap)
    log.debug("refined %d marked element(s): %d -> %d elements", marked.size, tri.n_elements, out.n_elements)
    return out


def refine_uniform(tri: Triangulation, problem: CurvedProblem, *, snap: bool = True) -> Triangulation:
    """Bisect every face once: each element gets four children."""
    return _bisect(tri, np.ones(tri.n_faces, dtype=bool), problem, snap)
