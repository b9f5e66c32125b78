from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from hdgcurve.fe.quadrature import LineRule, line_rule, map_edges
from hdgcurve.geometry import GeometryError
from hdgcurve.geometry.levelset import evaluate, first_crossing
from hdgcurve.geometry.mesh import Triangulation
from hdgcurve.geometry.problem import CurvedProblem

log = logging.getLogger(__name__)

DENSE_SAMPLES = 9


class PathNotFound(GeometryError):
    pass


class PathCrossesInterior(GeometryError):
    pass


@dataclass(frozen=True)
class TransferMap:
    """Normal transfer paths from boundary-face quadrature nodes to the curved boundary.

    Arrays are indexed by position in `faces` (the mesh's boundary faces);
    node arrays carry a second axis over the edge rule's points.
    """

    faces: np.ndarray
    elements: np.ndarray
    local: np.ndarray
    normals: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    anchors: np.ndarray
    lengths: np.ndarray
    h_perp: np.ndarray
    H_perp: np.ndarray
    rule: LineRule

    @property
    def ratios(self) -> np.ndarray:
        return self.H_perp / self.h_perp

    @property
    def R(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0

    @property
    def size(self) -> int:
        return int(self.faces.size)


def _segments_cross(p0: np.ndarray, p1: np.ndarray, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Proper intersection of segments p (M, 2) against q (M, 2), pairwise."""

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    d1 = orient(q0, q1, p0)
    d2 = orient(q0, q1, p1)
    d3 = orient(p0, p1, q0)
    d4 = orient(p0, p1, q1)
    return (d1 * d2 < 0.0) & (d3 * d4 < 0.0)


def _path_lengths(problem: CurvedProblem, points: np.ndarray, normals: np.ndarray, s_max: np.ndarray, tol: float):
    phi = problem.levelset
    out = np.empty(points.shape[:2])
    for i in range(points.shape[0]):
        for j in range(points.shape[1]):
            s = first_crossing(phi, points[i, j], normals[i], s_max[i], xtol=tol, atol=tol)
            if s is None:
                return out, (i, j)
            out[i, j] = s
    return out, None


def construct_transfer_map(tri: Triangulation, problem: CurvedProblem, degree: int) -> TransferMap:
    """Transfer paths for the edge rule of the given polynomial degree (order 2k+2).

    Raises PathNotFound when a normal ray misses the boundary within 2 h_e and
    PathCrossesInterior when a path leaves through another boundary face.
    """
    rule = line_rule(2 * degree + 2)
    faces = tri.boundary_faces
    elements = tri.face_elements[faces, 0]
    local = tri.face_local[faces, 0]
    normals = tri.normals[elements, local]
    ends = tri.vertices[tri.faces[faces]]
    nodes, weights = map_edges(ends, rule)
    h_e = tri.face_lengths[faces]
    tol = 1e-12 * problem.domain.diameter

    lengths, miss = _path_lengths(problem, nodes, normals, 2.0 * h_e, tol)
    if miss is not None:
        b, j = miss
        raise PathNotFound(f"no boundary crossing within 2*h_e from node {j} of boundary face {int(faces[b])}")
    anchors = nodes + lengths[..., None] * normals[:, None, :]

    _check_crossings(tri, faces, nodes, anchors)

    dense = np.linspace(0.0, 1.0, DENSE_SAMPLES)
    dense_rule = LineRule(points=dense, weights=np.full(dense.size, 1.0 / dense.size), degree=0)
    dense_pts, _ = map_edges(ends, dense_rule)
    dense_len, miss = _path_lengths(problem, dense_pts, normals, 2.0 * h_e, tol)
    if miss is not None:
        b, j = miss
        raise PathNotFound(f"no boundary crossing within 2*h_e from sample {j} of boundary face {int(faces[b])}")

    H_perp = np.maximum(lengths.max(axis=1), dense_len.max(axis=1))
    H_perp[H_perp <= tol] = 0.0
    h_perp = 2.0 * tri.areas[elements] / h_e
    tmap = TransferMap(
        faces=faces,
        elements=elements,
        local=local,
        normals=normals,
        nodes=nodes,
        weights=weights,
        anchors=anchors,
        lengths=np.where(lengths <= tol, 0.0, lengths),
        h_perp=h_perp,
        H_perp=H_perp,
        rule=rule,
    )
    log.debug("transfer map: %d boundary faces, R=%.4g", faces.size, tmap.R)
    return tmap


def _check_crossings(tri: Triangulation, faces: np.ndarray, nodes: np.ndarray, anchors: np.ndarray) -> None:
    ends = tri.vertices[tri.faces[faces]]
    mids = ends.mean(axis=1)
    tree = cKDTree(mids)
    reach = np.hypot(*(anchors - nodes).reshape(-1, 2).T).max() + tri.face_lengths[faces].max()
    for b in range(faces.size):
        cands = np.asarray([c for c in tree.query_ball_point(mids[b], reach) if c != b], dtype=np.int64)
        if cands.size == 0:
            continue
        p0 = np.repeat(nodes[b], cands.size, axis=0)
        p1 = np.repeat(anchors[b], cands.size, axis=0)
        q0 = np.tile(ends[cands, 0], (nodes.shape[1], 1))
        q1 = np.tile(ends[cands, 1], (nodes.shape[1], 1))
        hit = _segments_cross(p0, p1, q0, q1)
        if hit.any():
            k = int(np.flatnonzero(hit)[0])
            raise PathCrossesInterior(
                f"transfer path from boundary face {int(faces[b])} crosses boundary face {int(faces[cands[k % cands.size]])}"
            )


def phi_on_anchors(problem: CurvedProblem, tmap: TransferMap) -> np.ndarray:
    """Level-set values at the path end points; zero to root tolerance."""
    return evaluate(problem.levelset, tmap.anchors)
