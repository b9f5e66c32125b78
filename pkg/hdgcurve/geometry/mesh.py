from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from hdgcurve.geometry import GeometryError
from hdgcurve.geometry.domains import NonResolvableBoundary
from hdgcurve.geometry.levelset import evaluate, gradient
from hdgcurve.geometry.problem import CurvedProblem

log = logging.getLogger(__name__)

BOUNDARY = -1
# Local face i is opposite local vertex i; face 0 is the refinement edge.
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]], dtype=int)
MESH_MAGIC = "hdgmesh 1"


class InvertedElement(GeometryError):
    pass


class MeshTopologyError(GeometryError):
    pass


class MeshFormatError(GeometryError):
    pass


def signed_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Conforming triangle mesh with face topology.

    Triangles are counter-clockwise, labelled (t0, t1, t2) with newest vertex
    t0 and refinement edge (t1, t2). Faces are stored as sorted vertex pairs;
    face_elements[f] = (left, right) with right = BOUNDARY on the boundary.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    parent: Optional[np.ndarray] = None
    generation: Optional[np.ndarray] = None
    faces: np.ndarray = field(init=False, repr=False)
    element_faces: np.ndarray = field(init=False, repr=False)
    face_elements: np.ndarray = field(init=False, repr=False)
    face_local: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise MeshTopologyError(f"vertices must have shape (nv, 2), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3 or t.shape[0] == 0:
            raise MeshTopologyError(f"triangles must have shape (nt, 3), got {t.shape}")
        if t.min() < 0 or t.max() >= v.shape[0]:
            raise MeshTopologyError("triangle references a missing vertex")
        nt = t.shape[0]
        parent = np.full(nt, -1, dtype=np.int64) if self.parent is None else np.asarray(self.parent, dtype=np.int64)
        generation = np.zeros(nt, dtype=np.int64) if self.generation is None else np.asarray(self.generation, dtype=np.int64)
        area = signed_areas(v, t)
        bad = np.flatnonzero(area <= 0.0)
        if bad.size:
            raise InvertedElement(f"{bad.size} element(s) with non-positive area, first {int(bad[0])}")

        edges = t[:, LOCAL_EDGES]
        keys = np.sort(edges, axis=2).reshape(-1, 2)
        faces, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        nf = faces.shape[0]
        counts = np.bincount(inverse, minlength=nf)
        if np.any(counts > 2):
            raise MeshTopologyError("a face is shared by more than two elements")
        order = np.argsort(inverse, kind="stable")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        owner = np.repeat(np.arange(nt), 3)
        local = np.tile(np.arange(3), nt)
        face_elements = np.full((nf, 2), BOUNDARY, dtype=np.int64)
        face_local = np.full((nf, 2), -1, dtype=np.int64)
        first = order[starts]
        face_elements[:, 0] = owner[first]
        face_local[:, 0] = local[first]
        shared = counts == 2
        second = order[starts[shared] + 1]
        face_elements[shared, 1] = owner[second]
        face_local[shared, 1] = local[second]

        for name, value in (
            ("vertices", v),
            ("triangles", t),
            ("parent", parent),
            ("generation", generation),
            ("faces", faces),
            ("element_faces", inverse.reshape(nt, 3)),
            ("face_elements", face_elements),
            ("face_local", face_local),
        ):
            object.__setattr__(self, name, value)

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_elements(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self.faces.shape[0])

    @cached_property
    def areas(self) -> np.ndarray:
        return signed_areas(self.vertices, self.triangles)

    @cached_property
    def corners(self) -> np.ndarray:
        return self.vertices[self.triangles]

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """Lengths of local faces, shape (nt, 3)."""
        e = self.vertices[self.triangles[:, LOCAL_EDGES[:, 1]]] - self.vertices[self.triangles[:, LOCAL_EDGES[:, 0]]]
        return np.hypot(e[..., 0], e[..., 1])

    @cached_property
    def diameters(self) -> np.ndarray:
        return self.edge_lengths.max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def h_mean(self) -> float:
        """Side of the equilateral triangle with the mean element area; halves under refine_uniform."""
        return float(np.sqrt(4.0 * self.areas.mean() / np.sqrt(3.0)))

    @cached_property
    def inradii(self) -> np.ndarray:
        return 2.0 * self.areas / self.edge_lengths.sum(axis=1)

    @property
    def shape_regularity(self) -> float:
        """beta = max h_T / rho_T with rho_T the inscribed diameter."""
        return float((self.diameters / (2.0 * self.inradii)).max())

    @cached_property
    def face_lengths(self) -> np.ndarray:
        d = self.vertices[self.faces[:, 1]] - self.vertices[self.faces[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def normals(self) -> np.ndarray:
        """Outward unit normals of local faces, shape (nt, 3, 2)."""
        a = self.vertices[self.triangles[:, LOCAL_EDGES[:, 0]]]
        b = self.vertices[self.triangles[:, LOCAL_EDGES[:, 1]]]
        d = b - a
        n = np.stack([d[..., 1], -d[..., 0]], axis=-1)
        return n / np.hypot(n[..., 0], n[..., 1])[..., None]

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_elements[:, 1] == BOUNDARY)

    @cached_property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_elements[:, 1] != BOUNDARY)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.faces[self.boundary_faces])

    @cached_property
    def neighbours(self) -> np.ndarray:
        """Element across each local face, BOUNDARY where there is none; shape (nt, 3)."""
        fe = self.face_elements[self.element_faces]
        me = np.arange(self.n_elements)[:, None]
        return np.where(fe[..., 0] == me, fe[..., 1], fe[..., 0])

    def hanging_vertices(self) -> np.ndarray:
        """Vertices lying inside a boundary face (a hanging node shows up as such)."""
        bf = self.faces[self.boundary_faces]
        a, b = self.vertices[bf[:, 0]], self.vertices[bf[:, 1]]
        mid = 0.5 * (a + b)
        lengths = self.face_lengths[self.boundary_faces]
        tree = cKDTree(self.vertices)
        hanging = []
        for i, cands in enumerate(tree.query_ball_point(mid, 0.5 * lengths * (1.0 + 1e-9))):
            for c in cands:
                if c in (bf[i, 0], bf[i, 1]):
                    continue
                p = self.vertices[c]
                d = b[i] - a[i]
                cross = abs(d[0] * (p[1] - a[i, 1]) - d[1] * (p[0] - a[i, 0])) / lengths[i]
                if cross <= 1e-10 * lengths[i]:
                    hanging.append(c)
        return np.unique(np.asarray(hanging, dtype=np.int64))

    def check_conforming(self) -> None:
        hanging = self.hanging_vertices()
        if hanging.size:
            raise MeshTopologyError(f"{hanging.size} hanging vertex/vertices, first {int(hanging[0])}")


def write_mesh(path: Path, tri: Triangulation) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [MESH_MAGIC, str(tri.n_vertices)]
    lines += [f"{x:.17g} {y:.17g}" for x, y in tri.vertices]
    lines.append(str(tri.n_elements))
    lines += [f"{a} {b} {c}" for a, b, c in tri.triangles]
    bf = tri.faces[tri.boundary_faces]
    lines.append(str(bf.shape[0]))
    lines += [f"{a} {b}" for a, b in bf]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_mesh(path: Path) -> Triangulation:
    rows = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not rows or rows[0] != MESH_MAGIC:
        raise MeshFormatError(f"{path}: missing '{MESH_MAGIC}' header")
    pos = 1

    def block(tag: str, width: int, dtype):
        nonlocal pos
        head = rows[pos].split() if pos < len(rows) else []
        if len(head) != 1 or not head[0].isdigit():
            raise MeshFormatError(f"{path}: expected the {tag} count at line {pos + 1}")
        n = int(head[0])
        body = rows[pos + 1 : pos + 1 + n]
        if len(body) != n:
            raise MeshFormatError(f"{path}: {tag} block is truncated")
        pos += 1 + n
        try:
            return np.array([r.split() for r in body], dtype=dtype).reshape(n, width)
        except ValueError as exc:
            raise MeshFormatError(f"{path}: malformed {tag} block: {exc}") from exc

    vertices = block("vertices", 2, float)
    triangles = block("triangles", 3, np.int64)
    boundary = block("boundary", 2, np.int64)
    tri = Triangulation(vertices=vertices, triangles=triangles)
    declared = {tuple(sorted(p)) for p in boundary.tolist()}
    actual = {tuple(p) for p in tri.faces[tri.boundary_faces].tolist()}
    if declared != actual:
        raise MeshFormatError(f"{path}: declared boundary faces do not match the triangle topology")
    return tri


def _lattice(bbox, h: float) -> np.ndarray:
    x0, x1, y0, y1 = bbox
    dy = h * math.sqrt(3.0) / 2.0
    ys = np.arange(y0, y1 + dy, dy)
    rows = []
    for i, y in enumerate(ys):
        shift = 0.5 * h if i % 2 else 0.0
        xs = np.arange(x0 + shift, x1 + h, h)
        rows.append(np.column_stack([xs, np.full(xs.shape, y)]))
    return np.vstack(rows)


def _label_longest_edge(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Rotate each triangle so the vertex opposite its longest edge comes first."""
    p = vertices[triangles]
    opp = np.stack(
        [
            np.hypot(*(p[:, 2] - p[:, 1]).T),
            np.hypot(*(p[:, 0] - p[:, 2]).T),
            np.hypot(*(p[:, 1] - p[:, 0]).T),
        ],
        axis=1,
    )
    first = np.argmax(opp, axis=1)
    idx = (first[:, None] + np.arange(3)[None, :]) % 3
    return np.take_along_axis(triangles, idx, axis=1)


def _chord_excess(phi, vertices: np.ndarray, faces: np.ndarray, samples: int = 9) -> np.ndarray:
    s = np.linspace(0.0, 1.0, samples + 2)[1:-1]
    a, b = vertices[faces[:, 0]], vertices[faces[:, 1]]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    return evaluate(phi, pts).max(axis=1)


def build_interior_mesh(problem: CurvedProblem, target_h: float, *, max_pulls: int = 8) -> Triangulation:
    """Shape-regular triangulation of a polygon Omega_h inside the curved domain.

    Boundary vertices are sampled on the boundary; chords that bulge out of
    the domain (concave arcs) have their end vertices pulled inward.
    """
    if target_h <= 0.0:
        raise ValueError(f"target_h must be positive, got {target_h}")
    domain = problem.domain
    phi = domain.levelset
    boundary = domain.boundary_points(target_h)
    lattice = _lattice(domain.bbox, target_h)
    g = np.hypot(*gradient(phi, lattice).T)
    dist = evaluate(phi, lattice) / np.maximum(g, 1e-12)
    interior = lattice[dist < -0.6 * target_h]
    points = np.vstack([boundary, interior])

    tri = Delaunay(points)
    simplices = tri.simplices.astype(np.int64)
    centroids = points[simplices].mean(axis=1)
    area = signed_areas(points, simplices)
    keep = (evaluate(phi, centroids) < 0.0) & (np.abs(area) > 1e-10 * target_h**2)
    simplices = simplices[keep]
    area = area[keep]
    simplices[area < 0] = simplices[area < 0][:, [0, 2, 1]]

    used = np.unique(simplices)
    remap = np.full(points.shape[0], -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    vertices = points[used].copy()
    triangles = _label_longest_edge(vertices, remap[simplices])
    mesh = Triangulation(vertices=vertices, triangles=triangles)

    tol = 1e-12 * domain.diameter
    bfaces = mesh.faces[mesh.boundary_faces]
    for attempt in range(max_pulls + 1):
        excess = _chord_excess(phi, vertices, bfaces)
        out = excess > tol
        if not out.any():
            break
        if attempt == max_pulls:
            raise NonResolvableBoundary(f"{domain.name}: boundary chords still leave the domain at h={target_h:g}")
        push = np.zeros(vertices.shape[0])
        np.maximum.at(push, bfaces[out, 0], 1.5 * excess[out])
        np.maximum.at(push, bfaces[out, 1], 1.5 * excess[out])
        moved = np.flatnonzero(push > 0.0)
        grad = gradient(phi, vertices[moved])
        grad /= np.hypot(grad[:, 0], grad[:, 1])[:, None]
        vertices[moved] -= push[moved, None] * grad
        log.debug("pulled %d boundary vertices inward", moved.size)

    if np.any(evaluate(phi, vertices) > tol):
        raise NonResolvableBoundary(f"{domain.name}: mesh vertex outside the domain at h={target_h:g}")
    mesh = Triangulation(vertices=vertices, triangles=triangles)
    mesh.check_conforming()
    log.info(
        "initial mesh on %s: %d elements, %d boundary faces, h=%.4g",
        domain.name,
        mesh.n_elements,
        mesh.boundary_faces.size,
        mesh.h,
    )
    return mesh
