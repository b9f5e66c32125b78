from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hdgcurve.fe.basis import ElementBasis, edge_basis, poly_dim
from hdgcurve.fe.quadrature import QuadratureSet, map_edges, map_triangle
from hdgcurve.geometry.mesh import Triangulation


@dataclass(frozen=True, eq=False)
class PolySpace:
    """Broken polynomial spaces of degree k on a mesh, with tabulated quadrature.

    element: P_k per element (scalar and both flux components), star: P_{k+1}
    for post-processing, and a Legendre basis of P_k on every face.
    """

    k: int
    tri: Triangulation
    quad: QuadratureSet
    element: ElementBasis
    star: ElementBasis
    points: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    grad_phi: np.ndarray
    chi: np.ndarray
    grad_chi: np.ndarray
    face_points: np.ndarray
    face_weights: np.ndarray
    face_psi: np.ndarray
    trace_phi: np.ndarray
    trace_chi: np.ndarray

    @classmethod
    def build(cls, tri: Triangulation, k: int, *, quad: QuadratureSet | None = None) -> PolySpace:
        if k < 1:
            raise ValueError(f"polynomial degree must be >= 1, got {k}")
        quad = quad or QuadratureSet.for_degree(k)
        corners = tri.corners
        element = ElementBasis.orthonormal(k, corners, quad.triangle)
        star = ElementBasis.orthonormal(k + 1, corners, quad.triangle)
        points, weights = map_triangle(corners, quad.triangle)

        ends = tri.vertices[tri.faces]
        face_points, face_weights = map_edges(ends, quad.edge)
        psi = edge_basis(quad.edge.points, k)[None, :, :] / np.sqrt(tri.face_lengths)[:, None, None]

        nq_e = quad.edge.size
        local_pts = face_points[tri.element_faces].reshape(tri.n_elements, 3 * nq_e, 2)
        trace_phi = element.values(local_pts).reshape(tri.n_elements, 3, nq_e, -1)
        trace_chi = star.values(local_pts).reshape(tri.n_elements, 3, nq_e, -1)
        return cls(
            k=k,
            tri=tri,
            quad=quad,
            element=element,
            star=star,
            points=points,
            weights=weights,
            phi=element.values(points),
            grad_phi=element.gradients(points),
            chi=star.values(points),
            grad_chi=star.gradients(points),
            face_points=face_points,
            face_weights=face_weights,
            face_psi=psi,
            trace_phi=trace_phi,
            trace_chi=trace_chi,
        )

    @property
    def n(self) -> int:
        return poly_dim(self.k)

    @property
    def n_star(self) -> int:
        return poly_dim(self.k + 1)

    @property
    def n_edge(self) -> int:
        return self.k + 1

    @property
    def n_skeleton_dofs(self) -> int:
        return self.tri.n_faces * self.n_edge

    def scalar_at_points(self, coeffs: np.ndarray) -> np.ndarray:
        """(nT, n) coefficients -> values (nT, nq) at element quadrature points."""
        return np.einsum("tqi,ti->tq", self.phi, coeffs)

    def vector_at_points(self, coeffs: np.ndarray) -> np.ndarray:
        """(nT, 2, n) coefficients -> values (nT, nq, 2)."""
        return np.einsum("tqi,tdi->tqd", self.phi, coeffs)

    def star_at_points(self, coeffs: np.ndarray) -> np.ndarray:
        return np.einsum("tqi,ti->tq", self.chi, coeffs)

    def project(self, values: np.ndarray) -> np.ndarray:
        """L2 projection onto P_k of values (nT, nq) given at quadrature points."""
        return np.einsum("tq,tq,tqi->ti", self.weights, values, self.phi)

    def project_star(self, values: np.ndarray) -> np.ndarray:
        return np.einsum("tq,tq,tqi->ti", self.weights, values, self.chi)
