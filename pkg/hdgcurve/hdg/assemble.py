from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from hdgcurve.fe.segments import transfer_matrix
from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.mesh import BOUNDARY
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.geometry.transfer import TransferMap
from hdgcurve.hdg.local import LocalOperators, face_tau, local_solver, source_moments

log = logging.getLogger(__name__)


class SolveFailure(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SkeletonSystem:
    """Condensed system for u_hat with a factorized matrix.

    The matrix does not depend on the frozen state zeta, so a Picard sweep
    only swaps the right-hand side (see with_source).
    """

    space: PolySpace
    tmap: TransferMap
    problem: CurvedProblem
    tau: np.ndarray
    operators: LocalOperators
    matrix: sp.csc_matrix
    lu: object
    transfer: np.ndarray
    boundary_g: np.ndarray
    source: np.ndarray
    rhs: np.ndarray

    @property
    def n_dofs(self) -> int:
        return int(self.matrix.shape[0])

    def element_dofs(self) -> np.ndarray:
        tri, m = self.space.tri, self.space.n_edge
        return (tri.element_faces[:, :, None] * m + np.arange(m)).reshape(tri.n_elements, 3 * m)

    def with_source(self, zeta: Optional[np.ndarray]) -> SkeletonSystem:
        source = frozen_source(self.space, self.problem, zeta)
        return replace(self, source=source, rhs=self._rhs(source))

    def _rhs(self, source: np.ndarray) -> np.ndarray:
        tri, m = self.space.tri, self.space.n_edge
        dofs = self.element_dofs()
        interior_rows = np.repeat(tri.face_elements[tri.element_faces, 1] != BOUNDARY, m, axis=1)
        b = self.operators.condensed_rhs(source)
        rhs = np.zeros(self.n_dofs)
        np.add.at(rhs, dofs[interior_rows], b[interior_rows])
        KinvS = np.einsum("tij,tj->ti", self.operators.K_inv[self.tmap.elements], source[self.tmap.elements])
        rows = self.tmap.faces[:, None] * m + np.arange(m)
        rhs[rows] = self.boundary_g + np.einsum("bmj,bj->bm", self.transfer, KinvS)
        return rhs


def frozen_source(space: PolySpace, problem: CurvedProblem, zeta: Optional[np.ndarray]) -> np.ndarray:
    x, y = space.points[..., 0], space.points[..., 1]
    z = np.zeros_like(x) if zeta is None else space.scalar_at_points(zeta)
    return source_moments(space, np.asarray(problem.source(z, x, y), dtype=float))


def boundary_rows(space: PolySpace, tmap: TransferMap, problem: CurvedProblem) -> tuple[np.ndarray, np.ndarray]:
    """Transfer functional of the boundary rows and its data part.

    Row m of boundary face b tests u_hat - phi_h with psi_m:
    <u_hat, psi_m> - sum_p w_p psi_m(x_p) int kappa^{-1} q_h . n ds = <g(x_bar), psi_m>.
    Returns Phi (nb, m, 3n) acting on the element unknowns [q_x, q_y, u] and the
    data part (nb, m).
    """
    n, m = space.n, space.n_edge
    if tmap.nodes.shape[1] != space.face_points.shape[1] or not np.allclose(
        tmap.nodes, space.face_points[tmap.faces], rtol=0.0, atol=1e-12 * problem.domain.diameter
    ):
        raise ValueError("transfer map nodes do not match the space's edge quadrature")
    psi = space.face_psi[tmap.faces]
    wpsi = tmap.weights[..., None] * psi
    T = transfer_matrix(space.element, tmap, problem.kappa, space.quad.segment)
    Phi = np.zeros((tmap.size, m, 3 * n))
    Phi[:, :, :n] = np.einsum("bpm,bpj->bmj", wpsi, T[:, :, 0, :])
    Phi[:, :, n : 2 * n] = np.einsum("bpm,bpj->bmj", wpsi, T[:, :, 1, :])
    g = np.asarray(problem.dirichlet(tmap.anchors[..., 0], tmap.anchors[..., 1]), dtype=float)
    return Phi, np.einsum("bpm,bp->bm", wpsi, g)


def assemble(
    space: PolySpace,
    tmap: TransferMap,
    problem: CurvedProblem,
    tau=1.0,
    zeta: Optional[np.ndarray] = None,
) -> SkeletonSystem:
    """Condense the local problems onto u_hat and factorize the skeleton matrix.

    Interior faces carry the transmission condition; boundary faces carry
    u_hat = phi_h with phi_h built from the extrapolated flux.
    """
    tri, m = space.tri, space.n_edge
    tau_f = face_tau(space, tau)
    ops = local_solver(space, tau_f, problem.kappa)
    Phi, gb = boundary_rows(space, tmap, problem)
    ndof = space.n_skeleton_dofs

    dofs = (tri.element_faces[:, :, None] * m + np.arange(m)).reshape(tri.n_elements, 3 * m)
    interior_rows = np.repeat(tri.face_elements[tri.element_faces, 1] != BOUNDARY, m, axis=1)
    A = ops.condensed
    R = np.broadcast_to(dofs[:, :, None], A.shape)
    Cc = np.broadcast_to(dofs[:, None, :], A.shape)
    keep = np.broadcast_to(interior_rows[:, :, None], A.shape)
    rows = [R[keep]]
    cols = [Cc[keep]]
    vals = [A[keep]]

    # Boundary rows: <u_hat, psi> - Phi x = <g, psi> with x = K^{-1}(s - G u_hat).
    KinvG = ops.K_inv_G[tmap.elements]
    block = np.einsum("bmj,bjk->bmk", Phi, KinvG)
    psi = space.face_psi[tmap.faces]
    mass = np.einsum("bp,bpm,bpn->bmn", tmap.weights, psi, psi)
    for l in range(3):
        sel = tmap.local == l
        block[sel, :, l * m : (l + 1) * m] += mass[sel]
    brow = tmap.faces[:, None] * m + np.arange(m)
    bcol = dofs[tmap.elements]
    rows.append(np.broadcast_to(brow[:, :, None], block.shape).ravel())
    cols.append(np.broadcast_to(bcol[:, None, :], block.shape).ravel())
    vals.append(block.ravel())

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ndof, ndof)
    ).tocsc()
    try:
        lu = splu(matrix)
    except RuntimeError as exc:
        raise SolveFailure(f"sparse factorization failed: {exc}") from exc

    system = SkeletonSystem(
        space=space,
        tmap=tmap,
        problem=problem,
        tau=tau_f,
        operators=ops,
        matrix=matrix,
        lu=lu,
        transfer=Phi,
        boundary_g=gb,
        source=np.zeros((tri.n_elements, 3 * space.n)),
        rhs=np.zeros(ndof),
    )
    log.debug("assembled skeleton system: %d dofs, %d nonzeros", ndof, matrix.nnz)
    return system.with_source(zeta)
