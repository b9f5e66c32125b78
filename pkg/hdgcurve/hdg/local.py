from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.problem import ScalarField


class SingularLocalSystem(RuntimeError):
    pass


@dataclass(frozen=True)
class LocalOperators:
    """Element operators of the local HDG problem, batched over elements.

    Unknowns per element are x = [q_x, q_y, u] (3n); per element trace
    unknowns are the three face blocks of u_hat (3 m, m = k+1). The local
    problem reads K x + G u_hat = s and the element's transmission residual
    is H x - E u_hat.
    """

    K: np.ndarray
    K_inv: np.ndarray
    G: np.ndarray
    H: np.ndarray
    E: np.ndarray

    @property
    def K_inv_G(self) -> np.ndarray:
        return np.einsum("tij,tjk->tik", self.K_inv, self.G)

    @property
    def condensed(self) -> np.ndarray:
        """H K^{-1} G + E, the element contribution to the skeleton matrix."""
        return np.einsum("tij,tjk->tik", self.H, self.K_inv_G) + self.E

    def recover(self, uhat_local: np.ndarray, source: np.ndarray) -> np.ndarray:
        """x = K^{-1}(s - G u_hat) for every element."""
        rhs = source - np.einsum("tij,tj->ti", self.G, uhat_local)
        return np.einsum("tij,tj->ti", self.K_inv, rhs)

    def condensed_rhs(self, source: np.ndarray) -> np.ndarray:
        return np.einsum("tij,tj->ti", self.H, np.einsum("tij,tj->ti", self.K_inv, source))


def face_tau(space: PolySpace, tau) -> np.ndarray:
    tau = np.broadcast_to(np.asarray(tau, dtype=float), (space.tri.n_faces,)).copy()
    if not np.all(np.isfinite(tau)) or np.any(tau <= 0.0):
        raise SingularLocalSystem("stabilization tau must be positive and finite on every face")
    return tau


def local_solver(space: PolySpace, tau, kappa: ScalarField, *, cond_limit: float = 1e14) -> LocalOperators:
    """Assemble and invert the local problems of all elements.

    tau is a scalar or one value per face.
    """
    tri = space.tri
    n, m = space.n, space.n_edge
    nT = tri.n_elements
    tau_f = face_tau(space, tau)
    tau_l = tau_f[tri.element_faces]

    W = space.weights
    phi, dphi = space.phi, space.grad_phi
    kinv = 1.0 / np.asarray(kappa(space.points[..., 0], space.points[..., 1]), dtype=float)
    if not np.all(np.isfinite(kinv)) or np.any(kinv <= 0.0):
        raise SingularLocalSystem("kappa must be positive and finite at every quadrature point")

    Mk = np.einsum("tq,tqi,tqj->tij", W * kinv, phi, phi)
    Bx = -np.einsum("tq,tqi,tqj->tij", W, dphi[..., 0], phi)
    By = -np.einsum("tq,tqi,tqj->tij", W, dphi[..., 1], phi)
    Dx = np.einsum("tq,tqi,tqj->tij", W, phi, dphi[..., 0])
    Dy = np.einsum("tq,tqi,tqj->tij", W, phi, dphi[..., 1])

    fw = space.face_weights[tri.element_faces]
    tphi = space.trace_phi
    psi = space.face_psi[tri.element_faces]
    nrm = tri.normals
    Tuu = np.einsum("tl,tlq,tlqi,tlqj->tij", tau_l, fw, tphi, tphi)
    C = np.einsum("tlq,tlqi,tlqm->tlim", fw, tphi, psi)
    Cx = C * nrm[..., 0][:, :, None, None]
    Cy = C * nrm[..., 1][:, :, None, None]
    Epp = np.einsum("tlq,tlqm,tlqp->tlmp", fw, psi, psi)

    K = np.zeros((nT, 3 * n, 3 * n))
    K[:, :n, :n] = Mk
    K[:, n : 2 * n, n : 2 * n] = Mk
    K[:, :n, 2 * n :] = Bx
    K[:, n : 2 * n, 2 * n :] = By
    K[:, 2 * n :, :n] = Dx
    K[:, 2 * n :, n : 2 * n] = Dy
    K[:, 2 * n :, 2 * n :] = Tuu

    G = np.zeros((nT, 3 * n, 3 * m))
    H = np.zeros((nT, 3 * m, 3 * n))
    E = np.zeros((nT, 3 * m, 3 * m))
    for l in range(3):
        cols = slice(l * m, (l + 1) * m)
        G[:, :n, cols] = Cx[:, l]
        G[:, n : 2 * n, cols] = Cy[:, l]
        G[:, 2 * n :, cols] = -tau_l[:, l, None, None] * C[:, l]
        H[:, cols, :n] = np.swapaxes(Cx[:, l], 1, 2)
        H[:, cols, n : 2 * n] = np.swapaxes(Cy[:, l], 1, 2)
        H[:, cols, 2 * n :] = tau_l[:, l, None, None] * np.swapaxes(C[:, l], 1, 2)
        E[:, cols, cols] = tau_l[:, l, None, None] * Epp[:, l]

    cond = np.linalg.cond(K)
    bad = np.flatnonzero(~np.isfinite(cond) | (cond > cond_limit))
    if bad.size:
        raise SingularLocalSystem(f"{bad.size} singular local system(s), first element {int(bad[0])}")
    try:
        K_inv = np.linalg.inv(K)
    except np.linalg.LinAlgError as exc:
        raise SingularLocalSystem(str(exc)) from exc
    return LocalOperators(K=K, K_inv=K_inv, G=G, H=H, E=E)


def source_moments(space: PolySpace, values: np.ndarray) -> np.ndarray:
    """Right-hand side s = [0, 0, (f, phi_i)] of the local problems for f given at quadrature points."""
    n = space.n
    s = np.zeros((space.tri.n_elements, 3 * n))
    s[:, 2 * n :] = space.project(values)
    return s
