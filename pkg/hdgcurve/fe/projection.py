from __future__ import annotations

from typing import Tuple

import numpy as np

from hdgcurve.fe import SingularProjection
from hdgcurve.fe.basis import poly_dim
from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.problem import ScalarField, VectorField


def l2_project(space: PolySpace, f: ScalarField) -> np.ndarray:
    """Element-wise L2 projection onto P_k, coefficients (nT, n)."""
    return space.project(np.asarray(f(space.points[..., 0], space.points[..., 1]), dtype=float))


def l2_project_vector(space: PolySpace, f: VectorField) -> np.ndarray:
    vals = np.asarray(f(space.points[..., 0], space.points[..., 1]), dtype=float)
    return np.stack([space.project(vals[..., 0]), space.project(vals[..., 1])], axis=1)


def hdg_project(
    space: PolySpace, element: int, q: VectorField, u: ScalarField, tau=1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """HDG projection (Pi q, Pi u) in P_k^2 x P_k on one element.

    Pi q and Pi u match the moments of q and u against P_{k-1}, and on every
    face <Pi q . n + tau Pi u, mu> = <q . n + tau u, mu> for mu in P_k(e).
    tau is a scalar or one value per local face.
    """
    tri = space.tri
    n, m = space.n, space.n_edge
    d1 = poly_dim(space.k - 1)
    tau_l = np.broadcast_to(np.asarray(tau, dtype=float), (3,))
    if np.any(tau_l < 0.0) or tau_l.max() <= 0.0:
        raise SingularProjection(f"HDG projection needs tau >= 0 with a positive face, got {tau_l}")

    pts, W = space.points[element], space.weights[element]
    phi = space.phi[element]
    qv = np.asarray(q(pts[:, 0], pts[:, 1]), dtype=float)
    uv = np.asarray(u(pts[:, 0], pts[:, 1]), dtype=float)

    A = np.zeros((3 * n, 3 * n))
    b = np.zeros(3 * n)
    low = np.arange(d1)
    for c in range(3):
        A[c * d1 + low, c * n + low] = 1.0
    b[0:d1] = (W * qv[:, 0]) @ phi[:, :d1]
    b[d1 : 2 * d1] = (W * qv[:, 1]) @ phi[:, :d1]
    b[2 * d1 : 3 * d1] = (W * uv) @ phi[:, :d1]

    row = 3 * d1
    for l in range(3):
        f = tri.element_faces[element, l]
        fp, fw = space.face_points[f], space.face_weights[f]
        psi = space.face_psi[f]
        tphi = space.trace_phi[element, l]
        nx, ny = tri.normals[element, l]
        C = np.einsum("q,qj,qm->mj", fw, tphi, psi)
        rows = slice(row, row + m)
        A[rows, :n] = nx * C
        A[rows, n : 2 * n] = ny * C
        A[rows, 2 * n :] = tau_l[l] * C
        qf = np.asarray(q(fp[:, 0], fp[:, 1]), dtype=float)
        uf = np.asarray(u(fp[:, 0], fp[:, 1]), dtype=float)
        b[rows] = np.einsum("q,q,qm->m", fw, qf @ np.array([nx, ny]) + tau_l[l] * uf, psi)
        row += m

    if np.linalg.cond(A) > 1e13:
        raise SingularProjection(f"HDG projection system on element {element} is singular")
    x = np.linalg.solve(A, b)
    return np.stack([x[:n], x[n : 2 * n]]), x[2 * n :]
