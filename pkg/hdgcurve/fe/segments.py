from __future__ import annotations

import numpy as np

from hdgcurve.fe.basis import ElementBasis
from hdgcurve.fe.quadrature import LineRule
from hdgcurve.geometry.problem import CurvedProblem, ScalarField
from hdgcurve.geometry.transfer import TransferMap


def segment_points(tmap: TransferMap, rule: LineRule) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points y (nb, nq, ns, 2) on each transfer path [x, x_bar] and weights (nb, nq, ns)."""
    s = tmap.lengths[..., None] * rule.points
    y = tmap.nodes[:, :, None, :] + s[..., None] * tmap.normals[:, None, None, :]
    omega = tmap.lengths[..., None] * rule.weights
    return y, omega


def transfer_matrix(basis: ElementBasis, tmap: TransferMap, kappa: ScalarField, rule: LineRule) -> np.ndarray:
    """T[b, p, d, j] = int_0^l kappa^{-1}(x + s n) phi_j(x + s n) n_d ds for node p of boundary face b.

    phi_j is the basis of the face's element, extended outside it.
    """
    y, omega = segment_points(tmap, rule)
    nb, nq, ns, _ = y.shape
    vals = basis.values(y.reshape(nb, nq * ns, 2), elements=tmap.elements).reshape(nb, nq, ns, -1)
    kinv = 1.0 / np.asarray(kappa(y[..., 0], y[..., 1]), dtype=float)
    line = np.einsum("bpr,bpr,bprj->bpj", omega, kinv, vals)
    return line[:, :, None, :] * tmap.normals[:, None, :, None]


def transferred_datum(problem: CurvedProblem, tmap: TransferMap, flux_integral: np.ndarray) -> np.ndarray:
    """phi = g(x_bar) + int_0^l kappa^{-1} q . n ds at each boundary node, given the integral part."""
    g = np.asarray(problem.dirichlet(tmap.anchors[..., 0], tmap.anchors[..., 1]), dtype=float)
    return g + flux_integral


def discrete_datum(
    problem: CurvedProblem, tmap: TransferMap, basis: ElementBasis, q: np.ndarray, rule: LineRule
) -> np.ndarray:
    """phi_h at the boundary nodes from the extrapolated discrete flux q (nT, 2, n)."""
    T = transfer_matrix(basis, tmap, problem.kappa, rule)
    return transferred_datum(problem, tmap, np.einsum("bpdj,bdj->bp", T, q[tmap.elements]))


def exact_datum(problem: CurvedProblem, tmap: TransferMap, rule: LineRule) -> np.ndarray:
    """phi at the boundary nodes from the exact flux of a manufactured problem."""
    if problem.exact is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    y, omega = segment_points(tmap, rule)
    q = np.asarray(problem.exact.q(y[..., 0], y[..., 1]), dtype=float)
    kinv = 1.0 / np.asarray(problem.kappa(y[..., 0], y[..., 1]), dtype=float)
    qn = np.einsum("bprd,bd->bpr", q, tmap.normals)
    return transferred_datum(problem, tmap, np.einsum("bpr,bpr,bpr->bp", omega, kinv, qn))
