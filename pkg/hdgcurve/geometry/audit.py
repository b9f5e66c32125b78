from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from hdgcurve.fe.basis import ElementBasis
from hdgcurve.fe.quadrature import gauss_points, map_triangle, triangle_rule
from hdgcurve.geometry.mesh import Triangulation
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.geometry.transfer import TransferMap

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssumptionReport:
    """Per boundary face: r_e = H_e/h_e (S2), tau H_e / kappa_min (S3) and
    kappa ratio * r_e^3 (C_ext C_inv)^2 (S4), with the constants behind them.

    Failures are data: the flags say which faces violate which condition.
    """

    ratios: np.ndarray
    h_perp: np.ndarray
    H_perp: np.ndarray
    c_ext: np.ndarray
    c_inv: np.ndarray
    s3_values: np.ndarray
    s4_values: np.ndarray
    s2_bound: float

    @property
    def R(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0

    @property
    def pass_s2(self) -> np.ndarray:
        return self.ratios <= self.s2_bound

    @property
    def pass_s3(self) -> np.ndarray:
        return self.s3_values <= 1.0 / 3.0

    @property
    def pass_s4(self) -> np.ndarray:
        return self.s4_values <= 1.0

    @property
    def passed(self) -> bool:
        return bool(self.pass_s2.all() and self.pass_s3.all() and self.pass_s4.all())

    @property
    def s3_margin(self) -> float:
        return float(1.0 / 3.0 - self.s3_values.max()) if self.s3_values.size else 1.0 / 3.0

    def failing_faces(self) -> dict:
        return {
            "S2": np.flatnonzero(~self.pass_s2),
            "S3": np.flatnonzero(~self.pass_s3),
            "S4": np.flatnonzero(~self.pass_s4),
        }


def extension_constants(tri: Triangulation, tmap: TransferMap, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """C_ext and C_inv per boundary face by generalized eigenproblems on P_k(T^e).

    C_ext^2 = max ||p||^2_{T_ext} / (r_e ||p||^2_T) over p in P_k, with T_ext the
    region swept by the transfer paths of face e; C_inv = h_perp max ||d_n p||_T / ||p||_T.
    """
    nb = tmap.size
    c_ext = np.zeros(nb)
    c_inv = np.zeros(nb)
    if nb == 0:
        return c_ext, c_inv
    rule = triangle_rule(2 * degree + 2)
    corners = tri.corners[tmap.elements]
    basis = ElementBasis.orthonormal(degree, corners, rule)
    pts, W = map_triangle(corners, rule)
    phi = basis.values(pts)
    dphi_n = np.einsum("bqid,bd->bqi", basis.gradients(pts), tmap.normals)
    mass = np.einsum("bq,bqi,bqj->bij", W, phi, phi)
    stiff_n = np.einsum("bq,bqi,bqj->bij", W, dphi_n, dphi_n)

    seg = gauss_points(degree + 2)
    s = tmap.lengths[..., None] * seg.points
    ys = tmap.nodes[:, :, None, :] + s[..., None] * tmap.normals[:, None, None, :]
    omega = tmap.weights[..., None] * tmap.lengths[..., None] * seg.weights
    nq, ns = ys.shape[1], ys.shape[2]
    ext_phi = basis.values(ys.reshape(nb, nq * ns, 2)).reshape(nb, nq, ns, -1)
    ext_mass = np.einsum("bpr,bpri,bprj->bij", omega, ext_phi, ext_phi)

    ratios = tmap.ratios
    for b in range(nb):
        lam_inv = eigh(stiff_n[b], mass[b], eigvals_only=True)[-1]
        c_inv[b] = tmap.h_perp[b] * np.sqrt(max(lam_inv, 0.0))
        if tmap.H_perp[b] > 0.0:
            lam_ext = eigh(ext_mass[b], mass[b], eigvals_only=True)[-1]
            c_ext[b] = np.sqrt(max(lam_ext, 0.0) / ratios[b])
    return c_ext, c_inv


def audit_assumptions(
    tri: Triangulation,
    tmap: TransferMap,
    problem: CurvedProblem,
    *,
    tau_max: float,
    degree: int,
    s2_bound: float = 1.0,
) -> AssumptionReport:
    kmin, kmax = problem.kappa_bounds
    c_ext, c_inv = extension_constants(tri, tmap, degree)
    r = tmap.ratios
    report = AssumptionReport(
        ratios=r,
        h_perp=tmap.h_perp,
        H_perp=tmap.H_perp,
        c_ext=c_ext,
        c_inv=c_inv,
        s3_values=tau_max * tmap.H_perp / kmin,
        s4_values=(kmax / kmin) * r**3 * (c_ext * c_inv) ** 2,
        s2_bound=s2_bound,
    )
    log.info(
        "assumption audit: R=%.4g, S3 margin %.4g, S4 max %.4g, passed=%s",
        report.R,
        report.s3_margin,
        float(report.s4_values.max()) if report.s4_values.size else 0.0,
        report.passed,
    )
    return report
