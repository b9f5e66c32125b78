from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from hdgcurve.fe.norms import ErrorNorms
from hdgcurve.fe.segments import discrete_datum
from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.mesh import BOUNDARY
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.geometry.transfer import TransferMap
from hdgcurve.hdg.state import HdgState

log = logging.getLogger(__name__)

TERM_NAMES = ("volume", "gradient", "flux_jump", "scalar_jump", "boundary")


@dataclass(frozen=True)
class EstimatorReport:
    """Squared local estimator terms (nT, 5) in TERM_NAMES order and squared osc_T."""

    terms: np.ndarray
    osc_sq: np.ndarray
    errors: Optional[ErrorNorms] = None

    @property
    def eta_sq(self) -> np.ndarray:
        return self.terms.sum(axis=1)

    @property
    def eta_T(self) -> np.ndarray:
        return np.sqrt(self.eta_sq)

    @property
    def eta(self) -> float:
        return float(np.sqrt(self.eta_sq.sum()))

    @property
    def osc_T(self) -> np.ndarray:
        return np.sqrt(self.osc_sq)

    @property
    def osc(self) -> float:
        return float(np.sqrt(self.osc_sq.sum()))

    @property
    def effectivity(self) -> float:
        if self.errors is None:
            return float("nan")
        return self.eta / self.errors.e_h

    def term(self, name: str) -> np.ndarray:
        return self.terms[:, TERM_NAMES.index(name)]


def estimate(
    space: PolySpace,
    tmap: TransferMap,
    state: HdgState,
    problem: CurvedProblem,
    *,
    errors: Optional[ErrorNorms] = None,
) -> EstimatorReport:
    """Residual estimator for (q_h, u*_h, phi_h).

    Interior-face terms are computed once per face and added to both
    neighbours; phi_h comes from the extrapolated q_h by segment quadrature.
    """
    if state.ustar is None:
        raise ValueError("estimate needs the post-processed solution (state.ustar)")
    tri = space.tri
    nT = tri.n_elements
    W = space.weights
    x, y = space.points[..., 0], space.points[..., 1]
    h = tri.diameters
    kappa = np.asarray(problem.kappa(x, y), dtype=float)

    us = space.star_at_points(state.ustar)
    Fus = np.asarray(problem.source(us, x, y), dtype=float)
    PF = space.project(Fus)
    divq = np.einsum("tqid,tdi->tq", space.grad_phi, state.q)
    divq_c = space.project(divq)
    volume = h**2 * ((PF - divq_c) ** 2).sum(axis=1)
    residual = Fus - space.scalar_at_points(PF)
    osc_sq = h**2 * np.einsum("tq,tq->t", W, residual**2)

    grad_us = np.einsum("tqid,ti->tqd", space.grad_chi, state.ustar)
    qh = space.vector_at_points(state.q)
    mismatch = kappa[..., None] * grad_us + qh
    gradient = np.einsum("tq,tq,tqd->t", W, 1.0 / kappa, mismatch**2)

    # traces per element-local face, (nT, 3, nq_e)
    q_tr = np.einsum("tlqi,tdi->tlqd", space.trace_phi, state.q)
    qn = np.einsum("tlqd,tld->tlq", q_tr, tri.normals)
    us_tr = np.einsum("tlqi,ti->tlq", space.trace_chi, state.ustar)

    flux_jump = np.zeros(nT)
    scalar_jump = np.zeros(nT)
    inner = tri.interior_faces
    if inner.size:
        L, R = tri.face_elements[inner, 0], tri.face_elements[inner, 1]
        lL, lR = tri.face_local[inner, 0], tri.face_local[inner, 1]
        # face nodes are shared, so traces from both sides line up node by node
        jq = qn[L, lL] + qn[R, lR]
        ju = us_tr[L, lL] - us_tr[R, lR]
        he = tri.face_lengths[inner]
        fw = space.face_weights[inner]
        fj = he * np.einsum("fq,fq->f", fw, jq**2)
        sj = np.einsum("fq,fq->f", fw, ju**2) / he
        np.add.at(flux_jump, L, fj)
        np.add.at(flux_jump, R, fj)
        np.add.at(scalar_jump, L, sj)
        np.add.at(scalar_jump, R, sj)

    boundary = np.zeros(nT)
    if tmap.size:
        ph = discrete_datum(problem, tmap, space.element, state.q, space.quad.segment)
        ub = us_tr[tmap.elements, tmap.local]
        he = tri.face_lengths[tmap.faces]
        np.add.at(boundary, tmap.elements, np.einsum("bq,bq->b", tmap.weights, (ph - ub) ** 2) / he)

    terms = np.column_stack([volume, gradient, flux_jump, scalar_jump, boundary])
    report = EstimatorReport(terms=terms, osc_sq=osc_sq, errors=errors)
    log.debug("estimator: eta=%.4e osc=%.4e", report.eta, report.osc)
    return report


def element_patches(space: PolySpace) -> list:
    """U(T): T and its face neighbours."""
    nb = space.tri.neighbours
    return [np.concatenate([[t], nb[t][nb[t] != BOUNDARY]]) for t in range(space.tri.n_elements)]


def local_efficiency_ratios(space: PolySpace, tmap: TransferMap, report: EstimatorReport) -> np.ndarray:
    """eta_T^2 over the local error on U(T), boundary phi terms of T and osc^2 on U(T)."""
    errors = report.errors
    if errors is None or errors.ustar_T is None:
        raise ValueError("local efficiency needs error norms with the post-processed solution")
    local = errors.q_T + errors.ustar_T
    phi_T = np.zeros(space.tri.n_elements)
    if tmap.size:
        np.add.at(phi_T, tmap.elements, errors.phi_e)
    out = np.empty(space.tri.n_elements)
    for t, patch in enumerate(element_patches(space)):
        denom = local[patch].sum() + phi_T[t] + report.osc_sq[patch].sum()
        out[t] = report.eta_sq[t] / denom if denom > 0.0 else 0.0
    return out
