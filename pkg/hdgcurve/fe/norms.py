from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from hdgcurve.fe.quadrature import gauss_points, map_triangle, triangle_rule
from hdgcurve.fe.segments import discrete_datum, exact_datum
from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.geometry.transfer import TransferMap
from hdgcurve.hdg.state import HdgState

EXACT_SEGMENT_POINTS = 10


@dataclass(frozen=True)
class ErrorNorms:
    """Squared local errors; the global norms are the square roots of their sums.

    u_T, q_T, ustar_T are per element; phi_e is per boundary face
    (h_e^{-1} ||phi - phi_h||_e^2, in transfer-map order).
    """

    u_T: np.ndarray
    q_T: np.ndarray
    ustar_T: Optional[np.ndarray]
    phi_e: np.ndarray

    @property
    def u(self) -> float:
        return float(np.sqrt(self.u_T.sum()))

    @property
    def q(self) -> float:
        return float(np.sqrt(self.q_T.sum()))

    @property
    def ustar(self) -> float:
        return float("nan") if self.ustar_T is None else float(np.sqrt(self.ustar_T.sum()))

    @property
    def phi(self) -> float:
        return float(np.sqrt(self.phi_e.sum()))

    @property
    def e_h(self) -> float:
        """(||kappa^{-1/2}(q - q_h)||^2 + ||u - u*_h||^2 + ||h_e^{-1/2}(phi - phi_h)||^2)^{1/2}."""
        if self.ustar_T is None:
            raise ValueError("e_h needs the post-processed solution")
        return float(np.sqrt(self.q_T.sum() + self.ustar_T.sum() + self.phi_e.sum()))

    def __iter__(self) -> Iterator[float]:
        yield from (self.u, self.q, self.ustar, self.phi)


def error_norms(space: PolySpace, tmap: TransferMap, state: HdgState, problem: CurvedProblem) -> ErrorNorms:
    """Errors against the manufactured solution with a rule two degrees above the solver's."""
    if problem.exact is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    tri = space.tri
    rule = triangle_rule(2 * space.k + 4)
    pts, W = map_triangle(tri.corners, rule)
    x, y = pts[..., 0], pts[..., 1]
    phi = space.element.values(pts)
    u_ex = np.asarray(problem.exact.u(x, y), dtype=float)
    q_ex = np.asarray(problem.exact.q(x, y), dtype=float)
    kinv = 1.0 / np.asarray(problem.kappa(x, y), dtype=float)

    uh = np.einsum("tqi,ti->tq", phi, state.u)
    qh = np.einsum("tqi,tdi->tqd", phi, state.q)
    u_T = np.einsum("tq,tq->t", W, (u_ex - uh) ** 2)
    q_T = np.einsum("tq,tq,tqd->t", W, kinv, (q_ex - qh) ** 2)
    ustar_T = None
    if state.ustar is not None:
        us = np.einsum("tqi,ti->tq", space.star.values(pts), state.ustar)
        ustar_T = np.einsum("tq,tq->t", W, (u_ex - us) ** 2)

    if tmap.size:
        ph = discrete_datum(problem, tmap, space.element, state.q, space.quad.segment)
        pe = exact_datum(problem, tmap, gauss_points(EXACT_SEGMENT_POINTS))
        h_e = tri.face_lengths[tmap.faces]
        phi_e = np.einsum("bp,bp->b", tmap.weights, (pe - ph) ** 2) / h_e
    else:
        phi_e = np.zeros(0)
    return ErrorNorms(u_T=u_T, q_T=q_T, ustar_T=ustar_T, phi_e=phi_e)
