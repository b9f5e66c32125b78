from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.hdg import ConvergenceFailure
from hdgcurve.hdg.state import HdgState

log = logging.getLogger(__name__)


class LocalNoConvergence(ConvergenceFailure):
    def __init__(self, message: str, elements: np.ndarray) -> None:
        super().__init__(message)
        self.elements = elements


@dataclass(frozen=True)
class PostprocessResult:
    ustar: np.ndarray
    sweeps: int
    contraction: np.ndarray
    lipschitz_h2: np.ndarray


def local_postprocess(
    space: PolySpace,
    state: HdgState,
    problem: CurvedProblem,
    *,
    tol: float = 1e-12,
    max_iters: int = 50,
) -> PostprocessResult:
    """Element-wise nonlinear post-processing into P_{k+1}.

    On every element, find u* with mean equal to that of u_h and
        (kappa grad u*, grad w) + (F(u*), w) = -(q_h, grad w) + (F(u_h), w)
    for all mean-free w, by the fixed point z -> S(F(z)) started from u_h.
    """
    W = space.weights
    x, y = space.points[..., 0], space.points[..., 1]
    chi, dchi = space.chi, space.grad_chi
    kappa = np.asarray(problem.kappa(x, y), dtype=float)

    stiff = np.einsum("tq,tqid,tqjd->tij", W * kappa, dchi, dchi)
    means = np.einsum("tq,tqi->ti", W, chi)
    stiff[:, 0, :] = means

    uh = space.scalar_at_points(state.u)
    qh = space.vector_at_points(state.q)
    fixed = -np.einsum("tq,tqd,tqid->ti", W, qh, dchi) + space.project_star(problem.source(uh, x, y))
    mean_uh = np.einsum("tq,tq->t", W, uh)

    z = space.project_star(uh)
    prev_inc = np.full(space.tri.n_elements, np.nan)
    contraction = np.zeros(space.tri.n_elements)
    for sweep in range(1, max_iters + 1):
        rhs = fixed - space.project_star(problem.source(space.star_at_points(z), x, y))
        rhs[:, 0] = mean_uh
        z_new = np.linalg.solve(stiff, rhs[..., None])[..., 0]
        inc = np.linalg.norm(z_new - z, axis=1)
        size = np.linalg.norm(z_new, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            # ratios of increments near round-off carry no information
            ratio = np.where(prev_inc > 1e-13 * np.maximum(size, 1e-300), inc / prev_inc, 0.0)
        contraction = np.where(np.isfinite(ratio), np.maximum(contraction, ratio), contraction)
        prev_inc = inc
        z = z_new
        log.debug("post-processing sweep %d: max increment %.3e", sweep, inc.max())
        if np.all(inc <= tol * np.maximum(size, 1e-300)) or np.all(inc == 0.0):
            return PostprocessResult(
                ustar=z,
                sweeps=sweep,
                contraction=contraction,
                lipschitz_h2=problem.lipschitz * space.tri.diameters**2,
            )

    bad = np.flatnonzero(inc > tol * np.maximum(size, 1e-300))
    raise LocalNoConvergence(
        f"post-processing did not converge on {bad.size} element(s) in {max_iters} sweeps", bad
    )


def postprocess_state(space: PolySpace, state: HdgState, problem: CurvedProblem, **kwargs) -> HdgState:
    return state.with_ustar(local_postprocess(space, state, problem, **kwargs).ustar)
