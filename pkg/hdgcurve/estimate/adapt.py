from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from hdgcurve.estimate.estimator import EstimatorReport, estimate
from hdgcurve.estimate.marking import mark_dorfler
from hdgcurve.fe.norms import ErrorNorms, error_norms
from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.audit import AssumptionReport, audit_assumptions
from hdgcurve.geometry.mesh import Triangulation
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.geometry.refine import refine
from hdgcurve.geometry.transfer import TransferMap, construct_transfer_map
from hdgcurve.hdg.postprocess import PostprocessResult, local_postprocess
from hdgcurve.hdg.solve import PicardTrace, picard_solve
from hdgcurve.hdg.state import HdgState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverSettings:
    k: int = 1
    tau: float = 1.0
    picard_rtol: float = 1e-10
    picard_max_iters: int = 100
    post_tol: float = 1e-12
    post_max_iters: int = 50
    s2_bound: float = 1.0
    theta: float = 0.5
    max_dofs: int = 20000
    eta_tol: float = 0.0
    max_cycles: int = 12
    snap: bool = True


@dataclass(frozen=True)
class MeshSolution:
    """Everything one solve -> post-process -> estimate pass produces on a mesh."""

    tri: Triangulation
    space: PolySpace
    tmap: TransferMap
    audit: AssumptionReport
    state: HdgState
    trace: PicardTrace
    post: PostprocessResult
    report: EstimatorReport
    errors: Optional[ErrorNorms]

    @property
    def dofs(self) -> int:
        return self.space.n_skeleton_dofs


def solve_on_mesh(
    tri: Triangulation,
    problem: CurvedProblem,
    settings: SolverSettings,
    *,
    u0: Optional[np.ndarray] = None,
) -> MeshSolution:
    space = PolySpace.build(tri, settings.k)
    problem.check_data(space.points)
    tmap = construct_transfer_map(tri, problem, settings.k)
    audit = audit_assumptions(
        tri, tmap, problem, tau_max=settings.tau, degree=settings.k, s2_bound=settings.s2_bound
    )
    state, trace = picard_solve(
        space,
        tmap,
        problem,
        tau=settings.tau,
        u0=u0,
        rtol=settings.picard_rtol,
        max_iters=settings.picard_max_iters,
    )
    post = local_postprocess(space, state, problem, tol=settings.post_tol, max_iters=settings.post_max_iters)
    state = state.with_ustar(post.ustar)
    errors = error_norms(space, tmap, state, problem) if problem.exact is not None else None
    report = estimate(space, tmap, state, problem, errors=errors)
    return MeshSolution(
        tri=tri,
        space=space,
        tmap=tmap,
        audit=audit,
        state=state,
        trace=trace,
        post=post,
        report=report,
        errors=errors,
    )


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    solution: MeshSolution
    marked: np.ndarray
    stop_reason: Optional[str] = None

    @property
    def marked_fraction(self) -> float:
        return self.marked.size / self.solution.tri.n_elements


def iter_adaptive_cycles(
    problem: CurvedProblem, tri: Triangulation, settings: SolverSettings
) -> Iterator[CycleRecord]:
    """solve -> post-process -> estimate -> mark -> refine until eta <= eta_tol,
    the dof budget is reached or max_cycles cycles have run."""
    for cycle in range(settings.max_cycles):
        sol = solve_on_mesh(tri, problem, settings)
        report = sol.report
        log.info(
            "cycle %d: dofs=%d eta=%.4e osc=%.4e picard=%d audit=%s",
            cycle,
            sol.dofs,
            report.eta,
            report.osc,
            sol.trace.iterations,
            "pass" if sol.audit.passed else "fail",
        )
        reason = None
        if report.eta <= settings.eta_tol:
            reason = "eta_tol"
        elif sol.dofs >= settings.max_dofs:
            reason = "max_dofs"
        elif cycle == settings.max_cycles - 1:
            reason = "max_cycles"
        if reason is not None:
            yield CycleRecord(cycle=cycle, solution=sol, marked=np.zeros(0, dtype=np.int64), stop_reason=reason)
            return
        marked = mark_dorfler(report, settings.theta)
        yield CycleRecord(cycle=cycle, solution=sol, marked=marked)
        tri = refine(tri, marked, problem, snap=settings.snap, all_edges=True)


def adapt_loop(problem: CurvedProblem, tri: Triangulation, settings: SolverSettings) -> List[CycleRecord]:
    return list(iter_adaptive_cycles(problem, tri, settings))
