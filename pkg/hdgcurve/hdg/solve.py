from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from hdgcurve.fe.space import PolySpace
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.geometry.transfer import TransferMap
from hdgcurve.hdg import ConvergenceFailure
from hdgcurve.hdg.assemble import SkeletonSystem, SolveFailure, assemble
from hdgcurve.hdg.state import HdgState

log = logging.getLogger(__name__)


class NoConvergence(ConvergenceFailure):
    def __init__(self, message: str, trace: "PicardTrace") -> None:
        super().__init__(message)
        self.trace = trace


@dataclass
class PicardTrace:
    """Per-step increments ||u^{m+1} - u^m||_Omega_h and their successive ratios."""

    increments: List[float] = field(default_factory=list)
    factors: List[float] = field(default_factory=list)
    contraction_bound: float = 0.0
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.increments)

    @property
    def last_factor(self) -> float:
        return self.factors[-1] if self.factors else float("nan")


def solve_linearized(system: SkeletonSystem) -> HdgState:
    """Solve the skeleton system for its current source and recover q and u per element."""
    uhat = system.lu.solve(system.rhs)
    if not np.all(np.isfinite(uhat)):
        raise SolveFailure("skeleton solve produced non-finite values")
    space = system.space
    n, m = space.n, space.n_edge
    uhat_local = uhat[system.element_dofs()]
    x = system.operators.recover(uhat_local, system.source)
    q = np.stack([x[:, :n], x[:, n : 2 * n]], axis=1)
    return HdgState(
        k=space.k,
        q=q,
        u=x[:, 2 * n :].copy(),
        uhat=uhat.reshape(space.tri.n_faces, m),
        tau=system.tau,
    )


def picard_solve(
    space: PolySpace,
    tmap: TransferMap,
    problem: CurvedProblem,
    *,
    tau=1.0,
    u0: Optional[np.ndarray] = None,
    rtol: float = 1e-10,
    max_iters: int = 100,
    system: Optional[SkeletonSystem] = None,
) -> Tuple[HdgState, PicardTrace]:
    """Fixed-point iteration u^{m+1} = J(u^m): each step is one linear HDG solve with F frozen at u^m.

    The skeleton matrix is factorized once. Stops when the increment drops
    below rtol times ||u^{m+1}|| (absolute rtol for a vanishing solution).
    """
    if rtol <= 0.0 or max_iters < 1:
        raise ValueError("picard_solve needs rtol > 0 and max_iters >= 1")
    system = system or assemble(space, tmap, problem, tau)
    trace = PicardTrace(contraction_bound=4.0 * problem.lipschitz * max(space.tri.h, 1.0))
    prev = np.zeros((space.tri.n_elements, space.n)) if u0 is None else np.asarray(u0, dtype=float)

    for it in range(1, max_iters + 1):
        state = solve_linearized(system.with_source(prev))
        inc = float(np.linalg.norm(state.u - prev))
        size = float(np.linalg.norm(state.u))
        if trace.increments and trace.increments[-1] > 0.0:
            trace.factors.append(inc / trace.increments[-1])
        trace.increments.append(inc)
        log.debug("picard step %d: increment %.3e (|u| %.3e)", it, inc, size)
        if inc <= rtol * size or (size < 1e-14 and inc <= rtol):
            trace.converged = True
            log.info(
                "picard converged in %d step(s), last factor %.3g, 4L max(h,1) = %.3g",
                it,
                trace.last_factor,
                trace.contraction_bound,
            )
            return state, trace
        prev = state.u

    raise NoConvergence(
        f"picard did not converge in {max_iters} steps (last increment {trace.increments[-1]:.3e}, "
        f"last factor {trace.last_factor:.3g})",
        trace,
    )
