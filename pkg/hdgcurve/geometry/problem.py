from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from hdgcurve.geometry.domains import Domain

ScalarField = Callable[[np.ndarray, np.ndarray], np.ndarray]
VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]
# F(u, x, y)
SourceTerm = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class ProblemDataError(ValueError):
    pass


@dataclass(frozen=True)
class ExactSolution:
    """Manufactured u and flux q = -kappa grad u; q returns (..., 2)."""

    u: ScalarField
    q: VectorField


@dataclass(frozen=True)
class CurvedProblem:
    domain: Domain
    kappa: ScalarField
    kappa_bounds: Tuple[float, float]
    source: SourceTerm
    lipschitz: float
    dirichlet: ScalarField
    exact: Optional[ExactSolution] = None
    name: str = "custom"

    def __post_init__(self) -> None:
        lo, hi = self.kappa_bounds
        if not 0.0 < lo <= hi:
            raise ProblemDataError(f"kappa bounds must satisfy 0 < lower <= upper, got {self.kappa_bounds}")
        if self.lipschitz < 0.0:
            raise ProblemDataError(f"Lipschitz constant must be >= 0, got {self.lipschitz}")

    def levelset(self, x, y):
        return self.domain.levelset(x, y)

    def check_data(self, points: np.ndarray, *, seed: int = 0, rel_tol: float = 1e-10) -> None:
        """Sample kappa bounds and the Lipschitz inequality of F at the given points."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        x, y = points[:, 0], points[:, 1]
        k = np.asarray(self.kappa(x, y), dtype=float)
        lo, hi = self.kappa_bounds
        if not np.all(np.isfinite(k)) or k.min() < lo * (1 - rel_tol) or k.max() > hi * (1 + rel_tol):
            raise ProblemDataError(
                f"{self.name}: kappa range [{np.nanmin(k):.6g}, {np.nanmax(k):.6g}] leaves [{lo:.6g}, {hi:.6g}]"
            )
        rng = np.random.default_rng(seed)
        u1 = rng.uniform(-2.0, 2.0, size=x.shape)
        u2 = rng.uniform(-2.0, 2.0, size=x.shape)
        f1 = np.asarray(self.source(u1, x, y), dtype=float)
        f2 = np.asarray(self.source(u2, x, y), dtype=float)
        gap = np.abs(f1 - f2) - self.lipschitz * np.abs(u1 - u2)
        scale = 1.0 + np.abs(f1) + np.abs(f2)
        if not np.all(np.isfinite(gap)) or np.any(gap > rel_tol * scale):
            raise ProblemDataError(f"{self.name}: source term is not Lipschitz with L={self.lipschitz:g}")
