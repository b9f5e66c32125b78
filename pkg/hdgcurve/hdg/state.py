from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class HdgState:
    """Discrete solution: per-element coefficients of q (nT, 2, n) and u (nT, n),
    per-face coefficients of u_hat (nf, k+1), the stabilization tau (nf,) and,
    once post-processed, u_star (nT, n_star)."""

    k: int
    q: np.ndarray
    u: np.ndarray
    uhat: np.ndarray
    tau: np.ndarray
    ustar: Optional[np.ndarray] = None

    @property
    def tau_max(self) -> float:
        return float(np.max(self.tau))

    def with_ustar(self, ustar: np.ndarray) -> HdgState:
        return replace(self, ustar=ustar)

    def is_finite(self) -> bool:
        parts = [self.q, self.u, self.uhat] + ([self.ustar] if self.ustar is not None else [])
        return all(bool(np.all(np.isfinite(p))) for p in parts)

    def save(self, path: Path) -> Path:
        path = Path(path)
        arrays = {"k": np.array(self.k), "q": self.q, "u": self.u, "uhat": self.uhat, "tau": self.tau}
        if self.ustar is not None:
            arrays["ustar"] = self.ustar
        with path.open("wb") as fh:
            np.savez(fh, **arrays)
        return path

    @classmethod
    def load(cls, path: Path) -> HdgState:
        with np.load(Path(path)) as data:
            return cls(
                k=int(data["k"]),
                q=data["q"],
                u=data["u"],
                uhat=data["uhat"],
                tau=data["tau"],
                ustar=data["ustar"] if "ustar" in data.files else None,
            )
