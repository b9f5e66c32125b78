from __future__ import annotations


class ConvergenceFailure(RuntimeError):
    """An iterative solve stopped before reaching its tolerance."""
