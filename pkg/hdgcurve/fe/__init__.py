from __future__ import annotations


class SingularProjection(RuntimeError):
    pass
