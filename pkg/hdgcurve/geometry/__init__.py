from __future__ import annotations


class GeometryError(RuntimeError):
    """Base class for failures of the mesh and boundary-transfer geometry."""
