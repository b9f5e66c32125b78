from __future__ import annotations

from typing import Any, Dict, Optional

import numpy as np

from hdgcurve.geometry.mesh import Triangulation
from hdgcurve.geometry.transfer import TransferMap


def summarize_mesh(tri: Triangulation, tmap: Optional[TransferMap] = None) -> Dict[str, Any]:
    """
    Pure read-only summary of a mesh and, when given, its transfer paths.
    """
    summary: Dict[str, Any] = {
        "counts": {
            "vertices": tri.n_vertices,
            "elements": tri.n_elements,
            "faces": tri.n_faces,
            "boundary_faces": int(tri.boundary_faces.size),
        },
        "h_min": float(tri.diameters.min()),
        "h_max": float(tri.h),
        "beta": float(tri.shape_regularity),
        "area": float(tri.areas.sum()),
        "max_generation": int(tri.generation.max()),
    }
    if tmap is not None:
        summary["transfer"] = {
            "R": tmap.R,
            "H_perp_max": float(tmap.H_perp.max()) if tmap.size else 0.0,
            "path_length_max": float(np.abs(tmap.lengths).max()) if tmap.size else 0.0,
        }
    return summary


def summary_lines(summary: Dict[str, Any]) -> str:
    c = summary["counts"]
    lines = [
        f"elements={c['elements']} vertices={c['vertices']} faces={c['faces']} boundary={c['boundary_faces']}",
        f"h in [{summary['h_min']:.4g}, {summary['h_max']:.4g}]  beta={summary['beta']:.3g}",
    ]
    if "transfer" in summary:
        t = summary["transfer"]
        lines.append(f"R={t['R']:.4g}  max H_perp={t['H_perp_max']:.3e}")
    return "\n".join(lines)
