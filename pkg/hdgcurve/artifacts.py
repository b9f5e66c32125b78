from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, IO, List, Mapping, Optional, Sequence

import numpy as np

from hdgcurve.geometry.mesh import Triangulation, write_mesh


class ArtifactScopeError(RuntimeError):
    pass


class ArtifactValueError(RuntimeError):
    pass


def format_value(value: Any, column: str = "") -> str:
    """CSV cell text: floats as %.16e, None as an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ArtifactValueError(f"non-finite value {value!r} in column {column!r}")
        return f"{float(value):.16e}"
    return str(value)


@dataclass
class CsvLog:
    """Row-at-a-time CSV writer; rows are flushed as they arrive."""

    path: Path
    columns: Sequence[str]
    _fh: Optional[IO[str]] = field(default=None, init=False, repr=False)
    _writer: Any = field(default=None, init=False, repr=False)
    rows: int = field(default=0, init=False)

    def __post_init__(self) -> None:
        self._fh = self.path.open("w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(list(self.columns))
        self._fh.flush()

    def write(self, **values: Any) -> None:
        unknown = set(values) - set(self.columns)
        if unknown:
            raise ArtifactValueError(f"unknown CSV columns: {sorted(unknown)}")
        self._writer.writerow([format_value(values.get(c), c) for c in self.columns])
        self._fh.flush()
        self.rows += 1

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "CsvLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _vtk_scalars(name: str, values: np.ndarray) -> List[str]:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ArtifactValueError(f"non-finite values in VTK field {name!r}")
    lines = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines.extend(f"{v:.16e}" for v in values)
    return lines


def vtk_text(
    tri: Triangulation,
    point_data: Optional[Mapping[str, np.ndarray]] = None,
    cell_data: Optional[Mapping[str, np.ndarray]] = None,
    title: str = "hdgcurve",
) -> str:
    """Legacy ASCII unstructured grid with triangle cells."""
    nv, nT = tri.n_vertices, tri.n_elements
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    lines.extend(f"{x:.16e} {y:.16e} 0" for x, y in tri.vertices)
    lines.append(f"CELLS {nT} {4 * nT}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in tri.triangles)
    lines.append(f"CELL_TYPES {nT}")
    lines.extend("5" for _ in range(nT))
    if point_data:
        lines.append(f"POINT_DATA {nv}")
        for name, values in point_data.items():
            if np.shape(values) != (nv,):
                raise ArtifactValueError(f"point field {name!r} needs shape ({nv},)")
            lines.extend(_vtk_scalars(name, values))
    if cell_data:
        lines.append(f"CELL_DATA {nT}")
        for name, values in cell_data.items():
            if np.shape(values) != (nT,):
                raise ArtifactValueError(f"cell field {name!r} needs shape ({nT},)")
            lines.extend(_vtk_scalars(name, values))
    return "\n".join(lines) + "\n"


@dataclass
class RunArtifacts:
    root: Path

    def __post_init__(self) -> None:
        self.root = Path(self.root).resolve()
        self.root.mkdir(parents=True, exist_ok=True)

    def _resolve_rel(self, rel_path: str) -> Path:
        rel_path = rel_path.strip().lstrip("/")
        if rel_path.startswith("..") or "/../" in rel_path or "\\..\\" in rel_path:
            raise ArtifactScopeError(f"Path traversal not allowed: {rel_path}")

        p = (self.root / rel_path).resolve()
        try:
            p.relative_to(self.root)
        except ValueError:
            raise ArtifactScopeError(f"Path escapes run directory: {rel_path}") from None
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write_text(self, rel_path: str, content: str) -> Path:
        p = self._resolve_rel(rel_path)
        p.write_text(content, encoding="utf-8")
        return p

    def write_json(self, rel_path: str, payload: Dict[str, Any]) -> Path:
        return self.write_text(rel_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def csv_log(self, rel_path: str, columns: Sequence[str]) -> CsvLog:
        return CsvLog(self._resolve_rel(rel_path), columns)

    def write_csv(self, rel_path: str, columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> Path:
        with self.csv_log(rel_path, columns) as log:
            for row in rows:
                log.write(**row)
            return log.path

    def write_vtk(
        self,
        rel_path: str,
        tri: Triangulation,
        *,
        point_data: Optional[Mapping[str, np.ndarray]] = None,
        cell_data: Optional[Mapping[str, np.ndarray]] = None,
    ) -> Path:
        return self.write_text(rel_path, vtk_text(tri, point_data, cell_data))

    def write_mesh(self, rel_path: str, tri: Triangulation) -> Path:
        p = self._resolve_rel(rel_path)
        write_mesh(p, tri)
        return p


def vertex_average(tri: Triangulation, corner_values: np.ndarray) -> np.ndarray:
    """Average per-corner values (nT, 3) onto vertices."""
    total = np.zeros(tri.n_vertices)
    count = np.zeros(tri.n_vertices)
    np.add.at(total, tri.triangles.ravel(), np.asarray(corner_values, dtype=float).ravel())
    np.add.at(count, tri.triangles.ravel(), 1.0)
    return total / np.maximum(count, 1.0)
