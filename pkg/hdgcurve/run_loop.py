from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from hdgcurve.artifacts import CsvLog, RunArtifacts, vertex_average
from hdgcurve.config_files import RunConfig
from hdgcurve.estimate.adapt import MeshSolution, iter_adaptive_cycles, solve_on_mesh
from hdgcurve.estimate.estimator import TERM_NAMES
from hdgcurve.geometry.audit import audit_assumptions
from hdgcurve.geometry.mesh import Triangulation, build_interior_mesh
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.geometry.refine import refine_uniform
from hdgcurve.geometry.transfer import construct_transfer_map
from hdgcurve.mesh_summary import summarize_mesh, summary_lines

log = logging.getLogger(__name__)

console = Console()

# errors below this are treated as round-off when computing rates
ROUNDOFF = 1e-11

CONVERGENCE_COLUMNS = (
    "level",
    "h",
    "h_max",
    "dofs",
    "e_u",
    "e_q",
    "e_ustar",
    "e_phi",
    "eoc_u",
    "eoc_q",
    "eoc_ustar",
    "eoc_phi",
    "eta",
    "effectivity",
    "picard_iters",
    "picard_factor",
    "status",
)

CYCLE_COLUMNS = (
    "cycle",
    "dofs",
    "eta",
    "osc",
    "picard_iters",
    "e_u",
    "e_q",
    "e_ustar",
    "effectivity",
    "status",
)

AUDIT_COLUMNS = (
    "mode",
    "level",
    "h",
    "boundary_faces",
    "R",
    "H_perp_max",
    "c_ext_max",
    "c_inv_max",
    "s3_max",
    "s3_margin",
    "s4_max",
    "pass_s2",
    "pass_s3",
    "pass_s4",
    "status",
)

ELEMENT_COLUMNS = ("element", "area", "eta") + TERM_NAMES + ("osc", "e_u", "e_q", "e_ustar")


def eoc(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> Optional[float | str]:
    """log(e_i / e_{i+1}) / log(h_i / h_{i+1}); 'exact' at round-off."""
    if e_coarse <= ROUNDOFF and e_fine <= ROUNDOFF:
        return "exact"
    if e_coarse <= 0.0 or e_fine <= 0.0 or h_coarse == h_fine:
        return None
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


def _fmt(value: Any, pattern: str = ".3e") -> str:
    if value is None:
        return "-"
    if isinstance(value, str):
        return value
    return format(value, pattern)


def _max(values: np.ndarray) -> float:
    return float(values.max()) if values.size else 0.0


def _start(config: RunConfig, command: str) -> Tuple[CurvedProblem, RunArtifacts]:
    problem = config.problem()
    run_dir = config.run_dir(command)
    artifacts = RunArtifacts(root=run_dir)
    artifacts.write_json("config.json", config.model_dump(mode="json"))
    console.print(
        Panel.fit(
            f"preset: {problem.name}\ndomain: {problem.domain.name}\nk: {config.k}\nrun_dir: {artifacts.root}",
            title=f"hdgcurve {command}",
        )
    )
    return problem, artifacts


def iter_levels(problem: CurvedProblem, config: RunConfig, *, snap: Optional[bool] = None) -> Iterator[Triangulation]:
    """One mesh per entry of target_h, or `levels` uniform refinements of the first."""
    snap = config.snap if snap is None else snap
    if len(config.target_h) > 1:
        for h in config.target_h:
            yield build_interior_mesh(problem, h)
        return
    tri = build_interior_mesh(problem, config.target_h[0])
    for level in range(config.levels):
        if level:
            tri = refine_uniform(tri, problem, snap=snap)
        yield tri


def field_data(sol: MeshSolution) -> Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]]:
    """Point data (vertex averages of element corner values) and cell data (element means)."""
    tri, space, state = sol.tri, sol.space, sol.state
    corners = tri.corners
    phi_c = space.element.values(corners)
    u_c = np.einsum("tci,ti->tc", phi_c, state.u)
    q_c = np.einsum("tci,tdi->tcd", phi_c, state.q)
    point_data = {
        "u_h": vertex_average(tri, u_c),
        "q_h_norm": vertex_average(tri, np.linalg.norm(q_c, axis=-1)),
    }
    W = space.weights
    area = tri.areas
    cell_data = {
        "u_h": np.einsum("tq,tq->t", W, space.scalar_at_points(state.u)) / area,
        "q_h_norm": np.einsum("tq,tq->t", W, np.linalg.norm(space.vector_at_points(state.q), axis=-1)) / area,
        "eta": sol.report.eta_T,
    }
    if state.ustar is not None:
        us_c = np.einsum("tci,ti->tc", space.star.values(corners), state.ustar)
        point_data["u_star"] = vertex_average(tri, us_c)
        cell_data["u_star"] = np.einsum("tq,tq->t", W, space.star_at_points(state.ustar)) / area
    return point_data, cell_data


def _error_row(log_csv: CsvLog, key: str, index: int, exc: BaseException) -> None:
    log_csv.write(**{key: index, "status": type(exc).__name__})


def run_convergence(config: RunConfig) -> List[Dict[str, Any]]:
    problem, artifacts = _start(config, "converge")
    if problem.exact is None:
        raise ValueError(f"preset {problem.name!r} has no exact solution to converge against")
    settings = config.solver_settings()
    rows: List[Dict[str, Any]] = []
    prev: Optional[Dict[str, Any]] = None

    with artifacts.csv_log("convergence.csv", CONVERGENCE_COLUMNS) as out:
        level = 0
        levels = iter_levels(problem, config)
        while True:
            try:
                tri = next(levels, None)
                if tri is None:
                    break
                console.print(Panel.fit(f"Level {level}  h={tri.h_mean:.4g}  elements={tri.n_elements}", title="converge"))
                sol = solve_on_mesh(tri, problem, settings)
            except Exception as e:
                _error_row(out, "level", level, e)
                console.print(Panel.fit(f"{type(e).__name__}: {e}", title=f"level {level} failed"))
                raise
            errs = sol.errors
            row: Dict[str, Any] = {
                "level": level,
                "h": tri.h_mean,
                "h_max": tri.h,
                "dofs": sol.dofs,
                "e_u": errs.u,
                "e_q": errs.q,
                "e_ustar": errs.ustar,
                "e_phi": errs.phi,
                "eta": sol.report.eta,
                "effectivity": sol.report.effectivity if errs.e_h > 0.0 else None,
                "picard_iters": sol.trace.iterations,
                "picard_factor": sol.trace.last_factor if sol.trace.factors else None,
                "status": "ok",
            }
            if prev is not None:
                for name in ("u", "q", "ustar", "phi"):
                    row[f"eoc_{name}"] = eoc(prev[f"e_{name}"], row[f"e_{name}"], prev["h"], row["h"])
            out.write(**row)
            artifacts.write_json(f"mesh_level{level}.json", summarize_mesh(tri, sol.tmap))
            log.info(
                "level %d: h=%.4e dofs=%d e_u=%.3e e_q=%.3e e_u*=%.3e",
                level, tri.h, sol.dofs, errs.u, errs.q, errs.ustar,
            )
            rows.append(row)
            prev = row
            level += 1

    table = Table(title=f"{problem.name}, k={config.k}")
    for col in ("level", "h", "dofs", "e_u", "eoc_u", "e_q", "eoc_q", "e_ustar", "eoc_ustar", "picard_iters"):
        table.add_column(col, justify="right")
    for row in rows:
        table.add_row(
            str(row["level"]),
            _fmt(row["h"], ".4f"),
            str(row["dofs"]),
            _fmt(row["e_u"]),
            _fmt(row.get("eoc_u"), ".2f"),
            _fmt(row["e_q"]),
            _fmt(row.get("eoc_q"), ".2f"),
            _fmt(row["e_ustar"]),
            _fmt(row.get("eoc_ustar"), ".2f"),
            str(row["picard_iters"]),
        )
    console.print(table)
    return rows


def run_adaptive(config: RunConfig) -> List[Dict[str, Any]]:
    problem, artifacts = _start(config, "adapt")
    settings = config.solver_settings()
    rows: List[Dict[str, Any]] = []
    last: Optional[MeshSolution] = None

    tri = build_interior_mesh(problem, config.target_h[0])
    console.print(Panel.fit(summary_lines(summarize_mesh(tri)), title="initial mesh"))
    with artifacts.csv_log("cycles.csv", CYCLE_COLUMNS) as out:
        cycles = iter_adaptive_cycles(problem, tri, settings)
        cycle = 0
        while True:
            try:
                record = next(cycles, None)
            except Exception as e:
                _error_row(out, "cycle", cycle, e)
                console.print(Panel.fit(f"{type(e).__name__}: {e}", title=f"cycle {cycle} failed"))
                raise
            if record is None:
                break
            sol = record.solution
            errs = sol.errors
            row: Dict[str, Any] = {
                "cycle": record.cycle,
                "dofs": sol.dofs,
                "eta": sol.report.eta,
                "osc": sol.report.osc,
                "picard_iters": sol.trace.iterations,
                "e_u": errs.u if errs is not None else None,
                "e_q": errs.q if errs is not None else None,
                "e_ustar": errs.ustar if errs is not None else None,
                "effectivity": sol.report.effectivity if errs is not None and errs.e_h > 0.0 else None,
                "status": record.stop_reason or "ok",
            }
            out.write(**row)
            rows.append(row)
            console.print(
                Panel.fit(
                    f"dofs={sol.dofs} eta={sol.report.eta:.4e} osc={sol.report.osc:.3e} "
                    f"picard={sol.trace.iterations} audit={'pass' if sol.audit.passed else 'fail'} "
                    f"marked={record.marked.size}/{sol.tri.n_elements}",
                    title=f"cycle {record.cycle}",
                )
            )
            last = sol
            cycle += 1

    if last is not None:
        point_data, cell_data = field_data(last)
        artifacts.write_vtk("final.vtk", last.tri, point_data=point_data, cell_data=cell_data)
        artifacts.write_mesh("final.mesh", last.tri)
        artifacts.write_json("final_mesh.json", summarize_mesh(last.tri, last.tmap))
        console.print(Panel.fit(f"stopped: {rows[-1]['status']}\n{artifacts.root}", title="adapt complete"))
    return rows


def run_audit(config: RunConfig) -> List[Dict[str, Any]]:
    """Audit S2-S4 per level, for snapped and for midpoint boundary refinement."""
    problem, artifacts = _start(config, "audit")
    rows: List[Dict[str, Any]] = []
    with artifacts.csv_log("audit.csv", AUDIT_COLUMNS) as out:
        for mode, snap in (("snapped", True), ("midpoint", False)):
            table = Table(title=f"audit ({mode})")
            for col in ("level", "h", "faces", "R", "max H_perp", "max S3", "S3 margin", "max S4", "pass"):
                table.add_column(col, justify="right")
            for level, tri in enumerate(iter_levels(problem, config, snap=snap)):
                tmap = construct_transfer_map(tri, problem, config.k)
                report = audit_assumptions(
                    tri, tmap, problem, tau_max=config.tau, degree=config.k, s2_bound=config.s2_bound
                )
                row = {
                    "mode": mode,
                    "level": level,
                    "h": tri.h,
                    "boundary_faces": tmap.size,
                    "R": report.R,
                    "H_perp_max": _max(report.H_perp),
                    "c_ext_max": _max(report.c_ext),
                    "c_inv_max": _max(report.c_inv),
                    "s3_max": _max(report.s3_values),
                    "s3_margin": report.s3_margin,
                    "s4_max": _max(report.s4_values),
                    "pass_s2": bool(report.pass_s2.all()),
                    "pass_s3": bool(report.pass_s3.all()),
                    "pass_s4": bool(report.pass_s4.all()),
                    "status": "ok",
                }
                out.write(**row)
                rows.append(row)
                failing = {name: idx.size for name, idx in report.failing_faces().items()}
                log.info("audit %s level %d: R=%.4g failing=%s", mode, level, report.R, failing)
                table.add_row(
                    str(level),
                    _fmt(tri.h, ".4f"),
                    str(tmap.size),
                    _fmt(report.R, ".4f"),
                    _fmt(row["H_perp_max"]),
                    _fmt(row["s3_max"]),
                    _fmt(row["s3_margin"], ".4f"),
                    _fmt(row["s4_max"]),
                    "yes" if report.passed else "[red]no[/red]",
                )
            console.print(table)
    return rows


def run_solve(config: RunConfig, out_prefix: Path) -> MeshSolution:
    """Single solve on the first target_h mesh; writes PREFIX.vtk, PREFIX.mesh and PREFIX.csv."""
    problem = config.problem()
    out_prefix = Path(out_prefix)
    artifacts = RunArtifacts(root=out_prefix.parent)
    stem = out_prefix.name
    tri = build_interior_mesh(problem, config.target_h[0])
    console.print(Panel.fit(summary_lines(summarize_mesh(tri)), title=f"hdgcurve solve: {problem.name}"))
    sol = solve_on_mesh(tri, problem, config.solver_settings())

    point_data, cell_data = field_data(sol)
    artifacts.write_vtk(f"{stem}.vtk", tri, point_data=point_data, cell_data=cell_data)
    artifacts.write_mesh(f"{stem}.mesh", tri)
    report, errs = sol.report, sol.errors
    rows = []
    for t in range(tri.n_elements):
        row: Dict[str, Any] = {"element": t, "area": tri.areas[t], "eta": report.eta_T[t], "osc": report.osc_T[t]}
        row.update({name: report.terms[t, i] for i, name in enumerate(TERM_NAMES)})
        if errs is not None:
            row.update(
                e_u=math.sqrt(errs.u_T[t]),
                e_q=math.sqrt(errs.q_T[t]),
                e_ustar=math.sqrt(errs.ustar_T[t]) if errs.ustar_T is not None else None,
            )
        rows.append(row)
    artifacts.write_csv(f"{stem}.csv", ELEMENT_COLUMNS, rows)

    lines = [
        f"dofs={sol.dofs} picard={sol.trace.iterations} eta={report.eta:.4e} osc={report.osc:.3e}",
        f"audit: R={sol.audit.R:.4g} {'pass' if sol.audit.passed else 'fail'}",
    ]
    if errs is not None:
        lines.append(f"e_u={errs.u:.3e} e_q={errs.q:.3e} e_u*={errs.ustar:.3e} e_phi={errs.phi:.3e}")
    console.print(Panel.fit("\n".join(lines), title="solve complete"))
    return sol
