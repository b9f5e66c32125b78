from __future__ import annotations

import csv
import json

import pytest

from hdgcurve.config_files import load_run_config
from hdgcurve.run_loop import (
    AUDIT_COLUMNS,
    CONVERGENCE_COLUMNS,
    eoc,
    iter_levels,
    run_adaptive,
    run_audit,
    run_convergence,
    run_solve,
)


def _read_csv(path):
    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_eoc():
    assert eoc(1e-2, 2.5e-3, 0.2, 0.1) == pytest.approx(2.0)
    assert eoc(1e-14, 1e-15, 0.2, 0.1) == "exact"
    assert eoc(1e-2, 0.0, 0.2, 0.1) is None
    assert eoc(1e-2, 1e-3, 0.1, 0.1) is None


def test_levels_from_several_target_h(disk_sine):
    config = load_run_config(target_h="0.4, 0.3", levels=5)
    meshes = list(iter_levels(disk_sine, config))
    assert len(meshes) == 2
    assert meshes[1].n_elements > meshes[0].n_elements


def test_levels_by_uniform_refinement(disk_sine):
    config = load_run_config(target_h=0.3, levels=2)
    coarse, fine = iter_levels(disk_sine, config)
    assert fine.n_elements == 4 * coarse.n_elements


def test_convergence_run_writes_its_artifacts(tmp_path):
    config = load_run_config(
        preset="square_linear", domain="square", target_h=0.35, levels=2, out_dir=str(tmp_path), run_name="conv"
    )
    rows = run_convergence(config)
    assert [r["level"] for r in rows] == [0, 1]
    assert rows[1]["eoc_u"] == "exact"
    run = tmp_path / "conv"
    table = _read_csv(run / "convergence.csv")
    assert list(table[0]) == list(CONVERGENCE_COLUMNS)
    assert [r["status"] for r in table] == ["ok", "ok"]
    assert table[0]["eoc_u"] == ""
    assert float(table[1]["h"]) == pytest.approx(0.5 * float(table[0]["h"]))
    assert float(table[0]["h_max"]) >= float(table[0]["h"])
    assert json.loads((run / "config.json").read_text(encoding="utf-8"))["preset"] == "square_linear"
    summary = json.loads((run / "mesh_level1.json").read_text(encoding="utf-8"))
    assert summary["transfer"]["R"] == 0.0


def test_audit_run_covers_both_refinement_modes(tmp_path):
    config = load_run_config(preset="disk_sine", target_h=0.3, levels=2, out_dir=str(tmp_path), run_name="audit")
    rows = run_audit(config)
    assert [(r["mode"], r["level"]) for r in rows] == [("snapped", 0), ("snapped", 1), ("midpoint", 0), ("midpoint", 1)]
    table = _read_csv(tmp_path / "audit" / "audit.csv")
    assert list(table[0]) == list(AUDIT_COLUMNS)
    assert len(table) == 4
    # snapped refinement shrinks the gap between the polygon and the circle faster
    assert rows[1]["H_perp_max"] < rows[3]["H_perp_max"]


def test_adaptive_run_writes_final_mesh(tmp_path):
    config = load_run_config(
        preset="disk_sine", target_h=0.3, max_cycles=2, out_dir=str(tmp_path), run_name="adapt"
    )
    rows = run_adaptive(config)
    assert [r["status"] for r in rows] == ["ok", "max_cycles"]
    run = tmp_path / "adapt"
    assert len(_read_csv(run / "cycles.csv")) == 2
    assert (run / "final.vtk").read_text(encoding="utf-8").startswith("# vtk DataFile Version 3.0")
    assert (run / "final.mesh").exists()
    assert (run / "final_mesh.json").exists()


def test_single_solve_writes_prefix_files(tmp_path):
    config = load_run_config(preset="square_linear", domain="square", target_h=0.35)
    sol = run_solve(config, tmp_path / "out" / "sq")
    for suffix in (".vtk", ".mesh", ".csv"):
        assert (tmp_path / "out" / f"sq{suffix}").exists()
    per_element = _read_csv(tmp_path / "out" / "sq.csv")
    assert len(per_element) == sol.tri.n_elements
    assert float(per_element[0]["e_u"]) <= 1e-10
