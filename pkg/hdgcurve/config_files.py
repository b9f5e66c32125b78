from __future__ import annotations

import os
import time
from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from hdgcurve.estimate.adapt import SolverSettings
from hdgcurve.geometry.domains import Domain
from hdgcurve.geometry.problem import CurvedProblem
from hdgcurve.presets import build_problem, make_domain

OUT_DIR_ENV = "HDGCURVE_OUT_DIR"

DOMAIN_PARAMS = (
    "radius",
    "side",
    "inner_radius",
    "outer_radius",
    "angle",
    "major_radius",
    "minor_radius",
    "elongation",
    "triangularity",
)


class ConfigError(RuntimeError):
    pass


def read_config_file(path: Path) -> Dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment, blank lines are skipped."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _split_list(value):
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    domain: Optional[Literal["disk", "square", "annulus_sector", "shafranov"]] = None
    radius: Optional[float] = Field(default=None, gt=0)
    side: Optional[float] = Field(default=None, gt=0)
    inner_radius: Optional[float] = Field(default=None, gt=0)
    outer_radius: Optional[float] = Field(default=None, gt=0)
    angle: Optional[float] = Field(default=None, gt=0)
    major_radius: Optional[float] = Field(default=None, gt=0)
    minor_radius: Optional[float] = Field(default=None, gt=0)
    elongation: Optional[float] = Field(default=None, gt=0)
    triangularity: Optional[float] = Field(default=None, ge=0, lt=1)

    preset: Literal["square_poly", "square_linear", "disk_sine", "disk_peak", "shafranov"] = "disk_sine"
    lipschitz_scale: float = Field(default=1.0, ge=0)

    k: int = Field(default=1, ge=1)
    tau: float = Field(default=1.0, gt=0)
    target_h: List[float] = Field(default_factory=lambda: [0.2], min_length=1)
    levels: int = Field(default=4, ge=1)
    snap: bool = True

    picard_rtol: float = Field(default=1e-10, gt=0)
    picard_max_iters: int = Field(default=100, ge=1)
    post_tol: float = Field(default=1e-12, gt=0)
    post_max_iters: int = Field(default=50, ge=1)

    theta: float = Field(default=0.5, gt=0, le=1)
    max_dofs: int = Field(default=20000, ge=1)
    eta_tol: float = Field(default=0.0, ge=0)
    max_cycles: int = Field(default=12, ge=1)

    s2_bound: float = Field(default=1.0, gt=0)

    out_dir: Path = Path("runs")
    run_name: Optional[str] = None

    @field_validator("target_h", mode="before")
    @classmethod
    def _target_h_list(cls, value):
        value = _split_list(value)
        if isinstance(value, (int, float)):
            value = [value]
        return value

    @field_validator("target_h")
    @classmethod
    def _target_h_positive(cls, value: List[float]) -> List[float]:
        if any(h <= 0 for h in value):
            raise ValueError("every target_h must be positive")
        return value

    @model_validator(mode="after")
    def _domain_params_match(self) -> "RunConfig":
        given = [name for name in DOMAIN_PARAMS if getattr(self, name) is not None]
        if self.domain is None and given:
            raise ValueError(f"{', '.join(given)} given without a domain")
        if self.domain is not None:
            self.make_domain()
        return self

    def make_domain(self) -> Optional[Domain]:
        if self.domain is None:
            return None
        params = {name: getattr(self, name) for name in DOMAIN_PARAMS}
        return make_domain(self.domain, **params)

    def problem(self) -> CurvedProblem:
        return build_problem(
            self.preset, k=self.k, domain=self.make_domain(), lipschitz_scale=self.lipschitz_scale
        )

    def solver_settings(self) -> SolverSettings:
        return SolverSettings(
            k=self.k,
            tau=self.tau,
            picard_rtol=self.picard_rtol,
            picard_max_iters=self.picard_max_iters,
            post_tol=self.post_tol,
            post_max_iters=self.post_max_iters,
            s2_bound=self.s2_bound,
            theta=self.theta,
            max_dofs=self.max_dofs,
            eta_tol=self.eta_tol,
            max_cycles=self.max_cycles,
            snap=self.snap,
        )

    def run_dir(self, command: str) -> Path:
        name = self.run_name or f"{command}_{self.preset}_{time.strftime('%Y%m%d_%H%M%S')}"
        return self.out_dir / name


def load_run_config(path: Optional[Path] = None, **overrides) -> RunConfig:
    """Read `path` (if given), then apply HDGCURVE_OUT_DIR and keyword overrides, in that order."""
    values: Dict[str, object] = dict(read_config_file(path)) if path is not None else {}
    env_out = os.environ.get(OUT_DIR_ENV)
    if env_out:
        values["out_dir"] = env_out
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**values)
    except ValidationError as e:
        where = f" in {path}" if path is not None else ""
        raise ConfigError(f"invalid configuration{where}:\n{e}") from e
