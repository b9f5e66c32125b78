from __future__ import annotations

import math
from dataclasses import fields
from typing import Callable, Dict, Optional

import numpy as np

from hdgcurve.geometry.domains import DOMAINS, DiskDomain, Domain, ShafranovDomain, SquareDomain
from hdgcurve.geometry.problem import CurvedProblem, ExactSolution, ProblemDataError

PEAK_CENTER = (0.25, 0.2)
PEAK_SHARPNESS = 80.0
SHAFRANOV_LAMBDA = 1.0


def _unit_kappa(x, y):
    return np.ones_like(np.asarray(x, dtype=float))


def _square_linear(domain: Domain, k: int, scale: float) -> CurvedProblem:
    def u(x, y):
        return 1.0 + 2.0 * x - y

    def q(x, y):
        x = np.asarray(x, dtype=float)
        return np.stack([np.full_like(x, -2.0), np.full_like(x, 1.0)], axis=-1)

    return CurvedProblem(
        domain=domain,
        kappa=_unit_kappa,
        kappa_bounds=(1.0, 1.0),
        source=lambda v, x, y: np.zeros_like(np.asarray(v, dtype=float)),
        lipschitz=0.0,
        dirichlet=u,
        exact=ExactSolution(u=u, q=q),
        name="square_linear",
    )


def _square_poly(domain: Domain, k: int, scale: float) -> CurvedProblem:
    """u = (1 + x + 2y)^k, reproduced exactly by degree-k elements."""

    def p(x, y):
        return 1.0 + x + 2.0 * y

    def u(x, y):
        return p(x, y) ** k

    def q(x, y):
        g = -k * p(x, y) ** (k - 1)
        return np.stack([g, 2.0 * g], axis=-1)

    def source(v, x, y):
        if k < 2:
            return np.zeros_like(np.asarray(v, dtype=float))
        return -5.0 * k * (k - 1) * p(x, y) ** (k - 2) + 0.0 * v

    return CurvedProblem(
        domain=domain,
        kappa=_unit_kappa,
        kappa_bounds=(1.0, 1.0),
        source=source,
        lipschitz=0.0,
        dirichlet=u,
        exact=ExactSolution(u=u, q=q),
        name="square_poly",
    )


def _disk_sine(domain: Domain, k: int, scale: float) -> CurvedProblem:
    """u = sin(pi x) sin(pi y) with F(u) = scale * sin(u) + f."""
    pi = math.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def q(x, y):
        return -pi * np.stack([np.cos(pi * x) * np.sin(pi * y), np.sin(pi * x) * np.cos(pi * y)], axis=-1)

    def source(v, x, y):
        ue = u(x, y)
        return scale * np.sin(v) + 2.0 * pi**2 * ue - scale * np.sin(ue)

    return CurvedProblem(
        domain=domain,
        kappa=_unit_kappa,
        kappa_bounds=(1.0, 1.0),
        source=source,
        lipschitz=abs(scale),
        dirichlet=u,
        exact=ExactSolution(u=u, q=q),
        name="disk_sine",
    )


def _disk_peak(domain: Domain, k: int, scale: float) -> CurvedProblem:
    """Gaussian bump exp(-b r^2) around PEAK_CENTER with F(u) = scale * sin(u) + f."""
    x0, y0 = PEAK_CENTER
    b = PEAK_SHARPNESS

    def u(x, y):
        return np.exp(-b * ((x - x0) ** 2 + (y - y0) ** 2))

    def q(x, y):
        e = u(x, y)
        return np.stack([2.0 * b * (x - x0) * e, 2.0 * b * (y - y0) * e], axis=-1)

    def source(v, x, y):
        r2 = (x - x0) ** 2 + (y - y0) ** 2
        ue = u(x, y)
        return scale * np.sin(v) + (4.0 * b - 4.0 * b**2 * r2) * ue - scale * np.sin(ue)

    return CurvedProblem(
        domain=domain,
        kappa=_unit_kappa,
        kappa_bounds=(1.0, 1.0),
        source=source,
        lipschitz=abs(scale),
        dirichlet=u,
        exact=ExactSolution(u=u, q=q),
        name="disk_peak",
    )


def _shafranov(domain: Domain, k: int, scale: float) -> CurvedProblem:
    """Solov'ev-type profile u = -phi_raw / (a r0)^2 with kappa = 1/x and F(u) = lambda u + f."""
    shape = domain if isinstance(domain, ShafranovDomain) else ShafranovDomain()
    r0, a = shape.major_radius, shape.minor_radius
    E, d = shape.elongation, shape.triangularity
    c = (a * r0) ** 2
    lam = SHAFRANOV_LAMBDA * scale
    x_lo, x_hi = domain.bbox[0], domain.bbox[1]
    if x_lo <= 0.0:
        raise ProblemDataError(f"kappa = 1/x needs the domain in x > 0, got x_min = {x_lo:g}")

    def u(x, y):
        return -shape.raw(x, y) / c

    def q(x, y):
        gx, gy = shape.raw_gradient(x, y)
        return np.stack([gx / (c * x), gy / (c * x)], axis=-1)

    def source(v, x, y):
        div = (2.0 * x + 2.0 * ((1.0 - d) * x**2 + d * r0**2) / (E**2 * x)) / c
        return lam * v + div - lam * u(x, y)

    return CurvedProblem(
        domain=domain,
        kappa=lambda x, y: 1.0 / np.asarray(x, dtype=float),
        kappa_bounds=(1.0 / x_hi, 1.0 / x_lo),
        source=source,
        lipschitz=abs(lam),
        dirichlet=u,
        exact=ExactSolution(u=u, q=q),
        name="shafranov",
    )


PRESETS: Dict[str, Callable[[Domain, int, float], CurvedProblem]] = {
    "square_linear": _square_linear,
    "square_poly": _square_poly,
    "disk_sine": _disk_sine,
    "disk_peak": _disk_peak,
    "shafranov": _shafranov,
}

DEFAULT_DOMAIN = {
    "square_linear": "square",
    "square_poly": "square",
    "disk_sine": "disk",
    "disk_peak": "disk",
    "shafranov": "shafranov",
}


def make_domain(name: str, **params) -> Domain:
    try:
        cls = DOMAINS[name]
    except KeyError:
        raise ValueError(f"unknown domain {name!r}; expected one of {sorted(DOMAINS)}") from None
    given = {k: v for k, v in params.items() if v is not None}
    accepted = {f.name for f in fields(cls)}
    extra = sorted(set(given) - accepted)
    if extra:
        raise ValueError(f"domain {name!r} does not take {', '.join(extra)}")
    return cls(**given)


def build_problem(preset: str, *, k: int = 1, domain: Optional[Domain] = None, lipschitz_scale: float = 1.0) -> CurvedProblem:
    try:
        builder = PRESETS[preset]
    except KeyError:
        raise ValueError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}") from None
    if domain is None:
        domain = {"square": SquareDomain, "disk": DiskDomain, "shafranov": ShafranovDomain}[DEFAULT_DOMAIN[preset]]()
    return builder(domain, k, lipschitz_scale)
