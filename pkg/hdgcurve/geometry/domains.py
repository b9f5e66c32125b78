from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from hdgcurve.geometry import GeometryError
from hdgcurve.geometry.levelset import ray_radii

Point = Tuple[float, float]


class NonResolvableBoundary(GeometryError):
    pass


def _arclength_split(points: np.ndarray, h: float) -> np.ndarray:
    """Parameters in [0, 1] splitting a sampled open polyline into pieces of length <= h."""
    seg = np.hypot(*np.diff(points, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(1, math.ceil(cum[-1] / h))
    targets = cum[-1] * np.arange(n) / n
    return np.interp(targets, cum, np.linspace(0.0, 1.0, points.shape[0]))


class Domain:
    """A bounded domain {phi < 0} with a piecewise-smooth boundary."""

    name = "domain"

    def levelset(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def center(self) -> Point:
        raise NotImplementedError

    @property
    def bbox(self) -> Tuple[float, float, float, float]:
        raise NotImplementedError

    @property
    def corners(self) -> Tuple[Point, ...]:
        return ()

    @property
    def diameter(self) -> float:
        x0, x1, y0, y1 = self.bbox
        return float(math.hypot(x1 - x0, y1 - y0))

    def boundary_points(self, h: float) -> np.ndarray:
        """Counter-clockwise samples of the boundary, corners included, spacing <= h."""
        return self._star_boundary(h)

    def _star_boundary(self, h: float) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        reach = 1.5 * self.diameter
        breaks = sorted(
            float(np.mod(math.atan2(py - c[1], px - c[0]), 2.0 * math.pi)) for px, py in self.corners
        )
        start = breaks[0] if breaks else 0.0
        m = max(1024, math.ceil(8.0 * math.pi * self.diameter / h))
        fine = start + np.linspace(0.0, 2.0 * math.pi, m + 1)
        fine = np.unique(np.concatenate([fine, np.asarray(breaks, dtype=float)]))
        radii = ray_radii(self.levelset, c, fine, reach)
        if np.any(~np.isfinite(radii)):
            raise NonResolvableBoundary(f"{self.name}: boundary not reached from the centre along every ray")
        pts = c + radii[:, None] * np.column_stack([np.cos(fine), np.sin(fine)])

        knots = (breaks or [start]) + [start + 2.0 * math.pi]
        angles = []
        for a, b in zip(knots[:-1], knots[1:]):
            sel = (fine >= a - 1e-14) & (fine <= b + 1e-14)
            t = _arclength_split(pts[sel], h)
            angles.append(np.interp(t, np.linspace(0.0, 1.0, int(sel.sum())), fine[sel]))
        theta = np.concatenate(angles)
        r = ray_radii(self.levelset, c, theta, reach)
        out = c + r[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        for corner in self.corners:
            i = int(np.argmin(np.hypot(*(out - np.asarray(corner)).T)))
            out[i] = corner
        self._check_spacing(out, h)
        return out

    def _check_spacing(self, pts: np.ndarray, h: float) -> None:
        gaps = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)
        if not np.all(np.isfinite(gaps)) or gaps.max() > 1.5 * h or gaps.min() <= 1e-9 * h:
            raise NonResolvableBoundary(
                f"{self.name}: boundary samples at h={h:g} are not resolvable (gap range {gaps.min():.3g}..{gaps.max():.3g})"
            )


@dataclass(frozen=True)
class DiskDomain(Domain):
    radius: float = 1.0
    cx: float = 0.0
    cy: float = 0.0

    name = "disk"

    def levelset(self, x, y):
        return np.hypot(x - self.cx, y - self.cy) - self.radius

    @property
    def center(self) -> Point:
        return (self.cx, self.cy)

    @property
    def bbox(self):
        r = self.radius
        return (self.cx - r, self.cx + r, self.cy - r, self.cy + r)


@dataclass(frozen=True)
class SquareDomain(Domain):
    side: float = 1.0

    name = "square"

    def levelset(self, x, y):
        s = self.side
        return np.maximum(np.maximum(-x, x - s), np.maximum(-y, y - s))

    @property
    def center(self) -> Point:
        return (0.5 * self.side, 0.5 * self.side)

    @property
    def bbox(self):
        return (0.0, self.side, 0.0, self.side)

    @property
    def corners(self):
        s = self.side
        return ((0.0, 0.0), (s, 0.0), (s, s), (0.0, s))


@dataclass(frozen=True)
class AnnulusSectorDomain(Domain):
    """{r1 < r < r2, 0 < theta < angle} with angle <= pi; the inner arc is concave."""

    inner_radius: float = 0.5
    outer_radius: float = 1.0
    angle: float = 0.5 * math.pi

    name = "annulus_sector"

    def __post_init__(self) -> None:
        if not 0.0 < self.inner_radius < self.outer_radius:
            raise ValueError("annulus sector needs 0 < inner_radius < outer_radius")
        if not 0.0 < self.angle <= math.pi:
            raise ValueError("annulus sector angle must lie in (0, pi]")

    def levelset(self, x, y):
        r = np.hypot(x, y)
        s, c = math.sin(self.angle), math.cos(self.angle)
        radial = np.maximum(self.inner_radius - r, r - self.outer_radius)
        wedge = np.maximum(-y, y * c - x * s)
        return np.maximum(radial, wedge)

    @property
    def center(self) -> Point:
        rm = 0.5 * (self.inner_radius + self.outer_radius)
        return (rm * math.cos(0.5 * self.angle), rm * math.sin(0.5 * self.angle))

    @property
    def bbox(self):
        xs = [p[0] for p in self.corners] + [self.outer_radius * math.cos(t) for t in np.linspace(0, self.angle, 33)]
        ys = [p[1] for p in self.corners] + [self.outer_radius * math.sin(t) for t in np.linspace(0, self.angle, 33)]
        return (min(xs), max(xs), min(ys), max(ys))

    @property
    def corners(self):
        r1, r2, a = self.inner_radius, self.outer_radius, self.angle
        return (
            (r1, 0.0),
            (r2, 0.0),
            (r2 * math.cos(a), r2 * math.sin(a)),
            (r1 * math.cos(a), r1 * math.sin(a)),
        )

    def boundary_points(self, h: float) -> np.ndarray:
        r1, r2, a = self.inner_radius, self.outer_radius, self.angle
        n_out = max(1, math.ceil(r2 * a / h))
        n_in = max(1, math.ceil(r1 * a / h))
        n_rad = max(1, math.ceil((r2 - r1) / h))
        radial = np.arange(n_rad) / n_rad
        pieces = [
            np.column_stack([r1 + (r2 - r1) * radial, np.zeros(n_rad)]),
            np.column_stack(
                [r2 * np.cos(a * np.arange(n_out) / n_out), r2 * np.sin(a * np.arange(n_out) / n_out)]
            ),
            np.column_stack([(r2 - (r2 - r1) * radial) * math.cos(a), (r2 - (r2 - r1) * radial) * math.sin(a)]),
            np.column_stack(
                [r1 * np.cos(a * (1 - np.arange(n_in) / n_in)), r1 * np.sin(a * (1 - np.arange(n_in) / n_in))]
            ),
        ]
        out = np.vstack(pieces)
        self._check_spacing(out, h)
        return out


@dataclass(frozen=True)
class ShafranovDomain(Domain):
    """D-shaped cross-section bounded by a Solov'ev-type flux surface.

    phi_raw = ((1-d) x^2 + d r0^2) y^2 / E^2 + (x^2 - r0^2)^2 / 4 - a^2 r0^2,
    normalised by 2 a r0^2 so that |grad phi| is close to 1 on the boundary.
    """

    major_radius: float = 1.0
    minor_radius: float = 0.3
    elongation: float = 1.4
    triangularity: float = 0.2

    name = "shafranov"

    def __post_init__(self) -> None:
        r0, a = self.major_radius, self.minor_radius
        if not (r0 > 0 and 0 < 2 * a < r0):
            raise ValueError("shafranov domain needs 0 < 2*minor_radius < major_radius")
        if self.elongation <= 0 or not 0.0 <= self.triangularity < 1.0:
            raise ValueError("shafranov domain needs elongation > 0 and 0 <= triangularity < 1")

    def raw(self, x, y):
        r0, a, E, d = self.major_radius, self.minor_radius, self.elongation, self.triangularity
        return ((1.0 - d) * x**2 + d * r0**2) * y**2 / E**2 + 0.25 * (x**2 - r0**2) ** 2 - a**2 * r0**2

    def raw_gradient(self, x, y):
        r0, E, d = self.major_radius, self.elongation, self.triangularity
        gx = 2.0 * (1.0 - d) * x * y**2 / E**2 + x * (x**2 - r0**2)
        gy = 2.0 * ((1.0 - d) * x**2 + d * r0**2) * y / E**2
        return gx, gy

    def levelset(self, x, y):
        return self.raw(x, y) / (2.0 * self.minor_radius * self.major_radius**2)

    @property
    def x_range(self) -> Tuple[float, float]:
        r0, a = self.major_radius, self.minor_radius
        return (math.sqrt(r0**2 - 2 * a * r0), math.sqrt(r0**2 + 2 * a * r0))

    @property
    def center(self) -> Point:
        x0, x1 = self.x_range
        return (0.5 * (x0 + x1), 0.0)

    @property
    def bbox(self):
        r0, a, E, d = self.major_radius, self.minor_radius, self.elongation, self.triangularity
        x0, x1 = self.x_range
        xs = np.linspace(x0, x1, 2001)
        y2 = (a**2 * r0**2 - 0.25 * (xs**2 - r0**2) ** 2) * E**2 / ((1.0 - d) * xs**2 + d * r0**2)
        ymax = float(np.sqrt(np.maximum(y2, 0.0)).max())
        return (x0, x1, -ymax, ymax)


DOMAINS = {
    "disk": DiskDomain,
    "square": SquareDomain,
    "annulus_sector": AnnulusSectorDomain,
    "shafranov": ShafranovDomain,
}
