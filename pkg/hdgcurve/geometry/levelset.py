from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

LevelSet = Callable[[np.ndarray, np.ndarray], np.ndarray]


def evaluate(phi: LevelSet, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return np.asarray(phi(points[..., 0], points[..., 1]), dtype=float)


def gradient(phi: LevelSet, points: np.ndarray, step: float = 1e-7) -> np.ndarray:
    """Central-difference gradient of phi at points (..., 2)."""
    points = np.asarray(points, dtype=float)
    x, y = points[..., 0], points[..., 1]
    gx = (phi(x + step, y) - phi(x - step, y)) / (2.0 * step)
    gy = (phi(x, y + step) - phi(x, y - step)) / (2.0 * step)
    return np.stack([gx, gy], axis=-1)


def ray_radii(
    phi: LevelSet,
    center: np.ndarray,
    angles: np.ndarray,
    s_max: float,
    *,
    samples: int = 256,
    iters: int = 80,
) -> np.ndarray:
    """First zero of phi along each ray from center, by batched bisection; NaN where none."""
    angles = np.asarray(angles, dtype=float)
    d = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    s = np.linspace(0.0, s_max, samples + 1)
    pts = center[None, None, :] + s[None, :, None] * d[:, None, :]
    vals = evaluate(phi, pts)
    outside = vals >= 0.0
    outside[:, 0] = False
    found = outside.any(axis=1)
    j = np.argmax(outside, axis=1)
    lo = s[np.maximum(j - 1, 0)]
    hi = s[j]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = evaluate(phi, center[None, :] + mid[:, None] * d) < 0.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    r = 0.5 * (lo + hi)
    r[~found] = np.nan
    return r


def first_crossing(
    phi: LevelSet,
    origin: np.ndarray,
    direction: np.ndarray,
    s_max: float,
    *,
    samples: int = 64,
    xtol: float = 1e-12,
    atol: float = 1e-12,
) -> Optional[float]:
    """Smallest s in [0, s_max] with phi(origin + s*direction) = 0.

    Returns 0.0 when the origin already lies on the zero level set and None
    when the origin is outside or no sign change is found within s_max.
    """
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = float(direction[0]), float(direction[1])
    s = np.linspace(0.0, s_max, samples + 1)
    vals = np.asarray(phi(ox + s * dx, oy + s * dy), dtype=float)
    if abs(vals[0]) <= atol:
        return 0.0
    if vals[0] > 0.0:
        return None
    hits = np.flatnonzero(vals >= 0.0)
    if hits.size == 0:
        return None
    j = int(hits[0])
    if vals[j] == 0.0:
        return float(s[j])

    def f(t: float) -> float:
        return float(phi(np.array([ox + t * dx]), np.array([oy + t * dy]))[0])

    return float(brentq(f, s[j - 1], s[j], xtol=xtol, rtol=4.0 * np.finfo(float).eps))
