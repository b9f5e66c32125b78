from __future__ import annotations

import numpy as np
import pytest

from hdgcurve.geometry.domains import DiskDomain, SquareDomain
from hdgcurve.geometry.mesh import Triangulation, build_interior_mesh
from hdgcurve.presets import build_problem


def two_triangle_square(side: float = 1.0) -> Triangulation:
    """[0, side]^2 split along the diagonal (0,0)-(side,side); the diagonal is the refinement edge."""
    vertices = side * np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    triangles = np.array([[1, 2, 0], [3, 0, 2]])
    return Triangulation(vertices=vertices, triangles=triangles)


@pytest.fixture
def square_tri() -> Triangulation:
    return two_triangle_square()


@pytest.fixture(scope="session")
def square_linear():
    return build_problem("square_linear", domain=SquareDomain())


@pytest.fixture(scope="session")
def disk_sine():
    return build_problem("disk_sine", domain=DiskDomain())


@pytest.fixture(scope="session")
def disk_mesh(disk_sine) -> Triangulation:
    return build_interior_mesh(disk_sine, 0.3)


@pytest.fixture(scope="session")
def square_mesh(square_linear) -> Triangulation:
    return build_interior_mesh(square_linear, 0.35)
