# ABOUTME: Shared pytest fixtures for cocycle-lab tests
# ABOUTME: Step distributions used across modules: scalar, rotation and a generic 2×2 measure

import pytest

from cocyclelab.projgeom import ProjPoint
from cocyclelab.randwalk import MeasureSpec

GENERIC_ATOMS = [
    {"matrix": [[2.0, 1.0], [1.0, 1.0]], "p": 0.5},
    {"matrix": [[1.0, -1.0], [1.0, 2.0]], "p": 0.5},
]


@pytest.fixture
def scalar_measure() -> MeasureSpec:
    """μ = δ_{2I}: σ = n·log 2 on every path."""
    return MeasureSpec.from_literal([([[2.0, 0.0], [0.0, 2.0]], 1.0)])


@pytest.fixture
def rotation_measure() -> MeasureSpec:
    """Two rotations: σ ≡ 0."""
    return MeasureSpec.from_literal(
        [([[0.0, -1.0], [1.0, 0.0]], 0.5), ([[0.6, -0.8], [0.8, 0.6]], 0.5)]
    )


@pytest.fixture
def generic_measure() -> MeasureSpec:
    """Strongly irreducible and proximal two-atom measure on GL_2(ℝ)."""
    return MeasureSpec.from_literal(GENERIC_ATOMS)


@pytest.fixture
def e1() -> ProjPoint:
    return ProjPoint.basis(0)
