"""Shared session fixtures: meshes, spaces and assembled systems."""

import pytest

from eddydg.assembly import assemble_system
from eddydg.cohomology import build_harmonic
from eddydg.config import MaterialConfig, PenaltyConfig
from eddydg.fespace import DgSpace
from eddydg.fixtures import boxed_cube, boxed_torus, two_tet


@pytest.fixture(scope="session")
def unit_materials():
    return MaterialConfig.unit()


@pytest.fixture(scope="session")
def two_tet_space():
    return DgSpace(two_tet(), 1)


@pytest.fixture(scope="session")
def cube3_space():
    return DgSpace(boxed_cube(3), 1)


@pytest.fixture(scope="session")
def cube3_space_p2():
    return DgSpace(boxed_cube(3), 2)


@pytest.fixture(scope="session")
def torus5_mesh():
    return boxed_torus(5)


@pytest.fixture(scope="session")
def torus5_space(torus5_mesh):
    harmonic = build_harmonic(torus5_mesh)
    assert harmonic is not None
    return DgSpace(torus5_mesh, 1, harmonic)


@pytest.fixture(scope="session")
def torus5_system(torus5_space, unit_materials):
    penalties = PenaltyConfig.default(torus5_space.degree)
    return assemble_system(torus5_space, unit_materials, penalties)


@pytest.fixture(scope="session")
def cube3_system(cube3_space, unit_materials):
    penalties = PenaltyConfig.default(cube3_space.degree)
    return assemble_system(cube3_space, unit_materials, penalties)
