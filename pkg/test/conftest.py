import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.realpath(__file__)), '..', 'scripts'))

from geometry import Domain, build_mesh
from sde_sim import build_coefficients, dirichlet_modes


@pytest.fixture
def unit_domain():
    return Domain((0.0,), (1.0,), (-0.5,))


@pytest.fixture
def mesh_1d(unit_domain):
    return build_mesh(unit_domain, 16)


@pytest.fixture
def mesh_2d():
    return build_mesh(Domain((0.0, 0.0), (1.0, 1.0), (-0.5, -0.5)), 8)


@pytest.fixture
def free_coeffs(mesh_1d):
    return build_coefficients(mesh_1d, 1.0)


@pytest.fixture
def first_mode(mesh_1d):
    return dirichlet_modes(mesh_1d, 1)[0]
