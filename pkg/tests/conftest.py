import numpy as np
import pytest

from ossify import ParameterSet, build_cylinder_mesh, preset


@pytest.fixture(scope="session")
def params():
    return ParameterSet()


@pytest.fixture(scope="session")
def desk_mesh():
    """Plain cylinder at the reference resolution."""
    return build_cylinder_mesh(30.0, 10.0, 2.5)


@pytest.fixture(scope="session")
def fixateur_mesh():
    return preset("fixateur").mesh.build()


@pytest.fixture(scope="session")
def coarse_mesh():
    return build_cylinder_mesh(30.0, 10.0, 5.0)


@pytest.fixture(scope="session")
def rho_desk(desk_mesh, params):
    return np.full(desk_mesh.n_nodes, params.rho_const)
