import numpy as np
import pytest

from horizonfv import (
    Background,
    build_fhat_table,
    build_uniform_mesh,
    burgers_model,
    polynomial_model,
)


@pytest.fixture(scope="session")
def burgers():
    return burgers_model()


@pytest.fixture(scope="session")
def fhat_table(burgers):
    return build_fhat_table(burgers).freeze()


@pytest.fixture(scope="session")
def quartic():
    # f = s**4/2 - 1/2, h = 0: same structure as the built-in model with a
    # flatter interior; exact floating-point roots at +/-1
    return polynomial_model("quartic", [-0.5, 0.0, 0.0, 0.0, 0.5], [0.0])


@pytest.fixture(scope="session")
def shifted():
    # f = s**2/2, h = -1/2: nonzero boundary flux; f + h matches burgers
    return polynomial_model("shifted", [0.0, 0.0, 0.5], [-0.5])


@pytest.fixture(scope="session")
def structure_models(burgers, quartic, shifted):
    return [burgers, quartic, shifted]


@pytest.fixture
def mesh_m1():
    return build_uniform_mesh(Background(1.0), 12.0, 50)


@pytest.fixture
def mesh_flat():
    return build_uniform_mesh(Background(0.0), 10.0, 50)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
