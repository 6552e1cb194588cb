import math

import numpy as np
import pytest

from bslab import threebody, twobody
from bslab.model import PairPotential, reduced_masses


@pytest.fixture(scope="session")
def square_well():
    return PairPotential("square-well", 1.0, 1.0)


@pytest.fixture(scope="session")
def sw_grid(square_well):
    return twobody.radial_grid(square_well, 400)


@pytest.fixture(scope="session")
def sw_threshold(square_well, sw_grid):
    return twobody.coupling_threshold(square_well, sw_grid)


@pytest.fixture(scope="session")
def sw_resonance(square_well, sw_grid, sw_threshold):
    return twobody.resonance_function(square_well.with_coupling(sw_threshold.lambda_cr), sw_grid)


@pytest.fixture(scope="session")
def equal_masses():
    return reduced_masses(1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def gaussian_pots(equal_masses):
    g = PairPotential("gaussian", 1.0, 1.0)
    return threebody.pin_pair12(equal_masses, {(1, 2): g, (1, 3): g, (2, 3): g})


@pytest.fixture(scope="session")
def small_recipe():
    return threebody.BasisRecipe(0.3, 300.0, 6, 0.3, 300.0, 6)


@pytest.fixture(scope="session")
def small_elements(small_recipe, equal_masses, gaussian_pots):
    basis = threebody.build_basis(small_recipe, equal_masses)
    return basis, threebody.matrix_elements(basis, equal_masses, gaussian_pots)


@pytest.fixture(scope="session")
def default_elements(equal_masses, gaussian_pots):
    basis = threebody.build_basis(threebody.BasisRecipe(), equal_masses)
    return basis, threebody.matrix_elements(basis, equal_masses, gaussian_pots)


@pytest.fixture(scope="session")
def subthresholds(equal_masses, gaussian_pots):
    return threebody.two_body_subthresholds(equal_masses, gaussian_pots)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
