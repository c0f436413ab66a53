"""Shared fixtures.

The expensive objects (grids, normal forms) are session-scoped: SphereField
arithmetic requires operands on the identical grid object, so tests must
draw them from here rather than building their own copies.
"""

import numpy as np
import pytest

from zoll_lab.hopf import HopfGrid
from zoll_lab.normalform import normal_form
from zoll_lab.starshaped import RadialProfile


@pytest.fixture(scope="session")
def grid16():
    return HopfGrid(n=2, base_nodes=800, fiber_modes=16)


@pytest.fixture(scope="session")
def grid_small():
    return HopfGrid(n=2, base_nodes=400, fiber_modes=16)


@pytest.fixture(scope="session")
def generic_profile():
    return RadialProfile.random_perturbation(2, eps=0.02, degree=4, seed=0)


@pytest.fixture(scope="session")
def nf_bottkol(generic_profile, grid16):
    """Full pipeline on the generic eps=0.02 profile; reused across tests."""
    return normal_form(generic_profile, grid16, mode="bottkol", shoot=True)


@pytest.fixture(scope="session")
def nf_first_order(generic_profile, grid16):
    return normal_form(generic_profile, grid16, mode="first-order", shoot=True)
