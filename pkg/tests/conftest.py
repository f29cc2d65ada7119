import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pldyn import MapSpec, example_exv, identity_map, tent
from pldyn.maps import halving_map


@pytest.fixture(scope="session")
def tent2():
    return tent(2.0)


@pytest.fixture(scope="session")
def tent18():
    return tent(1.8)


@pytest.fixture(scope="session")
def tent_sqrt2():
    return tent(np.sqrt(2.0))


@pytest.fixture(scope="session")
def ident():
    return identity_map()


@pytest.fixture(scope="session")
def halving():
    return halving_map()


@pytest.fixture(scope="session")
def exv2():
    return example_exv(2)


@pytest.fixture(scope="session")
def two_tents():
    """Two invariant tent blocks glued by a one-way connector.

    Block [0, 0.4] and block [0.6, 1] are each invariant; the connector
    (0.4, 0.6) drains into the left block, so the right block cannot be
    left but the left one cannot reach it.
    """
    return MapSpec(
        np.array([0.0, 0.2, 0.4, 0.6, 0.8, 1.0]),
        np.array([0.0, 0.4, 0.0, 0.6, 1.0, 0.6]),
        "two-tents",
    )
