import numpy as np
import pytest

from pipestab.model import (ControllerParams, dynamic_controller,
                            feedforward_controller, reference_plant)


@pytest.fixture(scope="session")
def plant():
    return reference_plant()


@pytest.fixture(scope="session")
def ff():
    return feedforward_controller()


@pytest.fixture(scope="session")
def dyn():
    return dynamic_controller()


@pytest.fixture(scope="session")
def stabilized_dyn(dyn):
    """Sign-reversed boundary feedback: a dynamic design that does stabilize."""
    return ControllerParams(n=2, Ac=dyn.Ac, Bc1=dyn.Bc1, Bc2=dyn.Bc2,
                            C1=-np.asarray(dyn.C1), C2=dyn.C2, K=dyn.K)
