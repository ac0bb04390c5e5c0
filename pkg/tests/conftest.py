import numpy as np
import pytest

from qcb.dynamics import ControlModel
from qcb.states import DensityMatrix, Observable

H0_OSC = np.diag([0.5, 1.5, 2.5, 3.5])
V_OSC = np.diag([1.0, 1.0, 1.0], 1) + np.diag([1.0, 1.0, 1.0], -1)
RHO_OSC = np.diag([0.4, 0.3, 0.2, 0.1])


@pytest.fixture
def osc_model():
    return ControlModel(H0_OSC, (V_OSC,))


@pytest.fixture
def osc_rho():
    return DensityMatrix(RHO_OSC)


@pytest.fixture
def osc_h0():
    return Observable(H0_OSC)


@pytest.fixture
def rng():
    return np.random.default_rng(20001)


def random_density(n, rng, rank=None):
    k = n if rank is None else rank
    z = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    m = z @ z.conj().T
    return DensityMatrix(m / np.trace(m).real)
