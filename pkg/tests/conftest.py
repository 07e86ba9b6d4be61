import numpy as np
import pytest

from gcdsim import gkp


@pytest.fixture(scope="session")
def converged():
    """Fixed points of both protocols at cutoff 100 and the default epsilon."""
    return {k: gkp.converged_gkp_state(gkp.ProtocolSpec(k), osc=100) for k in ("qudit4", "qubit")}


@pytest.fixture(scope="session")
def vacuum_runs():
    """Noiseless runs from vacuum out to 40 CD operations."""
    return {
        "qudit4": gkp.run_stabilization(gkp.ProtocolSpec("qudit4", rounds=20), osc=100),
        "qubit": gkp.run_stabilization(gkp.ProtocolSpec("qubit", rounds=10), osc=100),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_dm(rng, n, rank=None):
    rank = rank or n
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)
