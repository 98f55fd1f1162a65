import numpy as np
import pytest

from meanforce.exact import coupling_operator, system_hamiltonian


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def random_hermitian(rng, d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (x + x.conj().T) / 2


def random_density(rng, d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def qubit():
    return system_hamiltonian(1.0), coupling_operator()


@pytest.fixture
def excited():
    return np.diag([0.0, 1.0]).astype(complex)
