import numpy as np
import pytest

from flywheel.engine import ControlSpec, EffectiveBath, EngineSpec
from flywheel.fock import FockSpace

# the small-rate working point used throughout: every stationary quantity is
# order one and fits comfortably in a truncated Fock space
DESK_BATH = dict(Gamma_e=0.01, beta_e=-0.5, omega_o=1.0)
DESK_CONTROL = dict(eps_d=0.02, gamma_m=0.04, kappa_f=0.02)

ENGINE_EXAMPLE = dict(omega_h=3.0, omega_c=2.0, beta_h=0.1, beta_c=1.0,
                      Gamma_h=0.1, Gamma_c=0.1, g=0.01)


@pytest.fixture(scope="session")
def desk_bath():
    return EffectiveBath.from_rates(**DESK_BATH)


@pytest.fixture(scope="session")
def desk_control():
    return ControlSpec(**DESK_CONTROL)


@pytest.fixture(scope="session")
def engine_example():
    return EngineSpec(**ENGINE_EXAMPLE)


@pytest.fixture(scope="session")
def space34():
    return FockSpace(34)


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return a + a.conj().T
