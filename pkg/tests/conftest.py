import numpy as np
import pytest

from vectorplet.clifford import dirac_representation, lower_dirac
from vectorplet.geometry import flat_background
from vectorplet.lattice import Grid, StateSlice


def random_tetrad_fields(rng, n, eps=0.2):
    """Constant random backgrounds: gamma_m = e_m^a gamma^D_a, lambda^m = f^m_a gamma_D^a."""
    e = np.eye(4) + eps * rng.normal(size=(4, 4))
    f = np.eye(4) + eps * rng.normal(size=(4, 4))
    gam = np.einsum("ma,aij->mij", e, lower_dirac().components)
    lam = np.einsum("ma,aij->mij", f, dirac_representation().components)
    shape = (n, 4, 4, 4)
    return np.broadcast_to(gam, shape).copy(), np.broadcast_to(lam, shape).copy()


def flat_fields(n):
    shape = (n, 4, 4, 4)
    return (np.broadcast_to(lower_dirac().components, shape).copy(),
            np.broadcast_to(dirac_representation().components, shape).copy())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def line64():
    return Grid.line(64, 1.0, 0.1)


@pytest.fixture
def flat64(line64):
    return flat_background(line64)


def empty_state(bg):
    return StateSlice.empty(bg.grid, bg.gamma, bg.lam)
