"""Shared fixtures: the reference design pipeline and random circuit specs."""

import numpy as np
import pytest

from uscsim.circuit import CircuitSpec
from uscsim.modes import derive_parameters


@pytest.fixture(scope="session")
def default_spec():
    return CircuitSpec.default()


@pytest.fixture(scope="session")
def default_bundle(default_spec):
    """(matrices, modes, eff, params) of the reference design."""
    return derive_parameters(default_spec)


@pytest.fixture(scope="session")
def default_params(default_bundle):
    return default_bundle[3]


def random_spec(rng: np.random.Generator, n_min: int = 2,
                n_max: int = 30) -> CircuitSpec:
    """Random valid circuit: connected chain, positive-definite kinetics."""
    return CircuitSpec(
        n_junctions=int(rng.integers(n_min, n_max + 1)),
        l_j=float(rng.uniform(0.5, 5.0)),
        c_j=float(rng.uniform(5.0, 60.0)),
        c_0=float(rng.uniform(0.01, 1.0)),
        c_q=float(rng.uniform(10.0, 100.0)),
        c_s=float(rng.uniform(20.0, 100.0)),
        c_i=float(rng.uniform(1.0, 50.0)),
        c_e=float(rng.uniform(1.0, 100.0)),
        e_j_transmon=float(rng.uniform(5.0, 30.0)),
    )
