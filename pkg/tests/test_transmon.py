"""Charge-basis transmon checks against transmon-limit asymptotics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uscsim.constants import GHZ
from uscsim.transmon import (TransmonSpec, asymptotic_charge_zpf,
                             asymptotic_qubit_freq, diagonalize_transmon,
                             tune_flux)

E_C = 0.3 * GHZ


@pytest.fixture(scope="module")
def reference_eigen():
    return diagonalize_transmon(TransmonSpec(e_j=50.0 * E_C, e_c=E_C))


def test_qubit_frequency(reference_eigen):
    # E_J/E_C = 50 at E_C = 2pi x 300 MHz: transition at 5.7 GHz
    assert reference_eigen.qubit_freq / GHZ == pytest.approx(5.7, rel=0.02)


def test_anharmonicity_band(reference_eigen):
    anh = reference_eigen.anharmonicity / GHZ
    assert -0.36 <= anh <= -0.27


def test_asymptotic_formulas(reference_eigen):
    spec = reference_eigen.spec
    assert reference_eigen.qubit_freq == pytest.approx(
        asymptotic_qubit_freq(spec.e_j, spec.e_c), rel=0.02)
    assert abs(reference_eigen.charge_op[0, 1]) == pytest.approx(
        asymptotic_charge_zpf(spec.e_j, spec.e_c), rel=0.05)


def test_charge_operator_parity(reference_eigen):
    # the number operator only connects states of opposite parity
    n = reference_eigen.charge_op
    assert np.allclose(n, n.T)
    for i in range(n.shape[0]):
        for j in range(n.shape[1]):
            if (i + j) % 2 == 0 and i != j:
                assert abs(n[i, j]) < 1e-8 * abs(n[0, 1])
    assert np.allclose(np.diag(n), 0.0, atol=1e-8)


def test_flux_tuning():
    spec = TransmonSpec(e_j=50.0 * E_C, e_c=E_C)
    tuned = tune_flux(spec, 0.35)
    assert tuned.e_j / spec.e_j == pytest.approx(
        np.cos(0.35 * np.pi), rel=1e-12)
    # half a flux quantum removes the Josephson energy entirely
    assert tune_flux(spec, 0.5).e_j == pytest.approx(0.0, abs=1e-12 * spec.e_j)
    # the transition frequency collapses approaching the half quantum
    w_near = diagonalize_transmon(tune_flux(spec, 0.49),
                                  check_convergence=False).qubit_freq
    assert w_near < 0.25 * diagonalize_transmon(spec).qubit_freq


def test_convergence_guard():
    with pytest.raises(ValueError, match="charge_cutoff"):
        TransmonSpec(e_j=500.0 * E_C, e_c=E_C, charge_cutoff=12)


def test_spec_validation():
    with pytest.raises(ValueError):
        TransmonSpec(e_j=1.0, e_c=0.0)
    with pytest.raises(ValueError):
        TransmonSpec(e_j=-1.0, e_c=1.0)
    with pytest.raises(ValueError):
        TransmonSpec(e_j=1.0, e_c=1.0, levels=1)


@settings(max_examples=25, deadline=None)
@given(ratio=st.floats(10.0, 200.0), levels=st.integers(3, 8))
def test_spectrum_properties(ratio, levels):
    eigen = diagonalize_transmon(
        TransmonSpec(e_j=ratio * E_C, e_c=E_C, charge_cutoff=40,
                     levels=levels), check_convergence=False)
    assert eigen.energies[0] == 0.0
    assert np.all(np.diff(eigen.energies) > 0)
    # levels deep in the cosine well are sub-harmonic; levels above the well
    # edge cross back to charging parabolas with growing spacings
    gaps = np.diff(eigen.energies)
    if ratio >= 20.0:
        assert gaps[1] < gaps[0]
    assert np.allclose(eigen.charge_op, eigen.charge_op.T)
