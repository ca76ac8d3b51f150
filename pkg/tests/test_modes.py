"""Mode-analysis oracles: dense brute force, congruence transform,
linearized-circuit diagonalization and gauge invariance."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spec
from uscsim.circuit import CircuitSpec, build_matrices
from uscsim.constants import CONSTANTS, GHZ, MHZ
from uscsim.modes import (ModeSet, coupling_at_flux, derive_parameters,
                          derive_system_params, effective_matrices,
                          solve_modes)


# ---------------------------------------------------------------------------
# independent oracles


def brute_force_loaded_freqs(spec: CircuitSpec) -> np.ndarray:
    """Loaded mode frequencies by an independent dense computation.

    Chain eigenvectors from a Cholesky-whitened standard eigenproblem
    (numpy), the mode-basis kinetic matrix by explicit congruence transform,
    and its inverse by dense ``numpy.linalg.inv`` -- none of the pipeline's
    generalized-eigh / Schur-complement code paths.
    """
    mats = build_matrices(spec, include_input_cap=False)
    cap_b, ind_b = mats.array_block()
    chol = np.linalg.cholesky(cap_b)
    chol_inv = np.linalg.inv(chol)
    w2, y = np.linalg.eigh(chol_inv @ ind_b @ chol_inv.T)
    vecs = chol_inv.T @ y                     # C-orthonormal columns
    keep = w2 > 1e-10 * max(w2.max(), 1.0)
    assert keep.sum() == w2.size - 1
    vecs, w2 = vecs[:, keep], w2[keep]

    n = vecs.shape[1]
    qb = mats.qubit_index
    basis = np.zeros((qb + 1, n + 1))
    basis[:qb, :n] = vecs
    basis[qb, n] = 1.0
    c_tilde = basis.T @ mats.cap @ basis
    c_inv = np.linalg.inv(c_tilde)
    c_k = 1.0 / np.diag(c_inv)[:n]
    l_inv_k = np.einsum("nk,nm,mk->k", vecs, ind_b, vecs)
    return np.sort(np.sqrt(l_inv_k / c_k))


def independent_self_kerr(spec: CircuitSpec) -> np.ndarray:
    """Diagonal Kerr coefficients recomputed from scratch.

    Uses the quartic term of the junction potential summed junction by
    junction with the phase zero-point amplitude of each loaded mode,
    written without reusing any pipeline intermediate beyond the mode set.
    """
    from uscsim.constants import NH

    mats = build_matrices(spec, include_input_cap=False)
    modes = solve_modes(mats)
    eff = effective_matrices(mats, modes)
    c_k = 1.0 / np.diag(eff.c_tilde_inv)[:modes.n_modes]
    l_k = 1.0 / modes.mode_ind_inv
    omega = 1.0 / np.sqrt(l_k * c_k)
    hbar, phi0r = CONSTANTS.hbar, CONSTANTS.phi0_red
    e_j_arr = phi0r ** 2 / (spec.l_j * NH)    # array junction energy [J]
    out = []
    for k in range(min(3, modes.n_modes)):
        v = modes.vectors[:, k]
        # phase zero-point amplitude of mode k on each junction
        phi_zp2 = hbar * omega[k] * l_k[k] / (2.0 * phi0r ** 2)
        dphi4 = np.sum((v[:-1] - v[1:]) ** 4)
        out.append(-e_j_arr / (4.0 * hbar) * phi_zp2 ** 2 * dphi4 * 2.0)
    return np.asarray(out)


# ---------------------------------------------------------------------------
# tests


def test_reference_mode_frequencies(default_params):
    freqs = default_params.mode_freq[:3] / GHZ
    for got, want in zip(freqs, (2.0, 8.8, 14.45)):
        assert got == pytest.approx(want, rel=0.05)


def test_reference_charging_energy(default_params):
    assert default_params.e_c / MHZ == pytest.approx(300.0, rel=0.05)


def test_reference_coupling_ratios(default_params):
    ratios = default_params.coupling[:3] / default_params.mode_freq[:3]
    for got, want in zip(ratios, (0.61, 0.11, 0.04)):
        assert got == pytest.approx(want, abs=0.03)


def test_reference_kerr_values(default_params):
    k = default_params.kerr / MHZ
    assert k[0, 0] == pytest.approx(-0.03, rel=0.2)
    assert k[2, 2] == pytest.approx(-2.46, rel=0.2)
    assert k[0, 2] == pytest.approx(-0.54, rel=0.2)


def test_zero_mode_removed(default_bundle):
    mats, modes = default_bundle[0], default_bundle[1]
    assert modes.n_modes == mats.qubit_index - 1
    assert np.all(modes.freq_bare > 0)


def test_brute_force_oracle_small_n():
    rng = np.random.default_rng(7)
    for _ in range(20):
        spec = random_spec(rng, n_min=2, n_max=4)
        pipeline = np.sort(derive_parameters(spec, n_report=6)[3].mode_freq)
        oracle = brute_force_loaded_freqs(spec)[:pipeline.size]
        assert np.allclose(pipeline, oracle, rtol=1e-8)


def test_congruence_transform_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        spec = random_spec(rng, n_min=3, n_max=3)
        mats = build_matrices(spec, include_input_cap=False)
        modes = solve_modes(mats)
        eff = effective_matrices(mats, modes)
        qb = mats.qubit_index
        basis = np.zeros((qb + 1, modes.n_modes + 1))
        basis[:qb, :modes.n_modes] = modes.vectors
        basis[qb, modes.n_modes] = 1.0
        direct = basis.T @ mats.cap @ basis
        assert np.allclose(eff.c_tilde, direct, rtol=1e-12,
                           atol=1e-12 * np.abs(direct).max())
        assert np.allclose(eff.c_tilde @ eff.c_tilde_inv,
                           np.eye(direct.shape[0]), atol=1e-10)


def test_self_kerr_independent_recomputation(default_spec):
    params = derive_parameters(default_spec)[3]
    oracle = independent_self_kerr(default_spec)
    got = np.diag(params.kerr)[:3]
    assert np.allclose(got, oracle, rtol=1e-6)


def test_kerr_identity_structure(default_params):
    k = default_params.kerr
    diag = np.diag(k)
    assert np.all(diag < 0)
    for i in range(k.shape[0]):
        for j in range(k.shape[0]):
            if i != j:
                want = -2.0 * np.sqrt(diag[i] * diag[j])
                assert k[i, j] == pytest.approx(want, rel=1e-12)


def test_linearized_circuit_oracle(default_spec, default_params):
    """Replace the transmon junction by its linear inductance and compare
    the exact circuit normal modes with the pipeline's description."""
    import scipy.linalg as sla

    p = default_params
    mats = build_matrices(default_spec, include_input_cap=False)
    hbar, phi0r = CONSTANTS.hbar, CONSTANTS.phi0_red
    l_qb = phi0r ** 2 / (hbar * p.e_j)       # linearized junction [H]
    ind = mats.ind_inv.copy()
    qb = mats.qubit_index
    ind[qb, qb] += 1.0 / l_qb
    w2 = sla.eigh(ind, mats.cap, eigvals_only=True)
    exact = np.sqrt(w2[w2 > 1e-3 * w2.max()])

    # the harmonic qubit frequency sqrt(8 E_J E_C) must appear as an exact
    # circuit mode within the linearization mismatch of the capacitive load
    harmonic = np.sqrt(8.0 * p.e_j * p.e_c)
    assert np.min(np.abs(exact - harmonic)) / harmonic < 0.02
    # every retained pipeline mode sits near an exact hybridized mode; the
    # fundamental is shifted most by the ultrastrong coupling
    for w in p.mode_freq[:3]:
        assert np.min(np.abs(exact - w)) / w < 0.2


def test_sign_gauge_invariance(default_spec):
    """Flipping mode-vector signs leaves every derived parameter unchanged."""
    mats = build_matrices(default_spec, include_input_cap=False)
    modes = solve_modes(mats)
    rng = np.random.default_rng(3)
    signs = rng.choice([-1.0, 1.0], modes.n_modes)
    flipped = ModeSet(vectors=modes.vectors * signs,
                      mode_cap=modes.mode_cap,
                      mode_ind_inv=modes.mode_ind_inv,
                      freq_bare=modes.freq_bare)
    a = derive_system_params(default_spec, effective_matrices(mats, modes),
                             modes)
    b = derive_system_params(default_spec, effective_matrices(mats, flipped),
                             flipped)
    assert np.allclose(a.mode_freq, b.mode_freq, rtol=1e-12)
    assert np.allclose(a.coupling, b.coupling, rtol=1e-12)
    assert np.allclose(a.kerr, b.kerr, rtol=1e-12)


def test_flux_tuning_of_coupling(default_params):
    tuned = coupling_at_flux(default_params, 0.35)
    ratio = tuned.coupling / default_params.coupling
    want = np.abs(np.cos(0.35 * np.pi)) ** 0.25
    assert np.allclose(ratio, want, rtol=1e-12)
    assert tuned.e_j / default_params.e_j == pytest.approx(
        np.abs(np.cos(0.35 * np.pi)), rel=1e-12)
    assert tuned.qubit_freq < default_params.qubit_freq
    # array-mode quantities are flux independent
    assert np.allclose(tuned.mode_freq, default_params.mode_freq)
    assert np.allclose(tuned.kerr, default_params.kerr)


def test_disconnected_chain_rejected(default_spec):
    mats = build_matrices(default_spec, include_input_cap=False)
    ind = mats.ind_inv.copy()
    # cut the chain in the middle: two zero modes appear
    k = default_spec.n_junctions // 2
    for (i, j) in ((k, k), (k + 1, k + 1)):
        ind[i, j] += mats.ind_inv[k, k + 1]
    ind[k, k + 1] = ind[k + 1, k] = 0.0
    cut = dataclasses.replace(mats, ind_inv=ind)
    with pytest.raises(ValueError, match="zero-frequency"):
        solve_modes(cut)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_modes_c_orthogonal(seed):
    spec = random_spec(np.random.default_rng(seed), n_max=10)
    mats = build_matrices(spec, include_input_cap=False)
    modes = solve_modes(mats)
    cap_b, _ = mats.array_block()
    gram = modes.vectors.T @ cap_b @ modes.vectors
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() < 1e-8 * np.abs(np.diag(gram)).max()
    assert np.all(np.diff(modes.freq_bare) >= 0)
