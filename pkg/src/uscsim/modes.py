"""Normal-mode analysis of the junction array and derived system parameters.

The chain block of the circuit is diagonalized as a generalized symmetric-
definite eigenproblem ``L v = omega^2 C v``.  The uniform zero-frequency
(free-particle) solution is discarded; the remaining eigenvectors are
C-orthogonal, so re-expressing the full kinetic matrix in the mode basis
yields an arrowhead matrix: a diagonal mode block bordered by a single row
and column that couple every mode to the qubit node through the coupling
capacitance.  Inverting that arrowhead gives the renormalized (loaded) mode
frequencies, impedances, qubit-mode couplings and mode-mode couplings; the
quartic expansion of the junction potential gives the self- and cross-Kerr
coefficients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla

from .circuit import CircuitSpec, CircuitMatrices, build_matrices
from .constants import CONSTANTS, GHZ, MHZ, NH


@dataclass(frozen=True)
class ModeSet:
    """Chain normal modes, zero mode excluded.

    ``vectors`` has shape ``(n_chain_nodes, n_modes)`` with columns ordered by
    increasing frequency and normalized to ``v^T C v = 1``; the sign gauge
    fixes the first non-negligible component of each column to be positive.
    """

    vectors: np.ndarray
    mode_cap: np.ndarray       # v_k^T C v_k [F]
    mode_ind_inv: np.ndarray   # v_k^T L v_k [1/H]
    freq_bare: np.ndarray      # sqrt of generalized eigenvalues [rad/s]

    @property
    def n_modes(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class EffectiveMatrices:
    """Mode-basis kinetic matrix (arrowhead) and its exact inverse.

    Index convention: rows/cols ``0..n_modes-1`` are chain modes, the last
    one is the qubit node.  ``c_qb_total`` is the effective capacitance seen
    by the transmon junction, obtained from the full circuit capacitance
    matrix so that the displacement of the discarded uniform chain mode is
    accounted for as well.
    """

    c_tilde: np.ndarray
    c_tilde_inv: np.ndarray
    l_tilde_inv: np.ndarray    # diag(v_k^T L v_k) [1/H]
    c_qb_total: float          # [F]


@dataclass(frozen=True)
class SystemParams:
    """Hamiltonian coefficients of the truncated qubit + modes description.

    All rates are angular frequencies [rad/s]; ``impedance`` is in ohms.
    ``coupling``/``mode_mode``/``kerr`` cover the ``n_modes`` lowest retained
    modes.  ``kerr[k, l]`` is the cross-Kerr coefficient for ``k != l`` and
    the self-Kerr coefficient on the diagonal.
    """

    spec: CircuitSpec
    mode_freq: np.ndarray
    impedance: np.ndarray
    coupling: np.ndarray
    mode_mode: np.ndarray
    kerr: np.ndarray
    e_c: float
    e_j: float
    qubit_freq: float

    @property
    def n_modes(self) -> int:
        return self.mode_freq.size

    def to_json_dict(self) -> dict:
        """Serializable summary with conventional units (GHz, MHz, ohm)."""
        return {
            "mode_freq_GHz": [f / GHZ for f in self.mode_freq],
            "impedance_ohm": list(self.impedance),
            "coupling_GHz": [g / GHZ for g in self.coupling],
            "coupling_ratio": [g / w for g, w in
                               zip(self.coupling, self.mode_freq)],
            "mode_mode_MHz": (self.mode_mode / MHZ).tolist(),
            "kerr_MHz": (self.kerr / MHZ).tolist(),
            "e_c_MHz": self.e_c / MHZ,
            "e_j_GHz": self.e_j / GHZ,
            "qubit_freq_GHz": self.qubit_freq / GHZ,
            "flux_bias_phi0": self.spec.flux_bias,
        }

    def to_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def solve_modes(matrices: CircuitMatrices,
                zero_tol: float = 1e-10) -> ModeSet:
    """Diagonalize the chain block of the circuit.

    Solves ``L v = omega^2 C v`` over the chain nodes with the qubit node
    removed (its loading enters later through the arrowhead matrix).  Exactly
    one zero mode is expected for a connected chain; more than one indicates
    a disconnected inductive network and raises ``ValueError``.
    """
    cap_b, ind_b = matrices.array_block()
    try:
        sla.cholesky(cap_b)
    except sla.LinAlgError as err:
        raise ValueError(
            "chain capacitance block is not positive definite; add island, "
            "input or termination capacitance to pin every chain node"
        ) from err

    w2, vecs = sla.eigh(ind_b, cap_b)   # generalized symmetric-definite
    scale = max(w2.max(), 1.0)
    near_zero = w2 < zero_tol * scale
    if near_zero.sum() != 1:
        raise ValueError(
            f"expected exactly one zero-frequency chain mode, found "
            f"{int(near_zero.sum())}; the inductive network appears to be "
            "disconnected")
    keep = ~near_zero
    vecs = vecs[:, keep]
    w2 = w2[keep]

    # Gauge: unit maximum amplitude, and the first component with
    # appreciable weight is positive.  All derived couplings are invariant
    # under per-mode rescaling; this choice keeps the reported mode
    # capacitances and impedances in a physically recognizable range.
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        col = col / np.abs(col).max()
        lead = np.argmax(np.abs(col) > 1e-8)
        if col[lead] < 0:
            col = -col
        vecs[:, k] = col

    mode_cap = np.einsum("nk,nm,mk->k", vecs, cap_b, vecs)
    mode_ind_inv = np.einsum("nk,nm,mk->k", vecs, ind_b, vecs)
    return ModeSet(vectors=vecs, mode_cap=mode_cap,
                   mode_ind_inv=mode_ind_inv, freq_bare=np.sqrt(w2))


def effective_matrices(matrices: CircuitMatrices,
                       modes: ModeSet) -> EffectiveMatrices:
    """Build the arrowhead kinetic matrix in the mode basis and invert it."""
    n = modes.n_modes
    qb = matrices.qubit_index
    c_q = -matrices.cap[0, qb]          # coupling capacitance [F]
    c_qb_node = matrices.cap[qb, qb]    # c_q + c_s [F]

    c_tilde = np.zeros((n + 1, n + 1))
    c_tilde[:n, :n] = np.diag(modes.mode_cap)
    c_tilde[:n, n] = -c_q * modes.vectors[0, :]
    c_tilde[n, :n] = c_tilde[:n, n]
    c_tilde[n, n] = c_qb_node

    # Exact arrowhead inverse through the Schur complement of the qubit
    # entry; the naive dense inverse loses digits because the mode block and
    # the border differ by many orders of magnitude.
    d = modes.mode_cap
    u = c_tilde[:n, n]
    schur = c_qb_node - np.sum(u ** 2 / d)
    if schur <= 0:
        raise ValueError(
            "effective qubit capacitance is non-positive; the coupling "
            "capacitance over-screens the transmon node")
    c_tilde_inv = np.empty_like(c_tilde)
    c_tilde_inv[:n, :n] = np.diag(1.0 / d) + np.outer(u / d, u / d) / schur
    c_tilde_inv[:n, n] = -u / (d * schur)
    c_tilde_inv[n, :n] = c_tilde_inv[:n, n]
    c_tilde_inv[n, n] = 1.0 / schur
    resid = np.abs(c_tilde @ c_tilde_inv - np.eye(n + 1)).max()
    if resid > 1e-10:
        raise ValueError(
            f"arrowhead inversion failed (residual {resid:.2e}); the mode "
            "capacitances may be pathologically scaled")

    # Effective transmon capacitance from the full circuit, so the uniform
    # zero mode's screening of the qubit charge is included.
    cap_inv_full = np.linalg.inv(matrices.cap)
    c_qb_total = 1.0 / cap_inv_full[qb, qb]

    return EffectiveMatrices(c_tilde=c_tilde, c_tilde_inv=c_tilde_inv,
                             l_tilde_inv=np.diag(modes.mode_ind_inv),
                             c_qb_total=c_qb_total)


def _kerr_matrix(spec: CircuitSpec, modes: ModeSet, mode_freq: np.ndarray,
                 l_tilde: np.ndarray, n_report: int) -> np.ndarray:
    """Self- and cross-Kerr coefficients from the quartic junction potential.

    The diagonal elements come from summing the fourth power of the phase
    drop of each mode across every junction; off-diagonal (cross-Kerr)
    elements follow from the identity K_kl = -2 sqrt(K_kk K_ll), which the
    same phase-drop overlap structure enforces.
    """
    hbar = CONSTANTS.hbar
    phi0r = CONSTANTS.phi0_red
    l_j = spec.l_j * NH
    dphi = modes.vectors[:-1, :n_report] - modes.vectors[1:, :n_report]
    amp = (mode_freq[:n_report] * l_tilde[:n_report] / 2.0) ** 2
    diag = -(hbar / (2.0 * l_j * phi0r ** 2)) * amp * np.sum(dphi ** 4, axis=0)
    kerr = -2.0 * np.sqrt(np.outer(-diag, -diag))
    np.fill_diagonal(kerr, diag)
    return kerr


def derive_system_params(spec: CircuitSpec,
                         eff: EffectiveMatrices,
                         modes: ModeSet,
                         n_report: int = 6) -> SystemParams:
    """Collect the Hamiltonian coefficients of the lowest retained modes."""
    from .transmon import TransmonSpec, diagonalize_transmon

    hbar = CONSTANTS.hbar
    e = CONSTANTS.e
    n = modes.n_modes
    m = min(n_report, n)

    c_inv = eff.c_tilde_inv
    c_k = 1.0 / np.diag(c_inv)[:n]          # loaded mode capacitance [F]
    l_k = 1.0 / modes.mode_ind_inv          # mode inductance [H]
    mode_freq = 1.0 / np.sqrt(l_k * c_k)
    impedance = np.sqrt(l_k / c_k)

    e_c = e ** 2 / (2.0 * eff.c_qb_total) / hbar
    e_j = spec.e_j_transmon * GHZ * np.abs(np.cos(np.pi * spec.flux_bias))

    # Charge-charge couplings through the inverse arrowhead.  The qubit-mode
    # coupling uses the transmon asymptotic charge zero-point amplitude
    # (8 E_J / E_C)^(1/4) / 2, with the mode charge zero-point amplitude
    # evaluated at the uncorrected eigenmode frequency 1/sqrt(L_k C_k)
    # (C_k = v_k^T C v_k) rather than the arrowhead-corrected frequency;
    # the ratio of the two enters as the factor bare_freq / mode_freq.
    bare_freq = 1.0 / np.sqrt(l_k * modes.mode_cap)
    coupling = ((8.0 * e_j / e_c) ** 0.25 * e
                * np.sqrt(1.0 / (2.0 * hbar * impedance))
                * (bare_freq / mode_freq)
                * np.abs(c_inv[:n, n]))[:m]
    mode_mode = (c_inv[:m, :m]
                 / (2.0 * np.sqrt(np.outer(impedance[:m], impedance[:m]))))
    np.fill_diagonal(mode_mode, 0.0)

    kerr = _kerr_matrix(spec, modes, mode_freq, l_k, m)

    tr = diagonalize_transmon(TransmonSpec(e_j=e_j, e_c=e_c))
    qubit_freq = tr.energies[1] - tr.energies[0]

    return SystemParams(spec=spec, mode_freq=mode_freq[:m],
                        impedance=impedance[:m], coupling=coupling,
                        mode_mode=mode_mode, kerr=kerr, e_c=e_c, e_j=e_j,
                        qubit_freq=qubit_freq)


def derive_parameters(spec: CircuitSpec, n_report: int = 6
                      ) -> Tuple[CircuitMatrices, ModeSet,
                                 EffectiveMatrices, SystemParams]:
    """Full pipeline from circuit specification to Hamiltonian parameters.

    The input capacitance is excluded from the quantization step (open
    external port); it is still part of the specification and of matrices
    built with :func:`~uscsim.circuit.build_matrices` directly.
    """
    matrices = build_matrices(spec, include_input_cap=False)
    modes = solve_modes(matrices)
    eff = effective_matrices(matrices, modes)
    params = derive_system_params(spec, eff, modes, n_report=n_report)
    return matrices, modes, eff, params


def coupling_at_flux(params: SystemParams, flux: float) -> SystemParams:
    """Re-evaluate flux-dependent quantities at external flux [Phi_0].

    The junction-array quantities (mode frequencies, impedances, Kerr and
    mode-mode couplings) are flux independent; the transmon Josephson energy
    scales as |cos(pi Phi/Phi_0)|, so the qubit frequency is recomputed by
    exact diagonalization and the qubit-mode couplings pick up the quarter
    power of the same factor through the charge zero-point amplitude.
    """
    from .transmon import TransmonSpec, diagonalize_transmon

    factor = np.abs(np.cos(np.pi * flux))
    e_j0 = params.spec.e_j_transmon * GHZ * np.abs(
        np.cos(np.pi * params.spec.flux_bias))
    if e_j0 == 0.0:
        raise ValueError("reference parameters sit at zero Josephson energy")
    e_j = params.spec.e_j_transmon * GHZ * factor
    tr = diagonalize_transmon(TransmonSpec(e_j=e_j, e_c=params.e_c))
    qubit_freq = tr.energies[1] - tr.energies[0]
    spec = params.spec.with_flux(flux)
    return replace(params, spec=spec, e_j=e_j, qubit_freq=qubit_freq,
                   coupling=params.coupling * (e_j / e_j0) ** 0.25)
