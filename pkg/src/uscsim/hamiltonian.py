"""Truncated Hamiltonians on the qubit x resonator-mode Hilbert space.

The retained model couples the exact multilevel transmon to the lowest array
mode(s):

    H = sum_q E_q |q><q|  +  sum_k [w_k n_k + K_kk n_k (n_k - 1)]
        + sum_{k<l} K_kl n_k n_l
        + sum_k lambda_k  n_hat (x) i(a_k^dag - a_k)

where ``n_hat`` is the transmon Cooper-pair number operator in its eigenbasis
and the charge-coupling scale ``lambda_k`` is a flux-independent circuit
constant, fixed such that the two-level harmonic limit reproduces the derived
qubit-mode coupling g_k.  Mode self-Kerr corrections enter normal ordered,
so the single-photon transition stays at w_k.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline

from .modes import SystemParams
from .transmon import (TransmonEigen, TransmonSpec, _solve, charge_matrix,
                       diagonalize_transmon)

MAX_DIM = 4096


@dataclass(frozen=True)
class HilbertConfig:
    """Truncation of the simulated Hilbert space."""

    fock_dim: int = 15
    qubit_levels: int = 5
    include_modes: Tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.fock_dim < 2 or self.qubit_levels < 2:
            raise ValueError("need at least two levels per subsystem")
        if len(set(self.include_modes)) != len(self.include_modes):
            raise ValueError("include_modes contains duplicates")
        if self.dim > MAX_DIM:
            raise ValueError(
                f"truncated dimension {self.dim} exceeds the supported "
                f"maximum {MAX_DIM}")

    @property
    def dim(self) -> int:
        return self.qubit_levels * self.fock_dim ** len(self.include_modes)


def destroy(n: int) -> np.ndarray:
    """Harmonic-oscillator lowering operator on an n-dimensional Fock space."""
    return np.diag(np.sqrt(np.arange(1, n)), 1)


def _kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, ops)


def _embed(cfg: HilbertConfig, slot: int, op: np.ndarray) -> np.ndarray:
    """Lift a single-subsystem operator into the full tensor product.

    Slot 0 is the qubit, slot ``1 + i`` the i-th included mode.
    """
    ops = [np.eye(cfg.qubit_levels)] + \
          [np.eye(cfg.fock_dim) for _ in cfg.include_modes]
    ops[slot] = op
    return _kron_all(ops)


@dataclass
class HamiltonianOperator:
    """Dense Hamiltonian with its embedding operators.

    ``matrix`` is Hermitian, in rad/s.  The operator set is what the
    dynamics layer needs: photon-number and lowering operators per retained
    mode, and the harmonic-ladder lowering operator acting on the transmon
    eigenlevels.
    """

    matrix: np.ndarray
    cfg: HilbertConfig
    qubit_lowering: np.ndarray
    mode_lowering: Tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def photon_op(self, which: int = 0) -> np.ndarray:
        a = self.mode_lowering[which]
        return a.conj().T @ a

    def qubit_number_op(self) -> np.ndarray:
        b = self.qubit_lowering
        return b.conj().T @ b


def _assemble(cfg: HilbertConfig, params: SystemParams,
              energies: np.ndarray, charge: np.ndarray,
              coupling_scale: np.ndarray) -> np.ndarray:
    lv, fd = cfg.qubit_levels, cfg.fock_dim
    h = _embed(cfg, 0, np.diag(energies[:lv])).astype(complex)
    a_small = destroy(fd)
    num_small = np.diag(np.arange(fd, dtype=float))
    quad_small = 1j * (a_small.conj().T - a_small)
    nq_small = charge[:lv, :lv]
    for i, k in enumerate(cfg.include_modes):
        w, kerr = params.mode_freq[k], params.kerr[k, k]
        # normal-ordered self-Kerr: w n + K n (n - 1)
        mode_h = w * num_small + kerr * num_small @ (num_small - np.eye(fd))
        h += _embed(cfg, 1 + i, mode_h)
        h += coupling_scale[k] * _embed(cfg, 0, nq_small) \
            @ _embed(cfg, 1 + i, quad_small)
        for j, l in enumerate(cfg.include_modes[:i]):
            h += params.kerr[k, l] * _embed(cfg, 1 + i, num_small) \
                @ _embed(cfg, 1 + j, num_small)
    return h


def build_hamiltonian(params: SystemParams, eigen: TransmonEigen,
                      cfg: Optional[HilbertConfig] = None
                      ) -> HamiltonianOperator:
    """Assemble the truncated Hamiltonian at the flux of ``params``.

    ``eigen`` must be the transmon eigensystem at the same Josephson energy
    as ``params`` (use :func:`uscsim.modes.coupling_at_flux` plus
    :func:`uscsim.transmon.tune_flux` to move both consistently).
    """
    cfg = cfg or HilbertConfig()
    if abs(eigen.spec.e_j - params.e_j) > 1e-6 * max(params.e_j, 1.0):
        raise ValueError(
            "transmon eigensystem and system parameters disagree on the "
            "Josephson energy; tune both to the same flux")
    if eigen.spec.levels < cfg.qubit_levels:
        raise ValueError("eigen retains fewer levels than requested")
    n01 = abs(eigen.charge_op[0, 1])
    if n01 == 0:
        raise ValueError("vanishing charge matrix element; coupling scale "
                         "undefined at this flux")
    scale = params.coupling / n01
    h = _assemble(cfg, params, eigen.energies, eigen.charge_op, scale)
    b = destroy(cfg.qubit_levels)
    return HamiltonianOperator(
        matrix=h, cfg=cfg,
        qubit_lowering=_embed(cfg, 0, b),
        mode_lowering=tuple(_embed(cfg, 1 + i, destroy(cfg.fock_dim))
                            for i in range(len(cfg.include_modes))))


def ground_state_photons(op: HamiltonianOperator, which: int = 0) -> float:
    """Photon content of the ground state of ``op``.

    Warns when the top Fock level of the requested mode carries more than
    1e-6 population, which signals a too-small ``fock_dim``.
    """
    _, vecs = sla.eigh(op.matrix)
    gs = vecs[:, 0]
    fd = op.cfg.fock_dim
    occ = np.abs(gs) ** 2
    # population of the highest Fock level of mode `which`
    shape = (op.cfg.qubit_levels,) + (fd,) * len(op.cfg.include_modes)
    occ_nd = occ.reshape(shape)
    top = occ_nd.take(indices=fd - 1, axis=1 + which).sum()
    if top > 1e-6:
        warnings.warn(
            f"top Fock level holds {top:.2e} ground-state population; "
            "increase fock_dim", RuntimeWarning)
    return float(np.real(gs.conj() @ op.photon_op(which) @ gs))


def spectrum(op: HamiltonianOperator, n_levels: int = 10) -> np.ndarray:
    """Lowest eigenfrequencies relative to the ground state [rad/s]."""
    vals = sla.eigvalsh(op.matrix)
    return vals[:n_levels] - vals[0]


class FluxGridCache:
    """Precomputed transmon spectra and charge operators versus flux.

    The transmon is diagonalized on a uniform grid of external flux covering
    half a flux-quantum period and interpolated with cubic splines; the
    eigenvector sign gauge is chained along the grid so charge matrix
    elements are smooth functions of flux.  Fluxes outside [-1/2, 1/2] are
    folded back using the symmetry of |cos(pi Phi)|.
    """

    def __init__(self, params: SystemParams,
                 cfg: Optional[HilbertConfig] = None,
                 n_points: int = 401, charge_cutoff: int = 30):
        self.params = params
        self.cfg = cfg or HilbertConfig()
        lv = self.cfg.qubit_levels
        if params.spec.flux_bias != 0.0:
            raise ValueError("flux-grid cache expects zero-bias parameters; "
                             "the drive supplies the total flux")

        e_j0 = params.e_j
        grid = np.linspace(0.0, 0.5, n_points)
        energies = np.empty((n_points, lv))
        charges = np.empty((n_points, lv, lv))
        prev_vecs = None
        for i, phi in enumerate(grid):
            e_j = e_j0 * abs(np.cos(np.pi * phi))
            en, vecs = _solve(e_j, params.e_c, charge_cutoff, lv)
            if prev_vecs is not None:
                # chain the sign gauge for smoothness in flux
                signs = np.sign(np.einsum("ni,ni->i", prev_vecs, vecs))
                signs[signs == 0] = 1.0
                vecs = vecs * signs
            prev_vecs = vecs
            energies[i] = en - en[0]
            charges[i] = charge_matrix(vecs, charge_cutoff)
        self._energy_spline = CubicSpline(grid, energies, axis=0)
        self._charge_spline = CubicSpline(grid, charges, axis=0)

        # flux-independent circuit constant lambda_k = g_k / n01 at zero flux
        n01 = abs(charges[0][0, 1])
        self.coupling_scale = np.zeros(params.n_modes)
        for k in self.cfg.include_modes:
            self.coupling_scale[k] = params.coupling[k] / n01

    @staticmethod
    def fold(flux: float) -> float:
        """Map any external flux onto the cached branch [0, 1/2]."""
        x = abs(((flux + 1.0) % 2.0) - 1.0)   # -> [0, 1]
        return min(x, 1.0 - x)

    def transmon_at(self, flux: float):
        """Interpolated (energies, charge_op) at external flux [Phi_0]."""
        x = self.fold(flux)
        return self._energy_spline(x), self._charge_spline(x)

    def hamiltonian(self, flux: float) -> np.ndarray:
        energies, charge = self.transmon_at(flux)
        return _assemble(self.cfg, self.params, energies, charge,
                         self.coupling_scale)

    def operator(self, flux: float) -> HamiltonianOperator:
        b = destroy(self.cfg.qubit_levels)
        return HamiltonianOperator(
            matrix=self.hamiltonian(flux), cfg=self.cfg,
            qubit_lowering=_embed(self.cfg, 0, b),
            mode_lowering=tuple(
                _embed(self.cfg, 1 + i, destroy(self.cfg.fock_dim))
                for i in range(len(self.cfg.include_modes))))


def two_level_rabi(qubit_freq: float, mode_freq: float, coupling: float,
                   fock_dim: int = 40) -> np.ndarray:
    """Quantum Rabi Hamiltonian, for benchmarking against perturbation theory.

    H = w_a sigma^dag sigma + w_r a^dag a + g (sigma^dag + sigma)(a^dag + a),
    returned as a dense matrix on a 2 x fock_dim space [rad/s].
    """
    sm = np.kron(destroy(2), np.eye(fock_dim))
    a = np.kron(np.eye(2), destroy(fock_dim))
    sx = sm + sm.conj().T
    return (qubit_freq * sm.conj().T @ sm + mode_freq * a.conj().T @ a
            + coupling * sx @ (a + a.conj().T)).astype(complex)
