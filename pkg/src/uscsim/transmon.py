"""Charge-basis transmon diagonalization and flux tuning.

The transmon Hamiltonian ``4 E_C n^2 - E_J cos(phi)`` is represented on the
Cooper-pair number basis ``|-N_c> .. |+N_c>``, where it is tridiagonal:
``4 E_C n^2`` on the diagonal and ``-E_J / 2`` on the two off-diagonals.
Exact eigenstates and charge matrix elements are used everywhere; asymptotic
transmon-limit expressions only appear as cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla


@dataclass(frozen=True)
class TransmonSpec:
    """Transmon parameters in angular-frequency units [rad/s].

    ``charge_cutoff`` is the maximum Cooper-pair number of the charge basis
    and ``levels`` the number of retained eigenstates.
    """

    e_j: float
    e_c: float
    charge_cutoff: int = 30
    levels: int = 5

    def __post_init__(self):
        if self.e_c <= 0:
            raise ValueError("charging energy e_c must be positive")
        if self.e_j < 0:
            raise ValueError("Josephson energy e_j must be non-negative")
        if self.levels < 2:
            raise ValueError("at least two levels must be retained")
        # Rule of thumb: the charge support of level q grows with
        # (E_J / 8 E_C)^(1/4); keep a generous margin above it.
        needed = int(np.ceil(5.0 * (max(self.e_j, 0.0)
                                    / (8.0 * self.e_c)) ** 0.25 + 10.0))
        if self.charge_cutoff < needed:
            raise ValueError(
                f"charge_cutoff={self.charge_cutoff} too small for "
                f"e_j/e_c={self.e_j / self.e_c:.1f}; need >= {needed}")
        if 2 * self.charge_cutoff + 1 < self.levels:
            raise ValueError("charge basis smaller than requested levels")


@dataclass(frozen=True)
class TransmonEigen:
    """Retained transmon eigensystem.

    ``energies`` are ground-referenced eigenfrequencies [rad/s].
    ``charge_op[i, j] = <i| n |j>`` is the Cooper-pair number operator in the
    eigenbasis; it is real symmetric and connects only states of opposite
    parity when the spectrum is non-degenerate.
    """

    spec: TransmonSpec
    energies: np.ndarray
    charge_op: np.ndarray

    @property
    def qubit_freq(self) -> float:
        return self.energies[1] - self.energies[0]

    @property
    def anharmonicity(self) -> float:
        """(E_2 - E_1) - (E_1 - E_0); negative in the transmon regime."""
        return self.energies[2] - 2.0 * self.energies[1] + self.energies[0]


def _solve(e_j: float, e_c: float, cutoff: int, levels: int):
    """Lowest eigenpairs on the charge basis; returns (energies, vectors).

    The default sign gauge makes the largest-magnitude component of each
    eigenvector positive.
    """
    n = np.arange(-cutoff, cutoff + 1, dtype=float)
    diag = 4.0 * e_c * n ** 2
    off = np.full(2 * cutoff, -e_j / 2.0)
    energies, vecs = sla.eigh_tridiagonal(
        diag, off, select="i", select_range=(0, levels - 1))
    for k in range(levels):
        lead = np.argmax(np.abs(vecs[:, k]))
        if vecs[lead, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return energies, vecs


def charge_matrix(vecs: np.ndarray, cutoff: int) -> np.ndarray:
    """Cooper-pair number operator in the eigenbasis spanned by ``vecs``."""
    n = np.arange(-cutoff, cutoff + 1, dtype=float)
    return vecs.T @ (n[:, None] * vecs)


def diagonalize_transmon(spec: TransmonSpec,
                         check_convergence: bool = True) -> TransmonEigen:
    """Exact diagonalization on the charge basis.

    With ``check_convergence`` the diagonalization is repeated at twice the
    charge cutoff; a relative shift of the qubit transition larger than 1e-8
    raises ``ValueError``.
    """
    energies, vecs = _solve(spec.e_j, spec.e_c, spec.charge_cutoff,
                            spec.levels)
    charge = charge_matrix(vecs, spec.charge_cutoff)
    if check_convergence:
        e2, _ = _solve(spec.e_j, spec.e_c, 2 * spec.charge_cutoff,
                       spec.levels)
        w01, w01_2 = energies[1] - energies[0], e2[1] - e2[0]
        if w01 > 0 and abs(w01 - w01_2) > 1e-8 * w01:
            raise ValueError(
                "transmon spectrum not converged in the charge cutoff; "
                f"increase charge_cutoff beyond {spec.charge_cutoff}")
    return TransmonEigen(spec=spec, energies=energies - energies[0],
                         charge_op=charge)


def tune_flux(spec: TransmonSpec, flux: float) -> TransmonSpec:
    """Flux-tuned copy of the spec: E_J -> E_J |cos(pi Phi / Phi_0)|.

    ``flux`` is in units of the flux quantum.  At half a flux quantum the
    Josephson energy vanishes and the spectrum reduces to pure charging
    parabolas.
    """
    return replace(spec, e_j=spec.e_j * abs(np.cos(np.pi * flux)))


def asymptotic_qubit_freq(e_j: float, e_c: float) -> float:
    """Transmon-limit estimate sqrt(8 E_J E_C) - E_C [rad/s]."""
    return np.sqrt(8.0 * e_j * e_c) - e_c


def asymptotic_charge_zpf(e_j: float, e_c: float) -> float:
    """Transmon-limit charge matrix element (E_J / 32 E_C)^(1/4)."""
    return (e_j / (32.0 * e_c)) ** 0.25
