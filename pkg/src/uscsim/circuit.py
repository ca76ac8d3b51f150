"""Lumped-element circuit specification and Lagrangian matrices.

The device is a chain of ``n_junctions`` Josephson junctions (inductance
``l_j`` each, shunted by a junction capacitance ``c_j``) whose islands carry a
ground capacitance ``c_0``.  The first chain node is connected through a
coupling capacitance ``c_q`` to a flux-tunable transmon (shunt capacitance
``c_s``, Josephson energy ``e_j_transmon``), and through an input capacitance
``c_i`` to an external feed line.  The last chain node is terminated to ground
through ``c_e``.

Node ordering of the matrices is ``phi_0 .. phi_N, phi_qb`` where ``N`` is the
number of junctions: node ``n`` and ``n+1`` sandwich junction ``n``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from .constants import FF, GHZ, NH


@dataclass(frozen=True)
class CircuitSpec:
    """User-facing circuit parameters.

    Capacitances are in fF, inductances in nH, the transmon Josephson energy
    in h*GHz and the static flux bias in units of the flux quantum.
    """

    n_junctions: int
    l_j: float            # junction inductance [nH]
    c_j: float            # junction capacitance [fF]
    c_0: float            # island capacitance to ground [fF]
    c_q: float            # qubit coupling capacitance [fF]
    c_s: float            # transmon shunt capacitance [fF]
    c_i: float            # input (feed line) capacitance [fF]
    c_e: float            # termination capacitance [fF]
    e_j_transmon: float   # transmon Josephson energy [h*GHz]
    flux_bias: float = 0.0  # external flux [Phi_0]

    def __post_init__(self):
        if self.n_junctions < 1:
            raise ValueError("n_junctions must be a positive integer")
        if self.l_j <= 0:
            raise ValueError("junction inductance l_j must be positive")
        for name in ("c_j", "c_0", "c_q", "c_s", "c_i", "c_e"):
            if getattr(self, name) < 0:
                raise ValueError(f"capacitance {name} must be non-negative")
        if self.e_j_transmon < 0:
            raise ValueError("e_j_transmon must be non-negative")
        # Wrap the flux bias into [-1, 1] flux quanta; the spectrum is
        # periodic with period 1 and even, so no information is lost.
        phi = ((self.flux_bias + 1.0) % 2.0) - 1.0
        object.__setattr__(self, "flux_bias", phi)

    def with_flux(self, flux: float) -> "CircuitSpec":
        return replace(self, flux_bias=flux)

    @classmethod
    def default(cls) -> "CircuitSpec":
        """Reference high-impedance array design used throughout the tests.

        145 junctions of 1.5 nH / 30 fF, 0.1 fF island capacitance, 85 fF
        qubit coupler, 63 fF transmon shunt, 26 fF input and 72 fF
        termination capacitance; transmon Josephson energy 15 h*GHz.
        """
        return cls(
            n_junctions=145,
            l_j=1.5,
            c_j=30.0,
            c_0=0.1,
            c_q=85.0,
            c_s=63.0,
            c_i=26.0,
            c_e=72.0,
            e_j_transmon=15.0,
        )


@dataclass(frozen=True)
class CircuitMatrices:
    """Capacitance and inverse-inductance matrices of the full circuit.

    ``cap`` [F] and ``ind_inv`` [1/H] are symmetric ``(N+2) x (N+2)`` arrays
    over the node flux vector ``(phi_0 .. phi_N, phi_qb)``.  ``ind_inv`` only
    contains the linear (array) inductances; the transmon junction is kept
    nonlinear and enters through its Josephson energy instead.
    """

    cap: np.ndarray
    ind_inv: np.ndarray
    node_order: tuple
    includes_input_cap: bool

    @property
    def n_nodes(self) -> int:
        return self.cap.shape[0]

    @property
    def qubit_index(self) -> int:
        return self.cap.shape[0] - 1

    def array_block(self):
        """Capacitance / inverse-inductance restricted to the chain nodes."""
        n = self.qubit_index
        return self.cap[:n, :n], self.ind_inv[:n, :n]

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.cap)
            return True
        except np.linalg.LinAlgError:
            return False

    def to_csv(self, path: str) -> None:
        """Write both matrices to a single CSV file (row-major, labelled)."""
        labels = list(self.node_order)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["matrix", "node"] + labels)
            for name, mat in (("cap_F", self.cap), ("ind_inv_perH", self.ind_inv)):
                for lbl, row in zip(labels, mat):
                    writer.writerow([name, lbl] + [f"{x:.12g}" for x in row])


def build_matrices(spec: CircuitSpec,
                   include_input_cap: bool = True) -> CircuitMatrices:
    """Assemble the kinetic and potential matrices of the circuit Lagrangian.

    With ``include_input_cap=False`` the input capacitance ``c_i`` is left
    out, which corresponds to treating the external feed line as an open
    port rather than a ground plane.  The closed-system quantization pipeline
    uses this variant; the default keeps every element of the specification.
    """
    n = spec.n_junctions
    c_j, c_0 = spec.c_j * FF, spec.c_0 * FF
    l_inv = 1.0 / (spec.l_j * NH)

    dim = n + 2          # chain nodes 0..N plus the qubit node
    cap = np.zeros((dim, dim))
    ind_inv = np.zeros((dim, dim))

    for j in range(n):   # junction j sits between nodes j and j+1
        for mat, val in ((cap, c_j), (ind_inv, l_inv)):
            mat[j, j] += val
            mat[j + 1, j + 1] += val
            mat[j, j + 1] -= val
            mat[j + 1, j] -= val
        cap[j, j] += c_0

    if include_input_cap:
        cap[0, 0] += spec.c_i * FF
    cap[n, n] += spec.c_e * FF

    qb = dim - 1
    cap[0, 0] += spec.c_q * FF
    cap[qb, qb] += (spec.c_q + spec.c_s) * FF
    cap[0, qb] -= spec.c_q * FF
    cap[qb, 0] -= spec.c_q * FF

    node_order = tuple(f"phi_{j}" for j in range(n + 1)) + ("phi_qb",)
    return CircuitMatrices(cap=cap, ind_inv=ind_inv, node_order=node_order,
                           includes_input_cap=include_input_cap)


def validate_spec(spec: CircuitSpec,
                  matrices: Optional[CircuitMatrices] = None) -> List[str]:
    """Return a list of human-readable diagnostics (empty when clean)."""
    issues: List[str] = []
    if spec.n_junctions > 10_000:
        issues.append(
            f"n_junctions={spec.n_junctions} exceeds the supported size "
            "(10000); dense diagonalization would be impractical")
    if spec.c_q == 0.0:
        issues.append("c_q=0 decouples the transmon from the array")
    if spec.c_0 == 0.0 and (spec.c_i == 0.0 or spec.c_e == 0.0 or spec.c_s == 0.0):
        issues.append(
            "with c_0=0 the capacitance matrix is positive definite only if "
            "c_i, c_e and c_s are all positive")
    if spec.e_j_transmon == 0.0:
        issues.append("e_j_transmon=0: the transmon has no Josephson energy")
    mats = matrices if matrices is not None else build_matrices(spec)
    if not np.all(np.isfinite(mats.cap)) or not np.all(np.isfinite(mats.ind_inv)):
        issues.append("matrices contain non-finite entries")
    if not mats.is_positive_definite():
        issues.append(
            "capacitance matrix is singular or indefinite; every node needs "
            "a capacitive path that pins its kinetic energy")
    return issues
