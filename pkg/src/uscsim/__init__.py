"""Circuit quantization and ultrastrong-coupling dynamics for a transmon
capacitively coupled to a Josephson-junction-array multimode resonator.

Subpackage layout:

- ``circuit``      lumped-element specification and Lagrangian matrices
- ``modes``        normal-mode decomposition and derived system parameters
- ``transmon``     charge-basis transmon diagonalization and flux tuning
- ``hamiltonian``  truncated qubit x mode Hamiltonians and flux-grid cache
- ``dynamics``     dressed-basis Lindblad evolution under flux modulation
- ``optimize``     coupling-ratio optimization over circuit parameters
- ``readout``      cross-Kerr probe-mode homodyne readout model
- ``cli``          command-line harness
"""

from . import circuit, modes, transmon, hamiltonian, dynamics, optimize, readout

__all__ = [
    "circuit",
    "modes",
    "transmon",
    "hamiltonian",
    "dynamics",
    "optimize",
    "readout",
]

__version__ = "0.1.0"
