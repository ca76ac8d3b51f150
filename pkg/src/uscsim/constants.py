"""Physical constants used throughout the package.

All internal computations are carried out in SI units; energies and rates are
expressed in angular-frequency units (rad/s) unless noted otherwise.  The
constants are fixed CODATA values and are not user-configurable.
"""

from dataclasses import dataclass

import scipy.constants as _const


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants (SI)."""

    e: float = _const.e            # elementary charge [C]
    h: float = _const.h            # Planck constant [J s]
    hbar: float = _const.hbar      # reduced Planck constant [J s]

    @property
    def phi0(self) -> float:
        """Magnetic flux quantum h / 2e [Wb]."""
        return self.h / (2.0 * self.e)

    @property
    def phi0_red(self) -> float:
        """Reduced flux quantum hbar / 2e [Wb/rad]."""
        return self.hbar / (2.0 * self.e)


CONSTANTS = PhysicalConstants()

# Unit conversion helpers (kept trivial on purpose -- the point is that unit
# changes happen at module boundaries, never silently inside a formula).
FF = 1e-15      # femtofarad -> farad
NH = 1e-9       # nanohenry -> henry
GHZ = 2.0 * _const.pi * 1e9    # GHz -> rad/s
MHZ = 2.0 * _const.pi * 1e6    # MHz -> rad/s
KHZ = 2.0 * _const.pi * 1e3    # kHz -> rad/s
NS = 1e-9       # nanosecond -> second
US = 1e-6       # microsecond -> second
