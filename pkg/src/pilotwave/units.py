"""Unit systems.

All internal computation uses natural units (hbar = 1, and c = 1 in the
relativistic modules); SI conversion happens only at CLI boundaries.
"""

from dataclasses import dataclass

from .errors import ConfigurationError


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    c: float = 1.0
    description: str = "natural units"

    def __post_init__(self):
        if not (self.hbar > 0 and self.c > 0):
            raise ConfigurationError("hbar and c must be positive")


NATURAL = UnitSystem()

# SI values, used by the CLI when converting user-facing lengths/energies.
HBAR_SI = 1.054571817e-34   # J s
C_SI = 299792458.0          # m / s
