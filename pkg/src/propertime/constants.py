"""Physical constants and ion species presets.

Values are CODATA 2018 and pinned here (not pulled from scipy.constants) so
results do not move when scipy updates its CODATA table:

    hbar    = 1.054571817e-34 J s        (exact, from h = 6.62607015e-34 J s)
    c       = 299792458 m/s              (exact)
    k_B     = 1.380649e-23 J/K           (exact)
    u       = 1.66053906660e-27 kg       (atomic mass constant)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

H_PLANCK = 6.62607015e-34
HBAR = H_PLANCK / (2 * math.pi)
C_LIGHT = 299792458.0
K_B = 1.380649e-23
ATOMIC_MASS = 1.66053906660e-27


@dataclass(frozen=True)
class Species:
    name: str
    mass_u: float
    wavelength: float  # clock transition, metres
    trap_hz: float = 20e6

    @property
    def mass(self) -> float:
        return self.mass_u * ATOMIC_MASS

    @property
    def omega_c(self) -> float:
        return 2 * math.pi * C_LIGHT / self.wavelength


# B+ keeps the Al+ transition and trap; only the mass changes.
SPECIES = {
    "al+": Species("al+", mass_u=26.981, wavelength=267e-9),
    "b+": Species("b+", mass_u=10.013, wavelength=267e-9),
}


def species(name: str) -> Species:
    try:
        return SPECIES[name.lower()]
    except KeyError:
        from .errors import ConfigError

        raise ConfigError(f"unknown species preset {name!r}; choose from {sorted(SPECIES)}") from None
