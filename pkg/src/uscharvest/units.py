"""Conversion between model units (hbar = 1, frequencies in w_r) and SI.

Everything internal is expressed relative to the resonator frequency; a
single record anchors that scale to laboratory units at the interface.
"""

from dataclasses import dataclass

import numpy as np

H_PLANCK = 6.62607015e-34  # J s
HBAR = H_PLANCK / (2 * np.pi)
K_BOLTZMANN = 1.380649e-23  # J / K
PHI0_REDUCED = HBAR / (2 * 1.602176634e-19)  # hbar / 2e, Wb


@dataclass(frozen=True)
class UnitSystem:
    """Anchors model units to SI via the resonator frequency f_r = w_r/2pi."""

    f_r_ghz: float = 0.5

    @property
    def omega_r(self):
        """Angular resonator frequency in rad/s."""
        return 2 * np.pi * self.f_r_ghz * 1e9

    def time_to_ns(self, t_model):
        """Durations quoted in 1/w_r."""
        return np.asarray(t_model) / self.omega_r * 1e9

    def time_from_ns(self, t_ns):
        return np.asarray(t_ns) * 1e-9 * self.omega_r

    def frequency_to_ghz(self, w_model):
        """Angular frequencies quoted in w_r, returned as f = w/2pi in GHz."""
        return np.asarray(w_model) * self.f_r_ghz

    def frequency_from_ghz(self, f_ghz):
        return np.asarray(f_ghz) / self.f_r_ghz

    def temperature_to_mk(self, t_model):
        """Temperatures quoted in hbar w_r / k_B."""
        return np.asarray(t_model) * HBAR * self.omega_r / K_BOLTZMANN * 1e3

    def temperature_from_mk(self, t_mk):
        return np.asarray(t_mk) * 1e-3 * K_BOLTZMANN / (HBAR * self.omega_r)

    def inductance_from_el(self, e_l_ghz):
        """Resonator inductance (H) from the inductive energy E_L/h in GHz."""
        return PHI0_REDUCED ** 2 / (e_l_ghz * 1e9 * H_PLANCK)
