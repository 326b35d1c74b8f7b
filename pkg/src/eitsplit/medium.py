"""Atomic medium parameters and steady-state probe spectroscopy.

All angular quantities are in rad/s. Rabi frequencies are full Rabi
frequencies; the equations of motion use ``omega / 2`` for the coupling.

The optical depth is an *intensity* exponent: on two-level resonance the
probe intensity transmission is ``exp(-od)``. Coupling constants of the
propagation equations are derived from that single number (see
:func:`coupling_product`), so the spectroscopy here and the time-domain
solver share one normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class MediumParams:
    """Homogeneously broadened Lambda medium.

    Attributes
    ----------
    od : float
        Resonant optical depth (intensity attenuation exponent).
    gamma : float
        Full excited-state decay rate of the probe transition, rad/s.
    gamma_gs : float
        Ground-state (spin-wave) dephasing rate, rad/s.
    length : float
        Medium length, m.
    """

    od: float
    gamma: float
    gamma_gs: float
    length: float

    def __post_init__(self):
        if not self.od > 0:
            raise ValueError(f"od must be > 0, got {self.od}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.gamma_gs >= 0:
            raise ValueError(f"gamma_gs must be >= 0, got {self.gamma_gs}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")

    @property
    def half_gamma(self) -> float:
        return 0.5 * self.gamma


def coupling_product(medium: MediumParams) -> float:
    """Return kappa * kappa' per unit length, ``od * gamma / (4 L)``."""
    return medium.od * medium.gamma / (4.0 * medium.length)


@dataclass(frozen=True)
class Susceptibility:
    """Normalized probe response ``chi`` at a probe detuning.

    ``chi`` is scaled so that the two-level response on resonance is ``1j``.
    The amplitude transfer function of the medium is ``exp(1j * od/2 * chi)``.
    """

    detuning: float | np.ndarray
    value: complex | np.ndarray

    def transmission(self, od: float):
        """Intensity transmission through a medium of optical depth ``od``."""
        return np.exp(-od * np.imag(self.value))

    def phase(self, od: float):
        """Phase picked up by the probe amplitude, rad."""
        return 0.5 * od * np.real(self.value)


def eit_susceptibility(delta, omega_c: float, medium: MediumParams) -> Susceptibility:
    """Steady-state Lambda-system probe response.

    ``delta`` may be a scalar or an array of probe detunings (rad/s).
    With ``omega_c == 0`` this is exactly the Lorentzian two-level response.
    """
    if omega_c < 0:
        raise ValueError(f"omega_c must be >= 0, got {omega_c}")
    delta = np.asarray(delta, dtype=float)
    hg = medium.half_gamma
    spin = medium.gamma_gs - 1j * delta
    if omega_c == 0:
        # the spin factor cancels; dividing it out is 0/0 on resonance when gamma_gs = 0
        chi = 1j * hg / (hg - 1j * delta)
    else:
        chi = 1j * hg * spin / ((hg - 1j * delta) * spin + 0.25 * omega_c**2)
    if chi.ndim == 0:
        return Susceptibility(float(delta), complex(chi))
    return Susceptibility(delta, chi)


def eit_transmission(delta, omega_c: float, medium: MediumParams):
    """Intensity transmission with a resonant control of Rabi frequency ``omega_c``."""
    return eit_susceptibility(delta, omega_c, medium).transmission(medium.od)


def two_level_transmission(delta, medium: MediumParams):
    """Lorentzian two-level intensity transmission, ``exp(-od)`` on resonance."""
    delta = np.asarray(delta, dtype=float)
    hg2 = medium.half_gamma**2
    out = np.exp(-medium.od * hg2 / (delta**2 + hg2))
    return float(out) if out.ndim == 0 else out


def group_delay(omega_c: float, medium: MediumParams) -> float:
    """EIT group delay ``od * gamma / omega_c**2`` in seconds.

    This is the small-detuning phase slope of the transfer function in the
    limit of negligible ground-state dephasing.
    """
    if not omega_c > 0:
        raise ValueError("group delay needs omega_c > 0 (no transparency window)")
    return medium.od * medium.gamma / omega_c**2
