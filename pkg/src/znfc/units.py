"""Unit system and conversion factors.

Internal units: time in microseconds, angular frequency in rad/us,
absorber thickness in micrometres, magnetic field in tesla.
"""

import math

from scipy import constants as _c

# nuclear magneton / h, in MHz per tesla
MU_N_OVER_H = _c.physical_constants["nuclear magneton in MHz/T"][0]
# nuclear magneton / hbar, in rad/us per tesla
MU_N_OVER_HBAR = 2.0 * math.pi * MU_N_OVER_H

UM_TO_CM = 1e-4
MU_0 = _c.mu_0
C_LIGHT = _c.c
HBAR = _c.hbar
KEV = 1e3 * _c.electron_volt

TWO_PI = 2.0 * math.pi


def to_khz(omega):
    """Angular frequency in rad/us -> cyclic frequency in kHz."""
    return omega / TWO_PI * 1e3


def from_khz(f_khz):
    return f_khz * 1e-3 * TWO_PI
