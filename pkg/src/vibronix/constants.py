"""Physical constants and unit conversions shared across the package."""

import numpy as np
from scipy import constants as sc

#: hc in eV*nm, fixed so that wavelength <-> energy conversions are reproducible.
HC_EV_NM = 1239.8419

HBAR_EV_S = sc.hbar / sc.e
DEBYE_CM = 1e-21 / sc.c  # 1 D in C*m
AMU_KG = sc.atomic_mass

#: hbar * sqrt(eV / (angstrom^2 amu)) expressed in meV. Converts the square
#: root of a dynamical-matrix eigenvalue to a phonon energy.
SQRT_EIG_TO_MEV = 1e3 * sc.hbar * np.sqrt(sc.e / (1e-20 * AMU_KG)) / sc.e

#: omega * q^2 / (2 hbar) with omega in meV and q in amu^0.5*angstrom.
HUANG_RHYS_PER_MEV_AMU_A2 = (1e-3 * sc.e) * (AMU_KG * 1e-20) / (2.0 * sc.hbar ** 2)

#: Unstrained diamond first-order Raman line (cm^-1).
DIAMOND_RAMAN_CM = 1332.5
#: Stress per Raman shift (GPa per cm^-1).
RAMAN_STRESS_GPA_PER_CM = 0.34
#: Young's modulus of diamond (GPa).
DIAMOND_YOUNG_GPA = 1100.0
#: Highest optical phonon energy of bulk diamond (meV).
DIAMOND_OPTICAL_PHONON_MEV = 165.0
DIAMOND_LATTICE_CONSTANT_A = 3.567
CARBON_MASS_AMU = 12.011


def nm_to_ev(wavelength):
    return HC_EV_NM / np.asarray(wavelength, dtype=float)


def ev_to_nm(energy):
    return HC_EV_NM / np.asarray(energy, dtype=float)


def width_nm_to_mev(width_nm, center_nm):
    """Narrow-line conversion of a wavelength width to an energy width."""
    return 1e3 * HC_EV_NM * np.asarray(width_nm, dtype=float) / np.asarray(center_nm, dtype=float) ** 2


def width_mev_to_nm(width_mev, center_nm):
    return 1e-3 * np.asarray(width_mev, dtype=float) * np.asarray(center_nm, dtype=float) ** 2 / HC_EV_NM
