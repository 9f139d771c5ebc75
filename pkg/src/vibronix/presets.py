"""Named parameter sets.

The ``il1`` preset describes a bright diamond color center with a ZPL near
547.5 nm and a four-line vibronic ladder. Each entry of :data:`IL1_TABLE`
records the value, its unit and the measurement it stands for.
"""

import numpy as np

from .constants import HC_EV_NM
from .photon.simulate import EmitterModel
from .vibronic import TemperatureModel, VibronicParams, huang_rhys_from_dw

#: name -> (value, unit, what the number is)
IL1_TABLE = {
    "e_zpl": (2.27, "eV", "zero-phonon line energy at room temperature (547.5 nm)"),
    "lvm_quantum": (187.0, "meV", "energy gap between consecutive ladder lines"),
    "anharmonicity": (1.2, "meV/level", "decrease of the gap per vibrational level"),
    "debye_waller": (0.38, "fraction", "ZPL share of the emission at room temperature"),
    "zpl_fwhm": (1.28, "meV", "room-temperature ZPL linewidth (0.31 nm)"),
    "gamma_vib": (0.26, "meV", "linewidth increment per vibrational level"),
    "n_peaks": (4, "lines", "ZPL plus three phonon replicas"),
    "lifetime": (2.4, "ns", "excited-state lifetime from the dominant decay component"),
    "psat": (3.6, "mW", "saturation power"),
    "i_inf": (12.5e6, "counts/s", "detected rate at infinite power"),
    "setup_efficiency": (0.038, "fraction", "overall detection efficiency of the setup"),
    "visibility": (0.67, "fraction", "polarization visibility of the emission"),
    "quantum_yield_reference": (0.92, "fraction", "reported quantum yield from a fuller model"),
    "shift_slope": (0.007, "nm/K", "ZPL red shift rate near room temperature"),
    "raman_shift": (1331.96, "cm^-1", "mean diamond Raman line of the host particles"),
    "zpl_energy_mean": (2.25, "eV", "ensemble mean ZPL energy"),
    "zpl_energy_std": (0.016, "eV", "ensemble standard deviation of the ZPL energy"),
    "zpl_range_nm": ((544.0, 560.0), "nm", "ensemble ZPL wavelength span"),
    "max_zpl_fwhm_nm": (0.6, "nm", "upper bound of ensemble ZPL linewidths"),
}

#: Reference temperature of the linewidth and shift calibrations (K).
IL1_REFERENCE_T = 300.0
#: Temperature at which the shift slope is quoted (K).
IL1_SLOPE_T = 290.0


def il1_value(name):
    return IL1_TABLE[name][0]


def il1_params():
    v = il1_value
    return VibronicParams(v("e_zpl"), v("lvm_quantum"), v("anharmonicity"),
                          huang_rhys_from_dw(v("debye_waller")), v("zpl_fwhm"), v("gamma_vib"),
                          v("n_peaks"))


def il1_temperature_model(shift_slope=None, t_slope=IL1_SLOPE_T):
    """Width law calibrated to the room-temperature ZPL width and a T^4 + T^2 shift.

    The shift coefficients split the slope at ``t_slope`` evenly between
    the two terms: 4 a T^3 = 2 b T = slope / 2.
    """
    slope = il1_value("shift_slope") if shift_slope is None else shift_slope
    a = slope / 2 / (4 * t_slope ** 3)
    b = slope / 2 / (2 * t_slope)
    lam0 = HC_EV_NM / il1_value("e_zpl")
    return TemperatureModel.calibrated(il1_value("zpl_fwhm"), IL1_REFERENCE_T, a=a, b=b,
                                       lambda0=lam0)


def il1_emitter():
    """Two-level emitter whose detected saturation rate and lifetime match the preset.

    The detected saturated rate is eta * gamma_rad, so gamma_rad follows from
    I_inf and eta; the remainder of 1/lifetime is non-radiative.
    """
    tau = il1_value("lifetime")
    eta = il1_value("setup_efficiency")
    gamma_rad = il1_value("i_inf") / eta * 1e-9
    gamma_total = 1.0 / tau
    return EmitterModel(gamma_rad=gamma_rad, gamma_nr=gamma_total - gamma_rad,
                        psat=il1_value("psat"), detection_efficiency=eta)


def default_grid(params, temp_model=None, T=300.0, step=0.02, margin_nm=15.0):
    """Wavelength grid (nm) covering every ladder line with ``margin_nm`` on each side."""
    from .vibronic import line_list
    centres, widths, _ = line_list(params, temp_model, T, "wavelength")
    lo = centres.min() - margin_nm - 10 * widths.max()
    hi = centres.max() + margin_nm + 10 * widths.max()
    n = int(np.ceil((hi - lo) / step)) + 1
    return lo + step * np.arange(n)


PRESETS = {"il1": il1_params}
