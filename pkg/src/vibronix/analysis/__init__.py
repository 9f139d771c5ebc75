"""Inverse pipeline: spectra and measurement series to emitter parameters."""

from .ladder import (EmitterRecord, FingerprintResult, classify_fingerprint, extract_ladder,
                     ladder_to_params)
from .pipeline import SpectrumAnalysis, analyze_spectrum
from .peakfit import MultiLorentzianFit, PeakFit, fit_multilorentzian
from .spectra import convert_axis, detect_peaks, load_spectrum, subtract_background, write_spectrum
from .statistics import (RamanStrain, RegressionResult, ensemble_stats, raman_strain,
                         regress_with_ci, strain_range, thermometry_sensitivity)
from .temperature import ShiftLawFit, WidthLawFit, fit_lineshift_series, fit_temperature_series

__all__ = [
    "EmitterRecord", "FingerprintResult", "classify_fingerprint", "extract_ladder", "ladder_to_params",
    "SpectrumAnalysis", "analyze_spectrum",
    "MultiLorentzianFit", "PeakFit", "fit_multilorentzian",
    "convert_axis", "detect_peaks", "load_spectrum", "subtract_background", "write_spectrum",
    "RamanStrain", "RegressionResult", "ensemble_stats", "raman_strain", "regress_with_ci",
    "strain_range", "thermometry_sensitivity",
    "ShiftLawFit", "WidthLawFit", "fit_lineshift_series", "fit_temperature_series",
]
