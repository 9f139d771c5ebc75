"""Photon statistics: Monte Carlo emitter streams and their estimators."""

from .correlate import G2Fit, G2Histogram, cross_correlate, fit_g2, g2_model, hbt_correlate
from .estimators import (BlinkingReport, LifetimeFit, PolarizationFit, SaturationFit,
                         decay_model, detect_blinking, fit_lifetime, fit_polarization,
                         fit_saturation, polarization_curve, quantum_yield, saturation_curve,
                         tail_lifetime)
from .io import read_timestamps, read_timestamps_text, write_timestamps
from .simulate import (DecayHistogram, EmitterModel, PhotonStream, Shelving, poisson_stream,
                       simulate_cw, simulate_pulsed, split_stream, telegraph_stream)

__all__ = [
    "G2Fit", "G2Histogram", "cross_correlate", "fit_g2", "g2_model", "hbt_correlate",
    "BlinkingReport", "LifetimeFit", "PolarizationFit", "SaturationFit", "decay_model",
    "detect_blinking", "fit_lifetime", "fit_polarization", "fit_saturation",
    "polarization_curve", "quantum_yield", "saturation_curve", "tail_lifetime",
    "read_timestamps", "read_timestamps_text", "write_timestamps",
    "DecayHistogram", "EmitterModel", "PhotonStream", "Shelving", "poisson_stream",
    "simulate_cw", "simulate_pulsed", "split_stream", "telegraph_stream",
]
