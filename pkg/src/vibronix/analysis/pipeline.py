"""One-call analysis of a single emitter spectrum."""

from dataclasses import dataclass

import numpy as np

from ..errors import NotALadderError
from .ladder import EmitterRecord, FingerprintResult, classify_fingerprint, extract_ladder
from .peakfit import MultiLorentzianFit, fit_multilorentzian
from .spectra import detect_peaks, subtract_background


@dataclass
class SpectrumAnalysis:
    record: EmitterRecord
    fit: MultiLorentzianFit
    fingerprint: FingerprintResult
    candidates: np.ndarray

    def to_dict(self):
        return {
            "record": self.record.to_dict(),
            "fingerprint": {"is_il1": self.fingerprint.is_il1, "reasons": self.fingerprint.reasons},
            "peaks": [p.as_dict() for p in self.fit.peaks],
            "fit": {"offset": self.fit.offset, "offset_err": self.fit.offset_err,
                    "residual_norm": self.fit.residual_norm, "iterations": self.fit.iterations},
            "candidates": [float(c) for c in self.candidates],
        }


def analyze_spectrum(spectrum, n_peaks=4, background=None, min_prominence=0.02,
                     min_separation=None, min_snr=5.0, source=None, g2_0=None, raman_shift=None):
    """Detect, fit and reduce a ladder spectrum.

    The ``n_peaks`` most intense candidates seed a joint Lorentzian fit. With
    fewer than three significant candidates (prominence above ``min_snr``
    Poisson deviations) :class:`NotALadderError` is raised, as it is
    by :func:`extract_ladder` for irregular spacings. ``background`` names a
    :func:`subtract_background` method applied first.
    """
    if background:
        spectrum = subtract_background(spectrum, background)
    s = spectrum.sorted()
    if min_separation is None:
        min_separation = 5.0 if s.axis_kind == "wavelength" else 0.02
    cand = detect_peaks(s, min_prominence=min_prominence, min_separation=min_separation,
                        min_snr=min_snr)
    if cand.size < 3:
        raise NotALadderError(f"found {cand.size} line candidates, a ladder needs at least 3")
    heights = np.interp(cand, s.axis, s.intensity)
    keep = np.sort(cand[np.argsort(-heights, kind="stable")[:n_peaks]])
    fit = fit_multilorentzian(s, initial=keep)
    record = extract_ladder(fit, source=source)
    record.g2_0 = g2_0
    record.raman_shift = raman_shift
    return SpectrumAnalysis(record, fit, classify_fingerprint(record, n_peaks=n_peaks), cand)
