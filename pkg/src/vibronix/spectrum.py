"""Sampled spectra on a wavelength or energy axis."""

from dataclasses import dataclass, field

import numpy as np

from .constants import HC_EV_NM
from .errors import DomainError

AXIS_UNITS = {"wavelength": "nm", "energy": "eV"}


@dataclass(frozen=True)
class Spectrum:
    """Intensity samples on a strictly monotone axis.

    ``axis_kind`` is ``"wavelength"`` (nm) or ``"energy"`` (eV).
    """

    axis: np.ndarray
    intensity: np.ndarray
    axis_kind: str = "wavelength"
    temperature: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        axis = np.array(self.axis, dtype=float)
        intensity = np.array(self.intensity, dtype=float)
        if self.axis_kind not in AXIS_UNITS:
            raise DomainError(f"unknown axis kind {self.axis_kind!r}")
        if axis.ndim != 1 or axis.shape != intensity.shape:
            raise DomainError("axis and intensity must be 1-D arrays of equal length")
        if axis.size < 2:
            raise DomainError("a spectrum needs at least two samples")
        steps = np.diff(axis)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise DomainError("axis must be strictly monotone")
        if np.any(intensity < 0) or not np.all(np.isfinite(intensity)):
            raise DomainError("intensities must be finite and non-negative")
        if self.axis_kind == "energy" and np.any(axis <= 0):
            raise DomainError("energies must be positive")
        if self.axis_kind == "wavelength" and np.any(axis <= 0):
            raise DomainError("wavelengths must be positive")
        axis.setflags(write=False)
        intensity.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "intensity", intensity)

    @property
    def units(self):
        return AXIS_UNITS[self.axis_kind]

    def __len__(self):
        return self.axis.size

    def sorted(self):
        """Return a copy with ascending axis."""
        if self.axis[0] < self.axis[-1]:
            return self
        return self.replace(axis=self.axis[::-1], intensity=self.intensity[::-1])

    def replace(self, **changes):
        values = dict(axis=self.axis, intensity=self.intensity, axis_kind=self.axis_kind,
                      temperature=self.temperature, metadata=dict(self.metadata))
        values.update(changes)
        return Spectrum(**values)

    def total_counts(self):
        return float(self.intensity.sum())


def convert_axis(spectrum, target_kind, jacobian=False):
    """Convert between wavelength (nm) and energy (eV) axes.

    Uses E = 1239.8419 / lambda. With ``jacobian=True`` intensities are
    multiplied by lambda^2 (going to energy) or divided by it (going back), so
    that integrated counts are preserved; this is off by default because raw
    spectra are reported per pixel.
    """
    if target_kind not in AXIS_UNITS:
        raise DomainError(f"unknown axis kind {target_kind!r}")
    if target_kind == spectrum.axis_kind:
        return spectrum
    axis = HC_EV_NM / spectrum.axis
    intensity = spectrum.intensity
    if jacobian:
        if target_kind == "energy":
            intensity = intensity * spectrum.axis ** 2 / HC_EV_NM
        else:
            intensity = intensity * HC_EV_NM / axis ** 2
    meta = dict(spectrum.metadata)
    meta["jacobian"] = bool(jacobian)
    out = Spectrum(axis[::-1], intensity[::-1], target_kind, spectrum.temperature, meta)
    return out
