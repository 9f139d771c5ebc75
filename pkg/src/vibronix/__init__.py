"""Vibronic spectra, photon statistics and defect phonon modes of narrowband
single-photon emitters.

Subpackages: :mod:`vibronix.vibronic` (forward spectral model),
:mod:`vibronix.analysis` (fits and statistics), :mod:`vibronix.photon`
(Monte Carlo photon streams and estimators), :mod:`vibronix.lattice`
(toy lattice dynamics) and :mod:`vibronix.cli`.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("vibronix")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
