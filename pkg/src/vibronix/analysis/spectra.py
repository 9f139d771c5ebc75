"""Reading, cleaning and peak-finding for measured spectra."""

import csv
import io
import os

import numpy as np
from scipy.ndimage import median_filter
from scipy.signal import find_peaks, savgol_filter

from ..errors import DomainError, SpectrumParseError
from ..spectrum import AXIS_UNITS, Spectrum, convert_axis

__all__ = ["load_spectrum", "write_spectrum", "convert_axis", "subtract_background", "detect_peaks"]


def _parse_rows(lines, path):
    axis, counts, line_numbers = [], [], []
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = next(csv.reader([line.replace(";", ",")]))
        fields = [f.strip() for f in fields if f.strip() != ""]
        if len(fields) == 1:
            fields = line.split()
        if len(fields) != 2:
            raise SpectrumParseError(f"expected 2 columns, found {len(fields)}", lineno, path)
        try:
            x, y = float(fields[0]), float(fields[1])
        except ValueError:
            if not axis and not header_seen:
                header_seen = True
                continue
            raise SpectrumParseError(f"cannot parse numbers from {line!r}", lineno, path) from None
        if not (np.isfinite(x) and np.isfinite(y)):
            raise SpectrumParseError("non-finite value", lineno, path)
        if y < 0:
            raise SpectrumParseError(f"negative counts {y}", lineno, path)
        axis.append(x)
        counts.append(y)
        line_numbers.append(lineno)
    if len(axis) < 2:
        raise SpectrumParseError("fewer than two data rows", None, path)
    return np.array(axis), np.array(counts), np.array(line_numbers)


def load_spectrum(path, axis_kind="wavelength", temperature=None):
    """Read a two-column (axis, counts) CSV.

    Lines starting with ``#`` are comments and a single non-numeric header
    row is allowed. Rows are sorted by axis; repeated axis values are an
    error reported with both line numbers.
    """
    if axis_kind not in AXIS_UNITS:
        raise DomainError(f"unknown axis kind {axis_kind!r}")
    if isinstance(path, (str, os.PathLike)):
        name = os.fspath(path)
        try:
            with open(name, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise SpectrumParseError(str(exc), None, name) from None
    else:
        name = getattr(path, "name", None)
        text = path.read()
    axis, counts, linenos = _parse_rows(io.StringIO(text), name)
    order = np.argsort(axis, kind="stable")
    axis, counts, linenos = axis[order], counts[order], linenos[order]
    dup = np.nonzero(np.diff(axis) == 0)[0]
    if dup.size:
        i = dup[0]
        raise SpectrumParseError(
            f"duplicated axis value {axis[i]} (also on line {linenos[i]})", int(linenos[i + 1]), name)
    if np.any(axis <= 0):
        raise SpectrumParseError("axis values must be positive", int(linenos[np.argmax(axis <= 0)]), name)
    meta = {"source": name} if name else {}
    return Spectrum(axis, counts, axis_kind, temperature, meta)


def write_spectrum(spectrum, path, fmt="%.10g"):
    header = f"{spectrum.axis_kind} ({spectrum.units}),counts"
    data = np.column_stack([spectrum.axis, spectrum.intensity])
    np.savetxt(path, data, delimiter=",", header=header, fmt=fmt)


def subtract_background(spectrum, method="linear_baseline", window=None, edge_fraction=0.05):
    """Remove a smooth background.

    ``linear_baseline`` fits a straight line to the outer ``edge_fraction``
    of samples on both ends (``window`` overrides it as a sample count per
    edge). ``rolling_median`` takes a running median over ``window`` samples
    (default: a tenth of the spectrum). Negative results are clamped to zero
    and the number of clamped samples is stored in ``metadata["clamped"]``.
    """
    y = spectrum.intensity
    x = spectrum.axis
    n = y.size
    if method == "linear_baseline":
        k = int(window) if window is not None else max(2, int(round(edge_fraction * n)))
        if 2 * k > n:
            raise DomainError(f"edge window of {k} samples does not fit in {n} samples")
        idx = np.r_[0:k, n - k:n]
        coeff = np.polyfit(x[idx] - x.mean(), y[idx], 1)
        baseline = np.polyval(coeff, x - x.mean())
    elif method == "rolling_median":
        k = int(window) if window is not None else max(3, n // 10)
        if k > n:
            raise DomainError(f"median window of {k} samples exceeds {n} samples")
        baseline = median_filter(y, size=k, mode="nearest")
    else:
        raise DomainError(f"unknown background method {method!r}")
    corrected = y - baseline
    clamped = int(np.count_nonzero(corrected < 0))
    meta = dict(spectrum.metadata)
    meta.update(background=method, clamped=clamped)
    return spectrum.replace(intensity=np.clip(corrected, 0.0, None), metadata=meta)


def detect_peaks(spectrum, min_prominence=0.02, min_separation=None, smooth=5, min_snr=None):
    """Candidate line centres, sorted by axis position.

    The intensity is smoothed with a quadratic Savitzky-Golay filter over
    ``smooth`` samples (``None`` or < 5 disables it); this does not move the
    maxima of symmetric lines. ``min_prominence`` is relative to the maximum
    when below 1, absolute counts otherwise. ``min_separation`` is in axis
    units. ``min_snr`` additionally requires the prominence to exceed
    ``min_snr`` Poisson standard deviations, sqrt(height), for count data.
    """
    s = spectrum.sorted()
    y = s.intensity
    if y.max() <= 0:
        return np.array([])
    if smooth and smooth >= 5 and y.size > smooth:
        win = smooth if smooth % 2 else smooth + 1
        y = savgol_filter(y, win, 2)
    prominence = min_prominence * y.max() if min_prominence < 1 else min_prominence
    distance = None
    if min_separation:
        step = float(np.median(np.diff(s.axis)))
        distance = max(1, int(min_separation / step))
    idx, props = find_peaks(y, prominence=prominence, distance=distance)
    if min_snr:
        idx = idx[props["prominences"] >= min_snr * np.sqrt(np.maximum(y[idx], 1.0))]
    return s.axis[idx]
