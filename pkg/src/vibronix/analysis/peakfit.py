"""Multi-Lorentzian fitting of spectra."""

from dataclasses import dataclass, field

import numpy as np

from ..constants import HC_EV_NM, width_nm_to_mev
from ..errors import DegenerateFitError, DomainError
from .lm import levenberg_marquardt
from .spectra import detect_peaks


@dataclass
class PeakFit:
    center_nm: float
    center_ev: float
    fwhm_nm: float
    fwhm_mev: float
    area: float           # counts
    amplitude: float      # counts per sample at the centre
    center_err_nm: float
    center_err_ev: float
    fwhm_err_nm: float
    fwhm_err_mev: float
    area_err: float
    covariance: np.ndarray  # (center, fwhm, area) in fit-axis units
    residual_norm: float

    def as_dict(self):
        d = {k: float(v) for k, v in self.__dict__.items() if k != "covariance"}
        d["covariance"] = np.asarray(self.covariance).tolist()
        return d


@dataclass
class MultiLorentzianFit:
    peaks: list
    offset: float
    offset_err: float
    params: np.ndarray
    covariance: np.ndarray
    axis_kind: str
    residual_norm: float
    iterations: int
    cost_history: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.peaks)

    def __len__(self):
        return len(self.peaks)

    def __getitem__(self, i):
        return self.peaks[i]

    def model(self, x, spacing=None):
        x = np.asarray(x, dtype=float)
        h = np.abs(np.gradient(x)) if spacing is None else spacing
        return _model(self.params, x, h)


def _model(p, x, h):
    y = np.full_like(x, p[-1])
    for c, w, a in p[:-1].reshape(-1, 3):
        hw = 0.5 * w
        y += h * a * hw / np.pi / ((x - c) ** 2 + hw ** 2)
    return y


def _jacobian(p, x, h):
    k = (p.size - 1) // 3
    J = np.empty((x.size, p.size))
    for i, (c, w, a) in enumerate(p[:-1].reshape(-1, 3)):
        hw = 0.5 * w
        d = x - c
        den = d ** 2 + hw ** 2
        J[:, 3 * i] = h * a * hw / np.pi * 2 * d / den ** 2
        J[:, 3 * i + 1] = h * 0.5 * a / np.pi * (d ** 2 - hw ** 2) / den ** 2
        J[:, 3 * i + 2] = h * hw / np.pi / den
    J[:, 3 * k] = 1.0
    return J


def _half_max_width(x, y, i):
    half = y[i] / 2.0
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    return max(x[hi] - x[lo], 2 * abs(x[1] - x[0]))


def initial_guesses(spectrum, centers):
    s = spectrum.sorted()
    x, y = s.axis, s.intensity - s.intensity.min()
    h = np.abs(np.gradient(x))
    guesses = []
    for c in centers:
        i = int(np.argmin(np.abs(x - c)))
        w = _half_max_width(x, y, i)
        area = y[i] * np.pi * w / 2.0 / h[i]
        guesses.append((x[i], w, max(area, 1e-12)))
    return guesses


def _check_inside(centres, x):
    for c in centres:
        if not x[0] <= c <= x[-1]:
            raise DomainError(f"initial centre {c} outside axis range")


def fit_multilorentzian(spectrum, n_peaks=None, initial=None, fit_offset=True,
                        weights=None, max_iter=500, ftol=1e-10, xtol=1e-12,
                        min_width_steps=2.0, max_correlation=0.999):
    """Fit a sum of area-parameterised Lorentzians plus a constant offset.

    ``initial`` is a list of centres or of (centre, fwhm, area) triples in
    axis units; without it the ``n_peaks`` most intense detected maxima are
    used. ``weights`` may be ``"poisson"`` (1/sqrt(counts)) or an array of
    per-sample sigmas. Raises :class:`DegenerateFitError` if a width
    collapses below ``min_width_steps`` samples or two lines become
    statistically indistinguishable.
    """
    s = spectrum.sorted()
    x, y = s.axis, s.intensity
    h = np.abs(np.gradient(x))
    step = float(np.median(h))
    if initial is None:
        found = detect_peaks(s)
        if n_peaks is None:
            n_peaks = found.size
        if n_peaks < 1 or found.size < n_peaks:
            raise DomainError(f"requested {n_peaks} peaks, detected {found.size}")
        heights = np.interp(found, x, y)
        found = np.sort(found[np.argsort(heights)[::-1][:n_peaks]])
        guesses = initial_guesses(s, found)
    else:
        initial = list(initial)
        if n_peaks is not None and len(initial) != n_peaks:
            raise DomainError("number of initial guesses differs from n_peaks")
        if all(np.ndim(g) == 0 for g in initial):
            _check_inside(initial, x)
            guesses = initial_guesses(s, initial)
        else:
            guesses = [tuple(map(float, g)) for g in initial]
    if not guesses:
        raise DomainError("at least one peak is required")
    _check_inside([g[0] for g in guesses], x)

    p0 = np.array([v for g in guesses for v in g] + [float(np.percentile(y, 5)) if fit_offset else 0.0])
    if weights is None:
        inv_sigma = np.ones_like(y)
    elif isinstance(weights, str) and weights == "poisson":
        inv_sigma = 1.0 / np.sqrt(np.maximum(y, 1.0))
    else:
        inv_sigma = 1.0 / np.asarray(weights, dtype=float)

    free = np.ones(p0.size, dtype=bool)
    if not fit_offset:
        free[-1] = False

    def expand(q):
        p = p0.copy()
        p[free] = q
        return p

    def residual(q):
        return (_model(expand(q), x, h) - y) * inv_sigma

    def jac(q):
        return (_jacobian(expand(q), x, h) * inv_sigma[:, None])[:, free]

    res = levenberg_marquardt(residual, jac, p0[free], max_iter=max_iter, ftol=ftol, xtol=xtol)
    p = expand(res.params)
    cov = np.zeros((p.size, p.size))
    cov[np.ix_(free, free)] = res.covariance
    if weights is not None:
        # sigmas are absolute: drop the reduced chi-square scaling
        m, n = res.jacobian.shape
        chi2_red = 2 * res.cost / max(m - n, 1)
        if chi2_red > 0:
            cov = cov / chi2_red

    triples = p[:-1].reshape(-1, 3)
    if np.any(triples[:, 1] < min_width_steps * step):
        raise DegenerateFitError(
            f"a fitted width collapsed below {min_width_steps} grid steps: {triples[:, 1]}")
    if np.any(triples[:, 2] <= 0):
        raise DegenerateFitError(f"non-positive fitted area: {triples[:, 2]}")
    errs = np.sqrt(np.clip(np.diag(cov), 0, None))
    if not np.all(np.isfinite(errs)):
        raise DegenerateFitError("parameter covariance is singular")
    order = np.argsort(triples[:, 0])
    centers = triples[order, 0]
    widths = triples[order, 1]
    if np.any(np.diff(centers) < 0.5 * np.minimum(widths[1:], widths[:-1])):
        raise DegenerateFitError("two fitted lines are closer than half a linewidth")
    if len(triples) > 1:
        sd = np.where(errs > 0, errs, 1.0)
        corr = cov / np.outer(sd, sd)
        ai = np.arange(len(triples)) * 3 + 2
        sub = np.abs(corr[np.ix_(ai, ai)] - np.eye(ai.size))
        if sub.max() > max_correlation:
            raise DegenerateFitError("line areas are fully correlated; peaks are not resolved")

    resid_norm = float(np.linalg.norm(_model(p, x, h) - y))
    peaks = []
    for i in order:
        c, w, a = triples[i]
        block = cov[3 * i:3 * i + 3, 3 * i:3 * i + 3]
        ce, we, ae = errs[3 * i:3 * i + 3]
        hi = float(np.interp(c, x, h))
        amp = hi * 2 * a / (np.pi * w)
        if s.axis_kind == "wavelength":
            c_nm, w_nm, ce_nm, we_nm = c, w, ce, we
            c_ev = HC_EV_NM / c
            ce_ev = HC_EV_NM * ce / c ** 2
            w_mev = float(width_nm_to_mev(w, c))
            we_mev = float(width_nm_to_mev(we, c))
        else:
            c_ev, ce_ev = c, ce
            c_nm = HC_EV_NM / c
            ce_nm = HC_EV_NM * ce / c ** 2
            w_mev, we_mev = 1e3 * w, 1e3 * we
            w_nm = 1e-3 * w_mev * c_nm ** 2 / HC_EV_NM
            we_nm = 1e-3 * we_mev * c_nm ** 2 / HC_EV_NM
        peaks.append(PeakFit(float(c_nm), float(c_ev), float(w_nm), float(w_mev), float(a), float(amp),
                             float(ce_nm), float(ce_ev), float(we_nm), float(we_mev), float(ae),
                             block.copy(), resid_norm))
    perm = np.r_[np.concatenate([[3 * i, 3 * i + 1, 3 * i + 2] for i in order]), p.size - 1]
    return MultiLorentzianFit(peaks, float(p[-1]), float(errs[-1]), p[perm], cov[np.ix_(perm, perm)],
                              s.axis_kind, resid_norm, res.iterations, res.cost_history)
