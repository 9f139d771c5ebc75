"""Temperature series: linewidth and line-shift laws."""

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, IllConditionedError


@dataclass
class WidthLawFit:
    alpha: float          # meV / K^3
    gamma_vib: float      # meV
    alpha_err: float
    gamma_vib_err: float
    offset: float = 0.0
    offset_err: float = 0.0
    per_peak: dict | None = None   # peak index -> (alpha, offset) when fitted independently

    def fwhm(self, T, n=0):
        return self.alpha * np.asarray(T, float) ** 3 + self.offset + n * self.gamma_vib


@dataclass
class ShiftLawFit:
    a: float              # nm / K^4
    b: float              # nm / K^2
    lambda0: float        # nm
    a_err: float
    b_err: float
    lambda0_err: float
    covariance: np.ndarray

    def shift(self, T):
        T = np.asarray(T, float)
        return self.a * T ** 4 + self.b * T ** 2

    def wavelength(self, T):
        return self.lambda0 + self.shift(T)

    def slope_at(self, T):
        T = np.asarray(T, float)
        return 4 * self.a * T ** 3 + 2 * self.b * T

    def slope_err_at(self, T):
        g = np.array([0.0, 4 * T ** 3, 2 * T])
        return float(np.sqrt(g @ self.covariance @ g))


def _lstsq_with_cov(X, y):
    # column scaling keeps T^3 / T^4 designs well conditioned
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    beta_s, *_ = np.linalg.lstsq(Xs, y, rcond=None)
    resid = y - Xs @ beta_s
    dof = max(len(y) - X.shape[1], 1)
    s2 = float(resid @ resid) / dof
    cov_s = np.linalg.pinv(Xs.T @ Xs) * s2
    beta = beta_s / scale
    cov = cov_s / np.outer(scale, scale)
    return beta, cov


def fit_temperature_series(T, fwhm, peak_index, t_range=None, fit_offset=False, shared=True):
    """Fit FWHM_n(T) = alpha*T^3 + n*gamma_vib with alpha shared across lines.

    ``T`` (K), ``fwhm`` (meV) and ``peak_index`` are parallel sequences.
    ``t_range=(lo, hi)`` restricts the points used. ``fit_offset`` adds a
    temperature independent width common to all lines. With
    ``shared=False`` each line gets its own alpha and offset and gamma_vib
    is the slope of those offsets against the line index.
    """
    T = np.asarray(T, dtype=float)
    w = np.asarray(fwhm, dtype=float)
    n = np.asarray(peak_index, dtype=float)
    if not (T.shape == w.shape == n.shape):
        raise DomainError("T, fwhm and peak_index must have equal length")
    if t_range is not None:
        keep = (T >= t_range[0]) & (T <= t_range[1])
        T, w, n = T[keep], w[keep], n[keep]
    if np.unique(T).size < 3:
        raise DomainError("need at least three temperatures")
    if np.unique(n).size < 2:
        raise DomainError("gamma_vib is unidentifiable from a single line index")

    if not shared:
        per_peak, alphas, alpha_vars = {}, [], []
        for k in np.unique(n):
            m = n == k
            if np.unique(T[m]).size < 3:
                raise DomainError(f"line {int(k)} has fewer free points than parameters")
            beta, cov = _lstsq_with_cov(np.column_stack([T[m] ** 3, np.ones(m.sum())]), w[m])
            per_peak[int(k)] = (float(beta[0]), float(beta[1]))
            alphas.append(beta[0])
            alpha_vars.append(cov[0, 0])
        idx = np.array(sorted(per_peak), dtype=float)
        offsets = np.array([per_peak[int(k)][1] for k in idx])
        beta, cov = _lstsq_with_cov(np.column_stack([np.ones_like(idx), idx]), offsets)
        gv_err = float(np.sqrt(cov[1, 1])) if idx.size > 2 else float("nan")
        return WidthLawFit(float(np.mean(alphas)), float(beta[1]),
                           float(np.sqrt(np.mean(alpha_vars) / len(alphas))), gv_err,
                           offset=float(beta[0]), per_peak=per_peak)

    cols = [T ** 3, n]
    if fit_offset:
        cols.append(np.ones_like(T))
    X = np.column_stack(cols)
    if len(w) <= X.shape[1]:
        raise DomainError("fewer free points than parameters")
    beta, cov = _lstsq_with_cov(X, w)
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    out = WidthLawFit(float(beta[0]), float(beta[1]), float(err[0]), float(err[1]))
    if fit_offset:
        out.offset, out.offset_err = float(beta[2]), float(err[2])
    return out


def fit_lineshift_series(T, wavelength, min_span=50.0):
    """Fit lambda(T) = lambda0 + a*T^4 + b*T^2 by linear least squares.

    Raises :class:`IllConditionedError` when the temperatures span less than
    ``min_span`` kelvin, where T^2 and T^4 cannot be separated.
    """
    T = np.asarray(T, dtype=float)
    lam = np.asarray(wavelength, dtype=float)
    if T.shape != lam.shape:
        raise DomainError("T and wavelength must have equal length")
    if np.unique(T).size < 4:
        raise DomainError("need at least four temperatures")
    if np.any(T < 0):
        raise DomainError("temperatures must be non-negative")
    if T.max() - T.min() < min_span:
        raise IllConditionedError(
            f"temperature span {T.max() - T.min():.1f} K is below {min_span:g} K")
    X = np.column_stack([np.ones_like(T), T ** 4, T ** 2])
    beta, cov = _lstsq_with_cov(X, lam)
    err = np.sqrt(np.clip(np.diag(cov), 0, None))
    return ShiftLawFit(float(beta[1]), float(beta[2]), float(beta[0]),
                       float(err[1]), float(err[2]), float(err[0]), cov)
