"""Saturation, lifetime, polarization, quantum yield and blinking estimators."""

import logging
import math
from dataclasses import dataclass, field

import diptest
import numpy as np
from scipy import stats
from scipy.optimize import curve_fit, least_squares
from scipy.special import erfc, erfcx

from ..errors import ConvergenceError, DomainError, IllConditionedError, InconsistencyError

log = logging.getLogger(__name__)


# -- saturation ---------------------------------------------------------------

@dataclass
class SaturationFit:
    i_inf: float
    psat: float
    bg_slope: float
    i_inf_err: float
    psat_err: float
    bg_slope_err: float

    def rate(self, power, background=True):
        p = np.asarray(power, dtype=float)
        out = self.i_inf * p / (self.psat + p)
        return out + self.bg_slope * p if background else out


def saturation_curve(power, i_inf, psat, bg_slope=0.0):
    p = np.asarray(power, dtype=float)
    return i_inf * p / (psat + p) + bg_slope * p


def fit_saturation(power, rate, background_model="linear", sigma=None):
    """Fit I(P) = I_inf P / (Psat + P) (+ bg * P).

    ``power`` in mW, ``rate`` in counts/s. Uncertainties are 1 sigma from the
    covariance. Raises :class:`IllConditionedError` when no point lies above
    the fitted saturation power or the parameters are unconstrained.
    """
    p = np.asarray(power, dtype=float)
    y = np.asarray(rate, dtype=float)
    if p.size < 4 or p.shape != y.shape:
        raise DomainError("need at least four (power, rate) points")
    if background_model not in ("linear", "none"):
        raise DomainError(f"unknown background model {background_model!r}")
    with_bg = background_model == "linear"
    order = np.argsort(p)
    p, y = p[order], y[order]
    psat0 = float(np.median(p))
    i0 = float(y.max()) * 2
    if with_bg:
        f = saturation_curve
        p0 = [i0, psat0, 0.0]
        bounds = ([0, 0, -np.inf], [np.inf, np.inf, np.inf])
    else:
        def f(x, i_inf, psat):
            return saturation_curve(x, i_inf, psat)
        p0 = [i0, psat0]
        bounds = ([0, 0], [np.inf, np.inf])
    try:
        popt, pcov = curve_fit(f, p, y, p0=p0, sigma=sigma, absolute_sigma=sigma is not None,
                               bounds=bounds, max_nfev=10000, x_scale="jac")
    except RuntimeError as exc:
        raise IllConditionedError(f"saturation fit failed: {exc}") from None
    errs = np.sqrt(np.clip(np.diag(pcov), 0, None))
    if not np.all(np.isfinite(errs)) or popt[1] <= 0:
        raise IllConditionedError("saturation parameters are not constrained by the data")
    if p.max() < popt[1]:
        raise IllConditionedError(
            f"all powers lie below the fitted Psat {popt[1]:.3g} mW; data are in the linear regime")
    if errs[1] > popt[1]:
        raise IllConditionedError("Psat uncertainty exceeds its value")
    bg, bg_err = (popt[2], errs[2]) if with_bg else (0.0, 0.0)
    return SaturationFit(float(popt[0]), float(popt[1]), float(bg), float(errs[0]),
                         float(errs[1]), float(bg_err))


# -- lifetime -----------------------------------------------------------------

def _exp_conv_gauss(t, tau, sigma, t0):
    """Unit-area exponential decay starting at t0 convolved with a Gaussian IRF."""
    d = t - t0
    if sigma <= 0:
        return np.where(d >= 0, np.exp(-np.clip(d, 0, None) / tau) / tau, 0.0)
    u = (sigma / tau - d / sigma) / math.sqrt(2.0)
    out = np.empty_like(u)
    # erfcx form ahead of the rise, plain erfc form on the tail
    pos = u >= 0
    out[pos] = np.exp(-0.5 * (d[pos] / sigma) ** 2) * erfcx(u[pos])
    out[~pos] = np.exp(0.5 * (sigma / tau) ** 2 - d[~pos] / tau) * erfc(u[~pos])
    return 0.5 / tau * out


def _exp_conv_curve(t, tau, irf, period):
    """Exponential (unit area, periodic) convolved with a sampled IRF."""
    dt = t[1] - t[0]
    n = t.size
    k = np.arange(n) * dt
    decay = np.exp(-k / tau) / tau
    if period:
        decay = decay / (1.0 - math.exp(-period / tau))
    spec = np.fft.rfft(decay) * np.fft.rfft(irf / (irf.sum()))
    return np.fft.irfft(spec, n)


def decay_model(t, amplitudes, taus, sigma, t0, background=0.0, period=None, wraps=3):
    """Multi-exponential decay through a Gaussian IRF, counts per bin density.

    Earlier pulses contribute through ``wraps`` periods of pile-up when
    ``period`` is given.
    """
    t = np.asarray(t, dtype=float)
    y = np.full_like(t, background)
    for a, tau in zip(amplitudes, taus):
        shape = _exp_conv_gauss(t, tau, sigma, t0)
        if period:
            for k in range(1, wraps + 1):
                shape = shape + _exp_conv_gauss(t + k * period, tau, sigma, t0)
        y += a * shape
    return y


@dataclass
class LifetimeFit:
    taus: list
    amplitudes: list          # integrated counts per component
    tau_errs: list
    amplitude_errs: list
    background: float
    t0: float
    tau_dominant: float
    tau_dominant_err: float
    reduced_chi2: float
    n_iter: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def tau1(self):
        return self.taus[0]

    @property
    def tau2(self):
        return self.taus[1] if len(self.taus) > 1 else None

    def to_dict(self):
        return {"taus": self.taus, "amplitudes": self.amplitudes, "tau_errs": self.tau_errs,
                "amplitude_errs": self.amplitude_errs, "background": self.background,
                "t0": self.t0, "tau_dominant": self.tau_dominant,
                "tau_dominant_err": self.tau_dominant_err, "reduced_chi2": self.reduced_chi2}


def fit_lifetime(histogram, irf=None, n_components=2, tau_guess=None, fit_t0=None,
                 fit_background=True, weights="poisson", significance=0.01, max_nfev=5000):
    """Fit a decay histogram with exponentials convolved with the IRF.

    ``histogram`` is a :class:`DecayHistogram` or a (time, counts) pair in
    ns. ``irf`` is a Gaussian sigma in ns, or a sampled IRF curve on the same
    time axis (convolved numerically and periodically). By default the
    histogram's own IRF sigma and centre are used and the centre is refined
    when the IRF has finite width.

    With ``weights="poisson"`` the fit is iteratively reweighted by the model
    variance, which converges to the Poisson maximum-likelihood estimate.
    For two components the second one is kept only when an F test against
    the single exponential is significant at ``significance``; otherwise its
    amplitude is reported as 0 and ``tau2`` as None. The dominant component
    carries the largest integrated counts.
    """
    if isinstance(histogram, tuple):
        t, y = (np.asarray(v, dtype=float) for v in histogram)
        period, sigma_h, t0 = None, None, None
        binwidth = t[1] - t[0]
    else:
        t, y = histogram.time, histogram.counts
        period, sigma_h, t0 = histogram.period, histogram.irf_sigma, histogram.t0
        binwidth = histogram.binwidth
    sampled_irf = None
    if irf is None:
        sigma = sigma_h if sigma_h is not None else 0.0
    elif np.ndim(irf) == 0:
        sigma = float(irf)
    else:
        sampled_irf = np.asarray(irf, dtype=float)
        if sampled_irf.shape != y.shape:
            raise DomainError("sampled IRF must share the histogram time axis")
        sigma = 0.0
    if t0 is None:
        t0 = float(t[np.argmax(sampled_irf)]) if sampled_irf is not None else float(t[np.argmax(y)])
    if fit_t0 is None:
        fit_t0 = sampled_irf is None and sigma > 0
    if n_components not in (1, 2):
        raise DomainError("n_components must be 1 or 2")

    total = float(y.sum())
    if tau_guess is None:
        tail = (t > t0 + 3 * max(sigma, binwidth)) & (y > 0)
        if tail.sum() > 3:
            slope = np.polyfit(t[tail], np.log(y[tail]), 1, w=np.sqrt(y[tail]))[0]
            tau_guess = -1.0 / slope if slope < 0 else (t[-1] - t[0]) / 5
        else:
            tau_guess = (t[-1] - t[0]) / 5
    bg0 = max(float(np.percentile(y, 5)), 0.0)
    if weights == "poisson":
        sigma0 = np.sqrt(np.maximum(y, 1.0))
    elif weights is None:
        sigma0 = np.ones_like(y)
    else:
        sigma0 = np.asarray(weights, dtype=float)

    def run(n):
        x0 = [total] if n == 1 else [0.8 * total, 0.2 * total]
        x0 += [tau_guess] if n == 1 else [tau_guess, tau_guess / 4]
        lo = [0.0] * n + [1e-4] * n
        hi = [np.inf] * n + [10 * (t[-1] - t[0])] * n
        if fit_background:
            x0.append(bg0)
            lo.append(0.0)
            hi.append(np.inf)
        if fit_t0:
            x0.append(t0)
            lo.append(t0 - 1.0)
            hi.append(t0 + 1.0)
        x0 = np.clip(np.array(x0, dtype=float), np.array(lo) + 1e-12, np.array(hi) - 1e-12)

        def unpack(x):
            i = 2 * n
            bg = x[i] if fit_background else 0.0
            i += int(fit_background)
            return x[:n], x[n:2 * n], bg, (x[i] if fit_t0 else t0)

        def model(x):
            amps, taus, bg, tz = unpack(x)
            if sampled_irf is not None:
                out = np.full_like(t, bg)
                for a, tau in zip(amps, taus):
                    out += a * binwidth * _exp_conv_curve(t, tau, sampled_irf, period)
                return out
            return bg + binwidth * decay_model(t, amps, taus, sigma, tz, 0.0, period)

        inv_sigma = 1.0 / sigma0

        def solve(x_start):
            r = least_squares(lambda x: (model(x) - y) * inv_sigma, x_start, bounds=(lo, hi),
                              x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
            if r.status == 0:
                raise ConvergenceError(f"lifetime fit stopped after {r.nfev} evaluations, "
                                       f"cost {r.cost:.4g}", best=r.x, cost=r.cost)
            return r

        res = solve(x0)
        nfev = res.nfev
        if weights == "poisson":
            # model-variance weights; data weights bias the low-count tail
            for _ in range(8):
                inv_sigma = 1.0 / np.sqrt(np.maximum(model(res.x), 1e-6))
                prev = res.x
                res = solve(res.x)
                nfev += res.nfev
                if np.allclose(res.x, prev, rtol=1e-9, atol=0):
                    break
        return res, unpack(res.x), nfev

    res, (amps, taus, bg, tz), nfev = run(n_components)
    n_kept = n_components
    if n_components == 2:
        res1, packed1, nfev1 = run(1)
        nfev += nfev1
        dof = max(y.size - res.x.size, 1)
        gain = res1.cost - res.cost
        f_stat = gain / 2.0 / max(res.cost / dof, 1e-300)
        if gain <= 1e-9 * max(res1.cost, 1e-300) or f_stat <= stats.f.ppf(1 - significance, 2, dof):
            res, (amps, taus, bg, tz), n_kept = res1, packed1, 1

    dof = max(y.size - res.x.size, 1)
    chi2_red = 2 * res.cost / dof
    cov = np.linalg.pinv(res.jac.T @ res.jac)
    if weights is None:
        cov = cov * chi2_red
    errs = np.sqrt(np.clip(np.diag(cov), 0, None))
    counts = np.asarray(amps)
    order = np.argsort(-counts)
    taus_out = [float(taus[i]) for i in order]
    tau_errs = [float(errs[n_kept + i]) for i in order]
    amp_list = [float(counts[i]) for i in order]
    amp_errs = [float(errs[i]) for i in order]
    if n_kept < n_components:
        taus_out.append(None)
        tau_errs.append(None)
        amp_list.append(0.0)
        amp_errs.append(0.0)
    return LifetimeFit(taus_out, amp_list, tau_errs, amp_errs, float(bg), float(tz), taus_out[0],
                       tau_errs[0], float(chi2_red), int(nfev),
                       {"status": int(res.status), "message": res.message, "cost": float(res.cost),
                        "components_kept": n_kept})


def tail_lifetime(histogram, start=None, stop=None):
    """Lifetime from a log-linear regression of the histogram tail (ns)."""
    t, y = histogram.time, histogram.counts
    if start is None:
        start = histogram.t0 + 5 * max(histogram.irf_sigma, histogram.binwidth)
    if stop is None:
        stop = t[-1]
    m = (t >= start) & (t <= stop) & (y > 0)
    slope = np.polyfit(t[m], np.log(y[m]), 1, w=np.sqrt(y[m]))[0]
    return -1.0 / slope


# -- quantum yield ------------------------------------------------------------

def quantum_yield(i_inf_detected, setup_efficiency, total_lifetime, reference=None,
                  tolerance=0.02):
    """Two-level quantum yield QY = (I_inf / eta) * tau.

    In saturation the emitted rate equals the radiative rate, so QY =
    gamma_rad * tau_total. ``i_inf_detected`` in counts/s, ``total_lifetime``
    in ns. Values between 1 and 1.05 are clamped to 1 with a warning; larger
    values mean the inputs are inconsistent. When a ``reference`` yield is
    given (for instance one obtained with a more complete model), a
    disagreement beyond ``tolerance`` is logged as a warning.
    """
    if not (i_inf_detected > 0 and total_lifetime > 0):
        raise DomainError("rate and lifetime must be positive")
    if not 0 < setup_efficiency <= 1:
        raise DomainError("setup efficiency must lie in (0, 1]")
    qy = i_inf_detected / setup_efficiency * total_lifetime * 1e-9
    if qy > 1.05:
        raise InconsistencyError(f"quantum yield {qy:.3f} exceeds 1: rate, efficiency and "
                                 "lifetime are inconsistent")
    if qy > 1.0:
        log.warning("quantum yield %.4f above 1 clamped to 1", qy)
        qy = 1.0
    if reference is not None and abs(qy - reference) > tolerance:
        log.warning("two-level quantum yield %.3f differs from reference %.3f; the two-level "
                    "formula omits corrections contained in the reference model", qy, reference)
    return qy


# -- polarization -------------------------------------------------------------

@dataclass
class PolarizationFit:
    visibility: float
    theta0: float            # degrees, angle of maximum intensity
    i_min: float
    i_max: float
    visibility_err: float
    theta0_err: float
    theta0_undetermined: bool


def polarization_curve(theta_deg, i_off, amplitude, theta0_deg):
    return i_off + amplitude * np.sin(np.radians(np.asarray(theta_deg, float) - theta0_deg + 90.0)) ** 2


def fit_polarization(theta, intensity):
    """Fit I(theta) = I_off + A sin^2(theta - theta0) and the visibility.

    The model is linear in (c0, cos 2theta, sin 2theta), so it is solved by
    linear least squares. ``theta0`` is returned as the angle of maximum
    intensity in [0, 180). Flat data give V = 0 and flag theta0 as
    undetermined.
    """
    th = np.radians(np.asarray(theta, dtype=float))
    y = np.asarray(intensity, dtype=float)
    if th.size < 8:
        raise DomainError("need at least 8 angles")
    if np.ptp(np.degrees(th)) < 180 - 360 / th.size - 1e-9:
        raise DomainError("angles must cover at least 180 degrees")
    X = np.column_stack([np.ones_like(th), np.cos(2 * th), np.sin(2 * th)])
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = max(y.size - 3, 1)
    s2 = float(resid @ resid) / dof
    cov = np.linalg.inv(X.T @ X) * s2
    c0, c1, c2 = beta
    half_amp = math.hypot(c1, c2)
    i_max, i_min = c0 + half_amp, c0 - half_amp
    visibility = half_amp / c0 if c0 > 0 else 0.0
    theta0 = (0.5 * math.degrees(math.atan2(c2, c1))) % 180.0
    if theta0 > 180.0 - 1e-9:
        theta0 = 0.0
    # propagate to (V, theta0)
    if half_amp > 0:
        g_v = np.array([-half_amp / c0 ** 2, c1 / (half_amp * c0), c2 / (half_amp * c0)])
        g_t = np.degrees(0.5 * np.array([0.0, -c2, c1]) / half_amp ** 2)
        v_err = float(np.sqrt(max(g_v @ cov @ g_v, 0.0)))
        t_err = float(np.sqrt(max(g_t @ cov @ g_t, 0.0)))
    else:
        v_err, t_err = float(np.sqrt(cov[1, 1] + cov[2, 2]) / max(c0, 1e-300)), 90.0
    amp_err = math.sqrt(max((cov[1, 1] + cov[2, 2]) / 2, 0.0))
    undetermined = half_amp <= 3 * amp_err or t_err > 45.0
    if half_amp <= amp_err * 1e-6 or np.ptp(y) == 0:
        visibility, theta0, undetermined, t_err = 0.0, 0.0, True, 90.0
    return PolarizationFit(float(visibility), float(theta0), float(i_min), float(i_max),
                           v_err, t_err, bool(undetermined))


# -- blinking -----------------------------------------------------------------

@dataclass
class BlinkingReport:
    flagged: bool
    per_bin: list


def detect_blinking(stream, bin_sizes=(1.0, 10.0), n_sigma=5.0, dip_alpha=0.01):
    """Look for intensity switching in a photon stream.

    For each bin size (ms) the counts per bin are compared with a Poisson
    expectation at the mean rate: a bin beyond ``n_sigma`` standard
    deviations flags the stream. The count histogram is also checked for
    bimodality with Hartigan's dip test; p < ``dip_alpha`` flags it.
    """
    per_bin = []
    flagged = False
    dur_ps = stream.duration * 1e12
    for b in bin_sizes:
        width = b * 1e9
        n_bins = int(dur_ps // width)
        if n_bins < 10:
            per_bin.append({"bin_ms": b, "skipped": "fewer than 10 bins"})
            continue
        counts = np.bincount((stream.timestamps // width).astype(np.int64), minlength=n_bins)[:n_bins]
        mean = float(counts.mean())
        z = (counts - mean) / math.sqrt(mean) if mean > 0 else np.zeros_like(counts, dtype=float)
        max_dev = float(np.abs(z).max())
        if np.ptp(counts) > 0:
            # integer ties inflate the dip statistic; spread them within one count
            jitter = np.random.default_rng(0).uniform(-0.5, 0.5, n_bins)
            dip, pval = diptest.diptest(counts + jitter)
        else:
            dip, pval = 0.0, 1.0
        poisson_flag = max_dev > n_sigma
        dip_flag = pval < dip_alpha
        flagged = flagged or poisson_flag or dip_flag
        per_bin.append({"bin_ms": b, "n_bins": n_bins, "mean": mean,
                        "std": float(counts.std(ddof=1)), "fano": float(counts.var(ddof=1) / mean) if mean else 0.0,
                        "max_deviation_sigma": max_dev, "dip": float(dip), "dip_pvalue": float(pval),
                        "poisson_flag": bool(poisson_flag), "bimodal_flag": bool(dip_flag)})
    return BlinkingReport(bool(flagged), per_bin)
