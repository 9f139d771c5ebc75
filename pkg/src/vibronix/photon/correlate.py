"""Start-stop free coincidence histograms and g2 fits."""

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.optimize import least_squares

from ..errors import ConvergenceError, DomainError
from .simulate import split_stream


@dataclass
class G2Histogram:
    tau_bins: np.ndarray       # bin centres, ns
    coincidences: np.ndarray
    normalized: np.ndarray
    binwidth: float            # ns
    norm: float                # expected coincidences per bin for uncorrelated light

    @property
    def errors(self):
        """Poisson 1-sigma error of the normalised values."""
        return np.sqrt(np.maximum(self.coincidences, 1.0)) / self.norm

    def at_zero(self):
        return float(self.normalized[np.argmin(np.abs(self.tau_bins))])


def cross_correlate(t_a, t_b, window, binwidth):
    """Histogram of t_b - t_a (ps inputs) over [-window, window] (ps)."""
    t_a = np.asarray(t_a, dtype=np.int64)
    t_b = np.asarray(t_b, dtype=np.int64)
    nbins = int(round(2 * window / binwidth))
    if nbins % 2 == 0:
        nbins += 1
    half = nbins * binwidth / 2.0
    edges = np.linspace(-half, half, nbins + 1)
    counts = np.zeros(nbins, dtype=np.int64)
    lo = np.searchsorted(t_b, t_a - half, side="left")
    hi = np.searchsorted(t_b, t_a + half, side="right")
    k = 0
    span = hi - lo
    while True:
        active = span > k
        if not active.any():
            break
        d = t_b[lo[active] + k] - t_a[active]
        counts += np.histogram(d, edges)[0]
        k += 1
    return 0.5 * (edges[1:] + edges[:-1]), counts


def hbt_correlate(stream, splitter_seed, binwidth=0.1, window=20.0):
    """Two-detector g2 histogram of a photon stream.

    Photons are sent to two detectors by a 50/50 splitter drawn from
    ``splitter_seed`` (streams that already carry channels 0 and 1 are used
    as they are). Coincidences are normalised by rate_a * rate_b *
    binwidth * duration. ``binwidth`` and ``window`` are in ns.
    """
    if binwidth <= 0 or window <= binwidth:
        raise DomainError("need binwidth > 0 and window > binwidth")
    if len(stream) == 0:
        raise DomainError("empty photon stream")
    chans = set(np.unique(stream.channels).tolist())
    if chans != {0, 1}:
        stream = split_stream(stream, splitter_seed)
    a, b = stream.channel(0), stream.channel(1)
    if a.size == 0 or b.size == 0:
        raise DomainError("one detector received no photons")
    tau_ps, counts = cross_correlate(a, b, window * 1e3, binwidth * 1e3)
    dur_ps = stream.duration * 1e12
    norm = a.size * b.size / dur_ps ** 2 * (binwidth * 1e3) * dur_ps
    return G2Histogram(tau_ps * 1e-3, counts, counts / norm, binwidth, norm)


def _exp_average(tau, binwidth, scale):
    """exp(-|t|/scale) averaged over bins of ``binwidth`` centred on ``tau``."""
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    t = np.abs(tau)
    if binwidth <= 0:
        return np.exp(-t / scale)
    half = 0.5 * binwidth
    x = half / scale
    out = np.exp(-t / scale) * (np.sinh(x) / x if x < 700 else 1.0)
    # bins straddling zero
    mid = t < half
    lo, hi = tau[mid] - half, tau[mid] + half
    out[mid] = scale / binwidth * (2.0 - np.exp(lo / scale) - np.exp(-hi / scale))
    return out


def g2_model(tau, g2_depth, tau1, a, tau2, binwidth=0.0):
    """1 - depth * [(1 + a) exp(-|tau|/tau1) - a exp(-|tau|/tau2)].

    ``g2_depth`` is 1 for an ideal single emitter without background. With
    ``binwidth > 0`` the curve is averaged over histogram bins.
    """
    return 1.0 - g2_depth * ((1.0 + a) * _exp_average(tau, binwidth, tau1)
                             - a * _exp_average(tau, binwidth, tau2))


@dataclass
class G2Fit:
    g2_0: float
    antibunching_time: float
    bunching_amplitude: float
    bunching_time: float | None
    depth: float
    errors: dict
    two_level: bool
    cost: float


def _fit(tau, y, sigma, binwidth, q0, lower, upper, free, max_nfev):
    q0 = np.clip(q0, lower + 1e-9, upper - 1e-9)

    def full(q):
        p = q0.copy()
        p[free] = q
        return p

    def resid(q):
        p = full(q)
        return (g2_model(tau, p[0], p[1], p[2], p[1] * p[3], binwidth) - y) / sigma

    res = least_squares(resid, q0[free], bounds=(lower[free], upper[free]), x_scale="jac",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    if res.status == 0:
        raise ConvergenceError(
            f"g2 fit did not converge after {res.nfev} evaluations; residual norm "
            f"{np.linalg.norm(res.fun):.4g}", best=full(res.x), cost=res.cost)
    return res, full(res.x)


def fit_g2(hist, a_threshold=0.05, p0=None, fit_depth=True, min_ratio=2.0, bin_average=True,
           significance=0.01, max_nfev=5000):
    """Least-squares fit of the antibunching/bunching model.

    Returns g2(0) of the fitted curve, the antibunching time tau1, the
    bunching amplitude ``a`` and time tau2 (tau2 >= ``min_ratio`` * tau1).
    A bunching term is kept only when an F test of the full model against
    the pure antibunching curve rejects the latter at ``significance``;
    otherwise ``a`` is 0 and tau2 is None.
    The emitter is reported as two level when ``a < a_threshold``.
    ``p0`` is (depth, tau1, a, tau2).
    """
    tau = np.asarray(hist.tau_bins, dtype=float)
    y = np.asarray(hist.normalized, dtype=float)
    sigma = np.asarray(getattr(hist, "errors", np.ones_like(y)), dtype=float)
    binwidth = float(hist.binwidth) if bin_average else 0.0
    tmax = float(np.abs(tau).max())
    if p0 is None:
        centre = np.abs(tau) <= 1.5 * hist.binwidth
        dip = float(np.clip(1.0 - y[centre].min(), 0.05, 1.0))
        peak = float(max(y.max() - 1.0, 0.0))
        rising = np.nonzero((np.abs(tau) > 0) & (y >= min(1.0, y.max()) - dip / np.e))[0]
        t1 = max(float(np.abs(tau)[rising].min()) / 2 if rising.size else tmax / 10, hist.binwidth)
        t2 = tmax / 5
        if peak > 0.05:
            far = np.abs(tau) > np.abs(tau)[np.argmax(y)]
            under = far & (y < 1.0 + peak / np.e)
            if under.any():
                t2 = float(np.abs(tau)[under].min())
        p0 = [1.0, t1, peak, max(t2, 2.5 * t1)]
    depth0, t10, a0, t20 = map(float, p0)
    q0 = np.array([depth0, t10, a0, max(t20 / t10, min_ratio * 1.01)])
    lower = np.array([0.0, 1e-6, 0.0, min_ratio])
    upper = np.array([2.0, 10 * tmax, 100.0, 1e6])
    free = np.array([fit_depth, True, True, True])

    res, q = _fit(tau, y, sigma, binwidth, q0, lower, upper, free, max_nfev)
    free_ab = free & np.array([True, True, False, False])
    q0_ab = q0.copy()
    q0_ab[2] = 0.0
    res_ab, q_ab = _fit(tau, y, sigma, binwidth, q0_ab, lower, upper, free_ab, max_nfev)
    dof = max(y.size - int(free.sum()), 1)
    f_stat = (res_ab.cost - res.cost) / 2.0 / max(res.cost / dof, 1e-300)
    bunching = f_stat > stats.f.ppf(1.0 - significance, 2, dof)
    if not bunching:
        res, q, free = res_ab, q_ab, free_ab
        q[2] = 0.0
    depth, tau1, a, ratio = q
    tau2 = tau1 * ratio
    J = res.jac
    cov_free = np.linalg.pinv(J.T @ J) * (2 * res.cost / max(y.size - free.sum(), 1))
    cov = np.zeros((4, 4))
    cov[np.ix_(free, free)] = cov_free
    T = np.eye(4)
    T[3, 1], T[3, 3] = ratio, tau1
    errs = np.sqrt(np.clip(np.diag(T @ cov @ T.T), 0, None))
    names = ("depth", "antibunching_time", "bunching_amplitude", "bunching_time")
    return G2Fit(float(g2_model(0.0, depth, tau1, a, tau2)[0]), float(tau1), float(a),
                 float(tau2) if bunching else None, float(depth),
                 dict(zip(names, map(float, errs))), bool(a < a_threshold), float(res.cost))
