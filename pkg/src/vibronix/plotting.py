"""SVG figures for the command-line reports.

Every plotted dataset is tagged with an SVG group id ``dataset-<name>`` so
files can be checked structurally. Output is byte-reproducible: the SVG
hash salt is fixed and no date is embedded.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "vibronix", "svg.fonttype": "none", "figure.figsize": (6.0, 4.0),
       "font.size": 9}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _tag(artists, name):
    if not isinstance(artists, (list, tuple)):
        artists = [artists]
    for a in artists:
        a.set_gid(f"dataset-{name}")


def spectrum_fit(spectrum, fit, path, title=None):
    """Data, fitted model and residuals of a multi-Lorentzian fit."""
    with plt.rc_context(_RC):
        fig, (ax, axr) = plt.subplots(2, 1, sharex=True, height_ratios=[3, 1])
        s = spectrum.sorted()
        model = fit.model(s.axis)
        _tag(ax.plot(s.axis, s.intensity, lw=0.6, color="0.4", label="data"), "data")
        _tag(ax.plot(s.axis, model, lw=0.9, color="C3", label="fit"), "fit")
        _tag(axr.plot(s.axis, s.intensity - model, lw=0.5, color="C0"), "residual")
        ax.set_ylabel("counts")
        axr.set_ylabel("residual")
        axr.set_xlabel(f"{s.axis_kind} ({s.units})")
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def spectrum_plot(spectrum, path, title=None):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        s = spectrum.sorted()
        _tag(ax.plot(s.axis, s.intensity, lw=0.6, color="C0"), "spectrum")
        ax.set_xlabel(f"{s.axis_kind} ({s.units})")
        ax.set_ylabel("counts")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def ipr_plot(modes, lvms, path, band_max=None):
    """IPR against mode energy with localized modes highlighted."""
    band_max = modes.band_max if band_max is None else band_max
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        _tag(ax.scatter(modes.frequencies, modes.ipr, s=6, color="0.5", label="modes"), "modes")
        if lvms:
            f = [m.frequency for m in lvms]
            i = [m.ipr for m in lvms]
            _tag(ax.scatter(f, i, s=24, color="C3", label="localized"), "lvm")
        if band_max:
            _tag(ax.axvline(band_max, color="k", ls="--", lw=0.8), "band-edge")
        ax.set_xlabel("phonon energy (meV)")
        ax.set_ylabel("IPR")
        ax.legend(frameon=False)
        return _save(fig, path)


def regression_plot(x, y, result, path, xlabel, ylabel):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        _tag(ax.scatter(x, y, s=10, color="C0"), "points")
        _tag(ax.plot(result.grid, result.fit, color="C3", lw=1.0), "fit")
        _tag(ax.fill_between(result.grid, result.lower, result.upper, color="C3", alpha=0.2,
                             lw=0), "band")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        return _save(fig, path)


def g2_plot(hist, fit, path):
    from .photon.correlate import g2_model
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        _tag(ax.plot(hist.tau_bins, hist.normalized, lw=0.6, color="0.4"), "g2")
        if fit is not None:
            tau = np.asarray(hist.tau_bins)
            model = g2_model(tau, fit.depth, fit.antibunching_time, fit.bunching_amplitude,
                             fit.bunching_time or fit.antibunching_time)
            _tag(ax.plot(tau, model, color="C3", lw=1.0), "fit")
        ax.set_xlabel("delay (ns)")
        ax.set_ylabel("g2")
        return _save(fig, path)


def saturation_plot(power, rate, fit, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        _tag(ax.plot(power, np.asarray(rate) / 1e6, "o", ms=3, color="C0"), "data")
        p = np.linspace(0, max(power), 200)
        _tag(ax.plot(p, fit.rate(p) / 1e6, color="C3", lw=1.0), "fit")
        ax.set_xlabel("power (mW)")
        ax.set_ylabel("rate (Mcps)")
        return _save(fig, path)


def lifetime_plot(hist, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        _tag(ax.semilogy(hist.time, np.maximum(hist.counts, 0.5), lw=0.6, color="C0"), "decay")
        ax.set_xlabel("time (ns)")
        ax.set_ylabel("counts")
        return _save(fig, path)
