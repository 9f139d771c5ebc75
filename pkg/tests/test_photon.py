import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vibronix.errors import DomainError, IllConditionedError, InconsistencyError
from vibronix.photon import (DecayHistogram, EmitterModel, G2Histogram, Shelving, decay_model,
                             detect_blinking, fit_g2, fit_lifetime, fit_polarization,
                             fit_saturation, g2_model, hbt_correlate, poisson_stream,
                             polarization_curve, quantum_yield, read_timestamps,
                             read_timestamps_text, saturation_curve, simulate_cw,
                             simulate_pulsed, tail_lifetime, telegraph_stream, write_timestamps)
from vibronix.presets import il1_emitter


@pytest.fixture(scope="module")
def emitter():
    return il1_emitter()


@pytest.fixture(scope="module")
def psat_stream(emitter):
    return simulate_cw(emitter, emitter.psat, 0.1, seed=21)


# -- emitter model and simulation ------------------------------------------------------------

def test_model_rates(emitter):
    assert emitter.lifetime == pytest.approx(2.4)
    assert emitter.quantum_yield == pytest.approx(0.7894736842, rel=1e-9)
    # rates in 1/ns; the saturated detected rate is eta * gamma_rad
    assert emitter.detected_rate(1e12) * 1e9 == pytest.approx(12.5e6, rel=1e-9)
    assert emitter.detected_rate(emitter.psat) * 1e9 == pytest.approx(6.25e6, rel=1e-12)


@given(st.floats(0.01, 100.0))
def test_detected_rate_follows_saturation_law(power):
    m = il1_emitter()
    assert m.detected_rate(power) * 1e9 == pytest.approx(12.5e6 * power / (3.6 + power),
                                                         rel=1e-12)


def test_zero_decay_rate_rejected():
    with pytest.raises(DomainError):
        EmitterModel(gamma_rad=0.0)


def test_rate_at_psat(emitter, psat_stream):
    expected = 0.5 * emitter.gamma_rad * emitter.detection_efficiency * 1e9
    assert psat_stream.rate == pytest.approx(expected, rel=0.01)


def test_zero_power_gives_empty_stream(emitter):
    assert len(simulate_cw(emitter, 0.0, 0.01, seed=1)) == 0


def test_stream_determinism(emitter):
    a = simulate_cw(emitter, 1.0, 0.005, seed=5)
    b = simulate_cw(emitter, 1.0, 0.005, seed=5)
    c = simulate_cw(emitter, 1.0, 0.005, seed=6)
    assert np.array_equal(a.timestamps, b.timestamps)
    assert not np.array_equal(a.timestamps[:100], c.timestamps[:100])


def test_timestamps_are_strictly_increasing(psat_stream):
    assert np.all(np.diff(psat_stream.timestamps) > 0)


# -- correlation -------------------------------------------------------------------------------

def test_two_level_antibunching(emitter, psat_stream):
    hist = hbt_correlate(psat_stream, 3, binwidth=0.1, window=30.0)
    fit = fit_g2(hist)
    assert fit.g2_0 < 0.1
    expected = 1.0 / (emitter.pump_rate(emitter.psat) + emitter.gamma_total)
    assert fit.antibunching_time == pytest.approx(expected, rel=0.1)
    assert fit.two_level and fit.bunching_amplitude < 0.05
    far = np.abs(hist.tau_bins) > 20
    mean_far = hist.normalized[far].mean()
    err = hist.errors[far].mean() / np.sqrt(far.sum())
    assert abs(mean_far - 1.0) < 3 * err


def test_poisson_light_is_flat():
    s = poisson_stream(2e6, 0.5, seed=4)
    hist = hbt_correlate(s, 1, binwidth=0.2, window=20.0)
    z = (hist.normalized - 1.0) / hist.errors
    assert abs(z.mean()) < 3 / np.sqrt(z.size)
    assert np.mean(np.abs(z) < 3) > 0.98


def test_g2_error_shrinks_with_duration():
    def spread(duration):
        s = poisson_stream(2e6, duration, seed=8)
        return hbt_correlate(s, 2, binwidth=0.2, window=40.0).normalized.std()
    ratio = spread(0.2) / spread(0.4)
    assert ratio == pytest.approx(np.sqrt(2), rel=0.2)


@pytest.mark.parametrize("tau1, a, tau2", [(0.1, 0.0, None), (1.2, 0.0, None),
                                            (12.0, 0.0, None), (1.2, 0.4, 30.0),
                                            (0.5, 1.5, 40.0)])
def test_noise_free_g2_recovery(tau1, a, tau2):
    window = 40 * max(tau1, tau2 or 0.0)
    binwidth = tau1 / 20
    nbins = int(round(2 * window / binwidth)) | 1
    tau = (np.arange(nbins) - nbins // 2) * binwidth
    model = g2_model(tau, 0.95, tau1, a, tau2 or tau1, binwidth)
    norm = 1e12
    hist = G2Histogram(tau, model * norm, model, binwidth, norm)
    fit = fit_g2(hist)
    assert fit.antibunching_time == pytest.approx(tau1, rel=1e-6)
    assert fit.depth == pytest.approx(0.95, rel=1e-6)
    if a:
        assert fit.bunching_amplitude == pytest.approx(a, rel=1e-6)
        assert fit.bunching_time == pytest.approx(tau2, rel=1e-6)
    else:
        assert fit.bunching_amplitude == pytest.approx(0.0, abs=1e-6)


def test_shelving_shows_bunching(emitter):
    model = EmitterModel(gamma_rad=emitter.gamma_rad, gamma_nr=emitter.gamma_nr,
                         psat=emitter.psat, detection_efficiency=emitter.detection_efficiency,
                         shelving=Shelving(0.02, 0.002))
    hist = hbt_correlate(simulate_cw(model, model.psat, 0.05, seed=1), 2, 1.0, 3000.0)
    fit = fit_g2(hist)
    assert fit.bunching_amplitude > 1.0
    assert not fit.two_level
    # the excess over 1 at intermediate delays is many standard errors wide
    mid = (np.abs(hist.tau_bins) > 5) & (np.abs(hist.tau_bins) < 30)
    excess = hist.normalized[mid].mean() - 1.0
    assert excess > 10 * hist.errors[mid].mean() / np.sqrt(mid.sum())


def test_hbt_rejects_empty_stream():
    with pytest.raises(DomainError):
        hbt_correlate(poisson_stream(0.0, 0.1, 1), 1)


# -- saturation --------------------------------------------------------------------------------

def test_saturation_curve_identities():
    assert saturation_curve(3.6, 12.5e6, 3.6) == pytest.approx(6.25e6)
    assert saturation_curve(1e9, 12.5e6, 3.6, 1e5) - 1e5 * 1e9 == pytest.approx(12.5e6, rel=1e-6)


def test_noisy_saturation_recovery():
    p = np.geomspace(0.1, 100.0, 30)
    clean = saturation_curve(p, 12.5e6, 3.6, 1e5)
    rate = clean * (1 + 0.01 * np.random.default_rng(3).standard_normal(p.size))
    fit = fit_saturation(p, rate, sigma=0.01 * rate)
    assert fit.psat == pytest.approx(3.6, rel=0.02)
    assert fit.i_inf == pytest.approx(12.5e6, rel=0.02)
    assert fit.bg_slope == pytest.approx(1e5, rel=0.2)
    assert fit.rate(1e9, background=False) == pytest.approx(fit.i_inf, rel=1e-6)


def test_noise_free_saturation_exact():
    p = np.geomspace(0.2, 60.0, 12)
    fit = fit_saturation(p, saturation_curve(p, 12.5e6, 3.6), background_model="none")
    assert fit.psat == pytest.approx(3.6, rel=1e-6)
    assert fit.i_inf == pytest.approx(12.5e6, rel=1e-6)


def test_linear_regime_is_ill_conditioned():
    p = np.linspace(0.01, 0.2, 10)
    rate = saturation_curve(p, 12.5e6, 3.6) * (1 + 0.01 * np.random.default_rng(0).standard_normal(10))
    with pytest.raises(IllConditionedError):
        fit_saturation(p, rate)


def test_monte_carlo_saturation_points(emitter):
    for k, factor in enumerate((0.25, 1.0, 4.0)):
        power = factor * emitter.psat
        s = simulate_cw(emitter, power, 0.01, seed=100 + k)
        expected = 12.5e6 * power / (emitter.psat + power)
        assert s.rate == pytest.approx(expected, rel=0.02)


# -- lifetime ----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def decay(emitter):
    return simulate_pulsed(emitter, 80.0, 30.0, 0.05, seed=9)


def test_lifetime_fit_through_irf(decay):
    fit = fit_lifetime(decay)
    assert fit.tau_dominant == pytest.approx(2.4, abs=0.05)
    assert fit.tau_dominant_err < 0.05


def test_tail_slope_oracle(decay):
    assert tail_lifetime(decay) == pytest.approx(2.4, rel=0.02)


def test_zero_irf_histogram_is_pure_exponential(emitter):
    h = simulate_pulsed(emitter, 80.0, 0.0, 0.1, seed=2)
    # before t0 only photons of earlier pulses that outlive one period remain
    tau, period = 2.4, h.period
    before = h.time < h.t0 - h.binwidth / 2
    wrapped = np.exp(-(period - h.t0) / tau) * (1 - np.exp(-h.time[before][-1] / tau))
    expected = h.counts.sum() * wrapped / (1 - np.exp(-period / tau))
    assert h.counts[before].sum() == pytest.approx(expected, abs=4 * np.sqrt(expected))
    assert tail_lifetime(h, h.t0 + 0.1, h.t0 + 6.0) == pytest.approx(2.4, rel=0.02)


def _synthetic(amplitudes, taus, sigma=0.0, background=0.0):
    t = (np.arange(1560) + 0.5) * 0.008
    period = 12.5
    counts = background + 0.008 * decay_model(t, amplitudes, taus, sigma, 1.0, 0.0, period)
    return DecayHistogram(t, counts, 0.008, period, sigma, 1.0)


def test_exact_single_exponential_with_delta_irf():
    h = _synthetic([1e6], [2.4])
    fit = fit_lifetime(h, irf=0.0, fit_t0=False, fit_background=False)
    assert fit.tau1 == pytest.approx(2.4, rel=1e-6)
    assert fit.tau2 is None and fit.amplitudes[1] == 0.0


def test_two_component_decay():
    h = _synthetic([0.3e6, 0.7e6], [0.5, 2.4], sigma=0.03, background=2.0)
    rng = np.random.default_rng(7)
    h = DecayHistogram(h.time, rng.poisson(h.counts).astype(float), h.binwidth, h.period,
                       h.irf_sigma, h.t0)
    fit = fit_lifetime(h, irf=0.03)
    taus = sorted(fit.taus)
    assert taus[0] == pytest.approx(0.5, rel=0.05)
    assert taus[1] == pytest.approx(2.4, rel=0.05)
    share = fit.amplitudes[np.argmin(fit.taus)] / sum(fit.amplitudes)
    assert share == pytest.approx(0.3, rel=0.05)


def test_sampled_irf_matches_gaussian():
    h = _synthetic([1e6], [2.4], sigma=0.05)
    t = h.time
    irf = np.exp(-0.5 * ((t - 1.0) / 0.05) ** 2)
    a = fit_lifetime(h, irf=0.05, fit_background=False)
    b = fit_lifetime(h, irf=irf, fit_background=False)
    assert b.tau_dominant == pytest.approx(a.tau_dominant, rel=2e-3)


# -- quantum yield -----------------------------------------------------------------------------

def test_quantum_yield_formula(caplog):
    with caplog.at_level(logging.WARNING, logger="vibronix"):
        qy = quantum_yield(12.5e6, 0.038, 2.4, reference=0.92)
    assert qy == pytest.approx(0.79, abs=1e-3)
    assert any("0.920" in r.getMessage() for r in caplog.records)


def test_quantum_yield_unity():
    tau = 2.4
    assert quantum_yield(1e9 / tau, 1.0, tau) == pytest.approx(1.0)


def test_quantum_yield_inconsistent():
    with pytest.raises(InconsistencyError):
        quantum_yield(12.5e6, 0.02, 2.4)


# -- polarization ------------------------------------------------------------------------------

def _polar(v, theta0=30.0, noise=0.0, seed=0):
    theta = np.arange(0.0, 360.0, 10.0)
    y = polarization_curve(theta, 1000 * (1 - v), 2000 * v, theta0)
    rng = np.random.default_rng(seed)
    return theta, y * (1 + noise * rng.standard_normal(theta.size))


@pytest.mark.parametrize("seed", range(5))
def test_visibility_recovery(seed):
    fit = fit_polarization(*_polar(0.67, noise=0.02, seed=seed))
    assert fit.visibility == pytest.approx(0.67, abs=0.02)
    assert fit.theta0 == pytest.approx(30.0, abs=3.0)


def test_constant_intensity_has_no_polarization():
    fit = fit_polarization(np.arange(0.0, 360.0, 20.0), np.full(18, 500.0))
    assert fit.visibility == pytest.approx(0.0, abs=1e-12)
    assert fit.theta0_undetermined and fit.theta0_err >= 45


def test_perfect_dipole():
    fit = fit_polarization(*_polar(1.0, theta0=170.0))
    assert fit.visibility == pytest.approx(1.0, abs=1e-9)
    assert fit.theta0 == pytest.approx(170.0, abs=1e-6)


def test_polarization_needs_half_turn():
    with pytest.raises(DomainError):
        fit_polarization(np.linspace(0, 90, 10), np.ones(10))


# -- blinking ----------------------------------------------------------------------------------

def test_poisson_stream_is_stable():
    assert not detect_blinking(poisson_stream(1e5, 2.0, seed=3)).flagged


def test_telegraph_stream_is_flagged():
    s = telegraph_stream(2e5, 2e4, 0.05, 2.0, seed=3)
    report = detect_blinking(s, bin_sizes=(10.0,))
    assert report.flagged


def test_emitter_at_psat_is_stable(psat_stream):
    assert not detect_blinking(psat_stream).flagged


# -- timestamp files ---------------------------------------------------------------------------

def test_binary_roundtrip(tmp_path, psat_stream):
    path = tmp_path / "photons.bin"
    write_timestamps(psat_stream, path)
    back = read_timestamps(path)
    assert np.array_equal(back.timestamps, psat_stream.timestamps)
    assert back.duration == psat_stream.duration


def test_text_timestamps(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("# ps channel\n100 0\n250 1\n900 0\n")
    s = read_timestamps_text(path, duration=1e-9)
    assert list(s.timestamps) == [100, 250, 900]
    assert list(s.channels) == [0, 1, 0]
