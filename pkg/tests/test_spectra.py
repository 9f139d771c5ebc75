import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import curve_fit

from vibronix.analysis.lm import levenberg_marquardt
from vibronix.analysis.peakfit import fit_multilorentzian
from vibronix.analysis.spectra import (detect_peaks, load_spectrum, subtract_background,
                                       write_spectrum)
from vibronix.constants import ev_to_nm, nm_to_ev, width_mev_to_nm, width_nm_to_mev
from vibronix.errors import (ConvergenceError, DegenerateFitError, DomainError,
                             SpectrumParseError)
from vibronix.presets import default_grid
from vibronix.spectrum import Spectrum, convert_axis
from vibronix.vibronic import VibronicParams, line_list, lorentzian, synthesize_spectrum


# -- units ---------------------------------------------------------------------

def test_unit_conversions():
    assert nm_to_ev(547.5) == pytest.approx(2.2646, abs=1e-4)
    assert nm_to_ev(1239.8419) == pytest.approx(1.0, abs=1e-12)
    assert width_nm_to_mev(0.31, 547.5) == pytest.approx(1.28, abs=5e-3)


@given(st.floats(200.0, 2000.0))
def test_nm_ev_roundtrip(lam):
    assert ev_to_nm(nm_to_ev(lam)) == pytest.approx(lam, rel=1e-14)


@given(st.floats(0.01, 5.0), st.floats(300.0, 900.0))
def test_width_roundtrip(w, lam):
    assert width_mev_to_nm(width_nm_to_mev(w, lam), lam) == pytest.approx(w, rel=1e-12)


def test_convert_axis_preserves_counts_with_jacobian():
    lam = np.linspace(540.0, 560.0, 4001)
    s = Spectrum(lam, lorentzian(lam, 550.0, 0.5, 1000.0))
    e = convert_axis(s, "energy", jacobian=True)
    assert e.axis_kind == "energy" and np.all(np.diff(e.axis) > 0)
    assert np.trapezoid(e.intensity, e.axis) == pytest.approx(np.trapezoid(s.intensity, lam),
                                                              rel=1e-4)
    back = convert_axis(e, "wavelength", jacobian=True)
    assert back.intensity == pytest.approx(s.intensity, rel=1e-12)
    assert convert_axis(s, "energy").intensity.sum() == pytest.approx(s.intensity.sum())


def test_spectrum_validation():
    with pytest.raises(DomainError):
        Spectrum([1.0, 1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        Spectrum([1.0, 2.0], [1.0, -2.0])
    with pytest.raises(DomainError):
        Spectrum([1.0, 2.0], [1.0, 2.0], axis_kind="frequency")


# -- CSV input -----------------------------------------------------------------

def test_csv_roundtrip(tmp_path, il1):
    s = synthesize_spectrum(il1, grid=default_grid(il1), noise_seed=1, peak_counts=500)
    path = tmp_path / "s.csv"
    write_spectrum(s, path, fmt="%.17g")
    back = load_spectrum(path)
    assert np.array_equal(back.axis, s.axis)
    assert np.array_equal(back.intensity, s.intensity)


def test_csv_header_comments_and_unsorted_rows():
    text = "# comment\nwavelength,counts\n552.0, 3\n550.0,1\n551.0;2\n"
    s = load_spectrum(io.StringIO(text))
    assert list(s.axis) == [550.0, 551.0, 552.0]
    assert list(s.intensity) == [1.0, 2.0, 3.0]


def test_csv_whitespace_columns():
    s = load_spectrum(io.StringIO("1.0 2.0\n2.0 3.0\n"))
    assert list(s.intensity) == [2.0, 3.0]


@pytest.mark.parametrize("text, line", [
    ("550,1\n551,2\nabc,3\n", 3),
    ("550,1\n551,-2\n", 2),
    ("550,1\n551,2,3\n", 2),
    ("550,1\n551,2\n550,4\n", 3),
    ("550,1\n551,nan\n", 2),
])
def test_csv_errors_carry_line_numbers(text, line):
    with pytest.raises(SpectrumParseError) as exc:
        load_spectrum(io.StringIO(text))
    assert exc.value.line == line
    assert f":{line}" in str(exc.value) or f"line {line}" in str(exc.value)


def test_csv_too_short():
    with pytest.raises(SpectrumParseError):
        load_spectrum(io.StringIO("550,1\n"))


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(SpectrumParseError):
        load_spectrum(tmp_path / "none.csv")


# -- background and peak detection -------------------------------------------------

def _il1_spectrum(il1, **kw):
    return synthesize_spectrum(il1, grid=default_grid(il1), **kw)


def test_flat_offset_removed_without_changing_areas(il1):
    clean = _il1_spectrum(il1)
    centres = line_list(il1)[0]
    ref = fit_multilorentzian(clean, initial=centres)
    shifted = clean.replace(intensity=clean.intensity + 250.0)
    fit = fit_multilorentzian(subtract_background(shifted), initial=centres)
    for a, b in zip(ref.peaks, fit.peaks):
        assert b.area == pytest.approx(a.area, rel=5e-3)


def test_linear_ramp_removed(il1):
    clean = _il1_spectrum(il1)
    x = clean.axis
    ramp = 40.0 + 300.0 * (x - x[0]) / (x[-1] - x[0])
    out = subtract_background(clean.replace(intensity=clean.intensity + ramp))
    amplitude = ramp.max() - ramp.min()
    # away from the lines the residual is the leftover of the ramp
    quiet = clean.intensity < 1e-3 * clean.intensity.max()
    assert np.abs(out.intensity[quiet] - clean.intensity[quiet]).max() < 0.01 * amplitude


def test_zero_spectrum_background():
    s = Spectrum(np.arange(100.0) + 1, np.zeros(100))
    for method in ("linear_baseline", "rolling_median"):
        assert np.all(subtract_background(s, method).intensity == 0)


def test_background_window_too_large():
    s = Spectrum(np.arange(10.0) + 1, np.ones(10))
    with pytest.raises(DomainError):
        subtract_background(s, "rolling_median", window=11)
    with pytest.raises(DomainError):
        subtract_background(s, "linear_baseline", window=6)


def test_detects_four_il1_lines(il1):
    s = _il1_spectrum(il1)
    found = detect_peaks(s)
    truth = np.sort(line_list(il1)[0])
    assert found.size == 4
    step = s.axis[1] - s.axis[0]
    assert np.all(np.abs(found - truth) <= step)


def test_flat_and_single_line():
    x = np.linspace(540, 560, 2001)
    assert detect_peaks(Spectrum(x, np.full(x.size, 5.0))).size == 0
    assert detect_peaks(Spectrum(x, lorentzian(x, 550.0, 0.4, 100.0))).size == 1


# -- Levenberg-Marquardt ------------------------------------------------------------

def _exp_problem():
    t = np.linspace(0, 5, 60)
    y = 3.0 * np.exp(-t / 1.3) + 0.4 + 0.02 * np.random.default_rng(4).standard_normal(t.size)

    def f(t, a, tau, c):
        return a * np.exp(-t / tau) + c

    def jac(p):
        a, tau, c = p
        e = np.exp(-t / tau)
        return np.column_stack([e, a * e * t / tau ** 2, np.ones_like(t)])
    return t, y, f, jac


def test_lm_matches_curve_fit():
    t, y, f, jac = _exp_problem()
    res = levenberg_marquardt(lambda p: f(t, *p) - y, jac, [1.0, 0.5, 0.0])
    ref, ref_cov = curve_fit(f, t, y, p0=[1.0, 0.5, 0.0])
    assert res.params == pytest.approx(ref, rel=1e-6)
    assert np.sqrt(np.diag(res.covariance)) == pytest.approx(np.sqrt(np.diag(ref_cov)), rel=1e-3)


def test_lm_cost_never_increases():
    t, y, f, jac = _exp_problem()
    res = levenberg_marquardt(lambda p: f(t, *p) - y, jac, [10.0, 0.05, 2.0])
    assert np.all(np.diff(res.cost_history) <= 0)


def test_lm_iteration_limit():
    t, y, f, jac = _exp_problem()
    with pytest.raises(ConvergenceError) as exc:
        levenberg_marquardt(lambda p: f(t, *p) - y, jac, [10.0, 0.05, 2.0], max_iter=2)
    assert exc.value.best is not None


# -- multi-Lorentzian fit -------------------------------------------------------------

def test_noise_free_fit_is_exact(il1):
    # without tail truncation the data are exactly in the model class
    s = _il1_spectrum(il1, peak_counts=1e4, tail_cutoff=None)
    centres, widths, _ = line_list(il1)
    fit = fit_multilorentzian(s, initial=centres + 0.05)
    got = np.array([p.center_nm for p in fit.peaks])
    assert got == pytest.approx(np.sort(centres), rel=1e-6)
    order = np.argsort(centres)
    assert [p.fwhm_nm for p in fit.peaks] == pytest.approx(widths[order], rel=1e-6)
    assert fit.offset == pytest.approx(0.0, abs=1e-6 * s.intensity.max())


def test_noisy_fit_centres_and_widths(il1):
    s = _il1_spectrum(il1, noise_seed=5, peak_counts=1e4)
    centres, widths, _ = line_list(il1)
    order = np.argsort(centres)
    fit = fit_multilorentzian(s, initial=detect_peaks(s))
    assert np.abs([p.center_nm for p in fit.peaks] - centres[order]).max() < 0.02
    assert [p.fwhm_nm for p in fit.peaks] == pytest.approx(widths[order], rel=0.05)


def test_unresolved_pair_is_not_silently_fitted():
    x = np.linspace(540, 560, 4001)
    y = lorentzian(x, 550.0, 0.8, 500.0) + lorentzian(x, 550.2, 0.8, 500.0)
    s = Spectrum(x, np.random.default_rng(0).poisson(y + 5.0).astype(float))
    with pytest.raises((DegenerateFitError, ConvergenceError)):
        fit_multilorentzian(s, initial=[549.9, 550.3])


def test_initial_guess_outside_axis():
    x = np.linspace(540, 560, 201)
    with pytest.raises(DomainError):
        fit_multilorentzian(Spectrum(x, lorentzian(x, 550, 1, 10)), initial=[600.0])


def test_energy_axis_fit():
    p = VibronicParams(2.27, 187.0, 1.2, 0.9676, 1.28, 0.26, 4)
    grid = np.linspace(1.6, 2.35, 30001)
    s = synthesize_spectrum(p, grid=grid, axis_kind="energy")
    fit = fit_multilorentzian(s, initial=detect_peaks(s))
    assert fit.peaks[-1].center_ev == pytest.approx(2.27, abs=1e-6)
    assert fit.peaks[-1].fwhm_mev == pytest.approx(1.28, rel=1e-4)
