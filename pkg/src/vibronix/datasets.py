"""Seeded synthetic datasets and the bundled sample files."""

import json
from importlib import resources

import numpy as np

from .analysis.ladder import EmitterRecord
from .constants import HC_EV_NM, width_nm_to_mev
from .presets import default_grid, il1_params, il1_temperature_model, il1_value
from .vibronic import VibronicParams, peak_fwhm, synthesize_spectrum

SCHEMA = "vibronix/1"
DEFAULT_TEMPERATURES = np.arange(125.0, 301.0, 25.0)
ENSEMBLE_SEED = 2024
#: Shift slope (nm/K at 290 K) of the default line-shift series. The preset
#: value is a lower bound, so the default sits slightly above it.
SERIES_SHIFT_SLOPE = 0.0075


def width_series(temperatures=DEFAULT_TEMPERATURES, n_lines=3, noise=0.03, seed=0,
                 gamma_vib=None):
    """Linewidths (meV) of the first ``n_lines`` lines against temperature.

    Widths follow alpha*T^3 + n*gamma_vib with alpha calibrated to the
    room-temperature ZPL width, times (1 + noise * N(0, 1)).
    Returns parallel arrays (T, fwhm, line index).
    """
    params = il1_params()
    if gamma_vib is not None:
        params = VibronicParams(params.e_zpl, params.lvm_quantum, params.anharmonicity,
                                params.s_total, params.gamma_zpl, gamma_vib, params.n_peaks)
    model = il1_temperature_model()
    rng = np.random.default_rng(seed)
    T = np.repeat(np.asarray(temperatures, dtype=float), n_lines)
    n = np.tile(np.arange(n_lines), len(temperatures))
    clean = np.array([peak_fwhm(params, model, t, k) for t, k in zip(T, n)])
    return T, clean * (1.0 + noise * rng.standard_normal(T.size)), n


def shift_series(temperatures=DEFAULT_TEMPERATURES, slope=None, noise_nm=0.01, seed=0):
    """ZPL wavelengths (nm) following lambda0 + a T^4 + b T^2.

    ``slope`` is in nm/K at 290 K. Returns (T, wavelength).
    """
    slope = SERIES_SHIFT_SLOPE if slope is None else slope
    model = il1_temperature_model(shift_slope=slope)
    rng = np.random.default_rng(seed)
    T = np.asarray(temperatures, dtype=float)
    lam = model.lambda0 + model.a * T ** 4 + model.b * T ** 2
    return T, lam + noise_nm * rng.standard_normal(T.size)


def _standardise(x, mean, std):
    return mean + std * (x - x.mean()) / x.std(ddof=1)


def _fit_inside(z, mean, std, lo, hi):
    """Standardise ``z`` to (mean, std) with every value inside [lo, hi].

    Samples that overshoot are blended with an evenly spaced set of the same
    rank order, using the smallest blend weight that fits (found by
    bisection). The evenly spaced set reaches at most sqrt(3) standard
    deviations, so a solution exists whenever both bounds lie further out.
    """
    if not (mean - np.sqrt(3) * std > lo and mean + np.sqrt(3) * std < hi):
        raise ValueError("cannot fit the requested spread inside the wavelength range")
    if z.size < 2:
        raise ValueError("need at least two emitters")
    even = np.empty(z.size)
    even[np.argsort(z, kind="stable")] = np.linspace(-1.0, 1.0, z.size)

    def blend(t):
        return _standardise((1 - t) * (z - z.mean()) / z.std(ddof=1) + t * even, mean, std)

    def inside(x):
        return x.min() >= lo and x.max() <= hi

    if inside(blend(0.0)):
        return blend(0.0)
    t_lo, t_hi = 0.0, 1.0
    for _ in range(60):
        t = 0.5 * (t_lo + t_hi)
        t_lo, t_hi = (t_lo, t) if inside(blend(t)) else (t, t_hi)
    return blend(t_hi)


def generate_ensemble(n=40, seed=ENSEMBLE_SEED, mean_energy=None, std_energy=None,
                      zpl_range_nm=None, max_fwhm_nm=None):
    """Synthetic emitter population.

    ZPL energies are normal draws adjusted to have exactly the requested
    sample mean and standard deviation (ddof=1) while lying inside
    ``zpl_range_nm``. Linewidths shrink
    with energy while the LVM quantum and its anharmonicity grow with it;
    all linewidths stay below ``max_fwhm_nm``. Raman shifts are centred on
    the preset host value.
    """
    mean_energy = il1_value("zpl_energy_mean") if mean_energy is None else mean_energy
    std_energy = il1_value("zpl_energy_std") if std_energy is None else std_energy
    lo_nm, hi_nm = il1_value("zpl_range_nm") if zpl_range_nm is None else zpl_range_nm
    max_fwhm_nm = il1_value("max_zpl_fwhm_nm") if max_fwhm_nm is None else max_fwhm_nm
    e_lo, e_hi = HC_EV_NM / hi_nm, HC_EV_NM / lo_nm
    rng = np.random.default_rng(seed)

    energy = _fit_inside(rng.standard_normal(n), mean_energy, std_energy, e_lo, e_hi)

    de = energy - mean_energy
    fwhm_nm = np.clip(0.37 - 4.0 * de + 0.04 * rng.standard_normal(n), 0.15, 0.95 * max_fwhm_nm)
    lvm = 187.0 + 250.0 * de + 2.0 * rng.standard_normal(n)
    anh = np.clip(1.2 + 15.0 * de + 0.1 * rng.standard_normal(n), 0.2, None)
    dw = np.clip(0.38 + 0.04 * rng.standard_normal(n), 0.2, 0.6)
    gamma_vib = np.clip(0.26 + 0.03 * rng.standard_normal(n), 0.1, None)
    g2 = rng.uniform(0.05, 0.35, n)
    raman = il1_value("raman_shift") + 0.21 * rng.standard_normal(n)
    raman = raman - raman.mean() + il1_value("raman_shift")

    records = []
    for i in range(n):
        lam = HC_EV_NM / energy[i]
        records.append(EmitterRecord(
            zpl_energy=float(energy[i]),
            zpl_fwhm_mev=float(width_nm_to_mev(fwhm_nm[i], lam)),
            zpl_fwhm_nm=float(fwhm_nm[i]),
            lvm_quantum=float(lvm[i]),
            anharmonicity=float(anh[i]),
            debye_waller=float(dw[i]),
            gamma_vib=float(gamma_vib[i]),
            g2_0=float(g2[i]),
            raman_shift=float(raman[i]),
            source=f"synthetic-{i:02d}",
        ))
    return records


def records_to_json(records):
    return {"schema": SCHEMA, "records": [r.to_dict() for r in records]}


def records_from_json(data):
    """Records from a report, an ensemble file or a bare list of record dicts."""
    if isinstance(data, dict) and "records" in data:
        items = data["records"]
    elif isinstance(data, dict) and "record" in data:
        items = [data["record"]]
    elif isinstance(data, dict):
        items = [data]
    else:
        items = list(data)
    return [EmitterRecord.from_dict(d) for d in items]


def il1_sample_spectrum(seed=7, peak_counts=1e4, background=0.0):
    params = il1_params()
    return synthesize_spectrum(params, grid=default_grid(params), noise_seed=seed,
                               peak_counts=peak_counts, background=background)


def broad_sample_spectrum(seed=11, peak_counts=2e3):
    """Single broad band (about 100 meV wide) without a vibronic ladder."""
    params = VibronicParams(1.945, 65.0, 0.0, 0.0, 100.0, 0.0, 1)
    grid = np.arange(560.0, 760.0, 0.1)
    return synthesize_spectrum(params, grid=grid, noise_seed=seed, peak_counts=peak_counts)


def data_path(name):
    return resources.files("vibronix") / "data" / name


def load_ensemble():
    """The bundled 40-emitter population."""
    return records_from_json(json.loads(data_path("il1_ensemble.json").read_text()))


def load_sample(name):
    """Bundled sample spectrum: ``il1`` or ``broad``."""
    from .analysis.spectra import load_spectrum
    files = {"il1": "il1_sample.csv", "broad": "broad_sample.csv"}
    with resources.as_file(data_path(files[name])) as path:
        return load_spectrum(path)


def write_bundled(directory):
    """Regenerate the bundled data files into ``directory``."""
    from pathlib import Path

    from .analysis.spectra import write_spectrum
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    payload = records_to_json(generate_ensemble())
    (d / "il1_ensemble.json").write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    write_spectrum(il1_sample_spectrum(), d / "il1_sample.csv")
    write_spectrum(broad_sample_spectrum(), d / "broad_sample.csv")

