"""Command-line interface.

    vibronix <synth|fit|mc|phonon|stats> [--config FILE] [flags]

A JSON config file supplies option values by their long names (dashes or
underscores); unknown keys are rejected and command-line flags win. The
seed comes from --seed, the config, or the VIBRONIX_SEED environment
variable, in that order. Exit codes: 0 success, 2 input or configuration
error, 3 the spectrum is not an IL1-type ladder.
"""

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import plotting
from .analysis.ladder import classify_fingerprint
from .analysis.pipeline import analyze_spectrum
from .analysis.spectra import load_spectrum, write_spectrum
from .analysis.statistics import ensemble_stats, regress_with_ci, strain_range
from .constants import DIAMOND_RAMAN_CM
from .datasets import SCHEMA, data_path, records_from_json
from .errors import FitError, NotALadderError, VibronixError
from .lattice import build_lattice, calibrate_defect_scale, classify_lvm, LatticeModel, solve_modes
from .photon import (EmitterModel, fit_g2, fit_lifetime, fit_polarization, fit_saturation,
                     hbt_correlate, polarization_curve, quantum_yield, simulate_cw,
                     simulate_pulsed)
from .photon.io import write_table
from .presets import default_grid, il1_emitter, il1_params, il1_value
from .vibronic import TemperatureModel, VibronicParams, huang_rhys_from_dw, synthesize_spectrum

log = logging.getLogger("vibronix")

EXIT_OK, EXIT_INPUT, EXIT_NOT_LADDER = 0, 2, 3


class InputError(VibronixError):
    pass


# -- helpers ------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, payload):
    payload = {"schema": SCHEMA, **payload}
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def child_seed(seed, *key):
    """Independent integer seed for a sub-task, fixed by (seed, key)."""
    return int(np.random.SeedSequence([int(seed), *key]).generate_state(1)[0])


def _resolve_seed(args, required):
    seed = args.seed
    if seed is None and os.environ.get("VIBRONIX_SEED"):
        try:
            seed = int(os.environ["VIBRONIX_SEED"])
        except ValueError:
            raise InputError("VIBRONIX_SEED must be an integer") from None
    if seed is None and required:
        raise InputError("an explicit seed is required (--seed, config or VIBRONIX_SEED)")
    if seed is not None and seed < 0:
        raise InputError("seed must be a non-negative integer")
    return seed


def _map(fn, items, jobs):
    """Ordered map, optionally on a thread pool. ``fn`` must not touch matplotlib."""
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- synth --------------------------------------------------------------------

def cmd_synth(args):
    seed = _resolve_seed(args, required=False)
    base = il1_params()   # unspecified parameters take the il1 values

    def pick(name):
        v = getattr(args, name)
        return getattr(base, name) if v is None else v

    if args.s_factor is not None and args.debye_waller is not None:
        raise InputError("give either --s-factor or --debye-waller, not both")
    s_total = args.s_factor
    if s_total is None and args.debye_waller is not None:
        s_total = huang_rhys_from_dw(args.debye_waller)
    try:
        params = VibronicParams(pick("e_zpl"), pick("lvm_quantum"), pick("anharmonicity"),
                                base.s_total if s_total is None else s_total,
                                pick("gamma_zpl"), pick("gamma_vib"), pick("n_peaks"))
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid vibronic parameters: {exc}") from None
    T = args.temperature
    temp_model = TemperatureModel.calibrated(params.gamma_zpl, 300.0)
    grid = default_grid(params, temp_model, T, step=args.step)
    spectrum = synthesize_spectrum(params, temp_model, T, grid, noise_seed=seed,
                                   peak_counts=args.peak_counts)
    out = _outdir(args)
    write_spectrum(spectrum, out / "spectrum.csv")
    truth = {
        "params": {k: getattr(params, k) for k in ("e_zpl", "lvm_quantum", "anharmonicity",
                                                   "s_total", "gamma_zpl", "gamma_vib", "n_peaks")},
        "debye_waller": math.exp(-params.s_total),
        "temperature": T,
        "zpl_fwhm_at_T": temp_model.zpl_fwhm(T),
        "seed": seed,
        "peak_counts": args.peak_counts,
        "photon_budget": spectrum.metadata["photon_budget"],
        "grid": {"start": float(grid[0]), "step": args.step, "n": int(grid.size)},
    }
    write_json(out / "truth.json", truth)
    if not args.no_plot:
        plotting.spectrum_plot(spectrum, out / "spectrum.svg")
    return EXIT_OK


# -- fit ----------------------------------------------------------------------

def _unique_stems(paths):
    """File stems, numbered when several inputs share one."""
    stems = [Path(p).stem for p in paths]
    seen = {}
    result = []
    for s in stems:
        if stems.count(s) > 1:
            seen[s] = seen.get(s, 0) + 1
            s = f"{s}_{seen[s]}"
        result.append(s)
    return result


def _fit_one(path, stem, args, out):
    spectrum = load_spectrum(path, axis_kind=args.axis)
    report = {"input": str(path)}
    try:
        result = analyze_spectrum(spectrum, n_peaks=args.n_peaks, background=args.background,
                                  source=stem, g2_0=args.g2, raman_shift=args.raman)
    except (NotALadderError, FitError) as exc:
        report.update({"verdict": "not_a_ladder", "reason": str(exc)})
        write_json(out / f"{stem}.json", report)
        return stem, EXIT_NOT_LADDER, str(exc), None
    report.update(result.to_dict())
    ok = result.fingerprint.is_il1
    report["verdict"] = "il1" if ok else "not_il1"
    write_json(out / f"{stem}.json", report)
    reason = "; ".join(result.fingerprint.reasons)
    return stem, EXIT_OK if ok else EXIT_NOT_LADDER, reason, (spectrum, result.fit)


def cmd_fit(args):
    if not args.inputs:
        raise InputError("no input spectra given")
    out = _outdir(args)
    for p in args.inputs:
        if not Path(p).exists():
            raise InputError(f"{p}: no such file")
    jobs = list(zip(args.inputs, _unique_stems(args.inputs)))
    results = _map(lambda job: _fit_one(*job, args, out), jobs, args.jobs)
    code = EXIT_OK
    for stem, rc, reason, plot in results:
        # matplotlib state is global, so figures are drawn here, one at a time
        if plot is not None and not args.no_plot:
            plotting.spectrum_fit(plot[0], plot[1], out / f"{stem}_fit.svg", title=stem)
        if rc == EXIT_NOT_LADDER:
            print(f"{stem}: not an IL1 ladder: {reason}", file=sys.stderr)
            code = EXIT_NOT_LADDER
        else:
            print(f"{stem}: IL1 ladder")
    return code


# -- mc -----------------------------------------------------------------------

def _emitter_from_args(args):
    if args.preset:
        model = il1_emitter()
    else:
        model = EmitterModel(gamma_rad=1.0 / args.lifetime, psat=3.6)
    changes = {}
    if args.lifetime is not None or args.quantum_yield is not None:
        tau = args.lifetime if args.lifetime is not None else model.lifetime
        qy = args.quantum_yield if args.quantum_yield is not None else model.quantum_yield
        changes.update(gamma_rad=qy / tau, gamma_nr=(1 - qy) / tau)
    if args.psat is not None:
        changes["psat"] = args.psat
    if args.eta is not None:
        changes["detection_efficiency"] = args.eta
    if changes:
        fields = dict(gamma_rad=model.gamma_rad, gamma_nr=model.gamma_nr, psat=model.psat,
                      detection_efficiency=model.detection_efficiency)
        fields.update(changes)
        model = EmitterModel(**fields)
    return model


def cmd_mc(args):
    seed = _resolve_seed(args, required=True)
    if args.lifetime is None and not args.preset:
        raise InputError("give --preset or --lifetime")
    try:
        model = _emitter_from_args(args)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _outdir(args)
    collector = _WarningCollector()
    log.addHandler(collector)
    try:
        return _run_mc(args, seed, model, out, collector.messages)
    finally:
        log.removeHandler(collector)


class _WarningCollector(logging.Handler):
    """Keeps the text of every warning logged under ``vibronix`` for the summary."""

    def __init__(self):
        super().__init__(logging.WARNING)
        self.messages = []

    def emit(self, record):
        self.messages.append(record.getMessage())


def _run_mc(args, seed, model, out, warnings_list):
    power = model.psat if args.power is None else args.power
    warn = log.warning

    # antibunching
    stream = simulate_cw(model, power, args.duration, child_seed(seed, 1))
    if len(stream) < 2:
        raise InputError("the simulated stream is empty; raise --power or --duration")
    hist = hbt_correlate(stream, child_seed(seed, 2), args.binwidth, args.window)
    zero_counts = int(hist.coincidences[np.argmin(np.abs(hist.tau_bins))])
    expected = hist.norm
    if expected < 100:
        warn(f"only {expected:.1f} uncorrelated coincidences expected per bin; g2(0) is "
             f"poorly determined, increase --duration")
    g2 = fit_g2(hist)

    # saturation curve
    powers = np.asarray(args.powers if args.powers else model.psat * np.geomspace(0.05, 25, 12))
    def sat_point(k):
        s = simulate_cw(model, float(powers[k]), args.saturation_duration, child_seed(seed, 3, k))
        return len(s) / args.saturation_duration
    rates = np.array(_map(sat_point, range(powers.size), args.jobs))
    sigma = np.sqrt(np.maximum(rates * args.saturation_duration, 1.0)) / args.saturation_duration
    try:
        sat = fit_saturation(powers, rates, background_model="none", sigma=sigma)
    except VibronixError as exc:
        raise InputError(f"saturation fit failed: {exc}") from None

    # lifetime
    decay = simulate_pulsed(model, args.rep_rate, args.irf, args.lifetime_duration,
                            child_seed(seed, 4))
    if decay.counts.sum() < 1e4:
        warn(f"decay histogram holds {int(decay.counts.sum())} counts; lifetime error will be "
             f"large, increase --lifetime-duration")
    life = fit_lifetime(decay)

    # polarization: Poisson counts through a rotating analyser
    theta = np.arange(0.0, 360.0, 10.0)
    v = args.visibility
    mean_counts = args.polarization_counts
    curve = polarization_curve(theta, mean_counts * (1 - v), 2 * v * mean_counts, args.dipole_angle)
    rng = np.random.default_rng(child_seed(seed, 5))
    pol_counts = rng.poisson(curve).astype(float)
    pol = fit_polarization(theta, pol_counts)

    qy = quantum_yield(sat.i_inf, model.detection_efficiency, life.tau_dominant,
                       reference=il1_value("quantum_yield_reference") if args.preset else None)

    write_table(out / "g2.csv", ["tau_ns", "coincidences", "g2"],
                [hist.tau_bins, hist.coincidences, hist.normalized])
    write_table(out / "saturation.csv", ["power_mW", "rate_cps"], [powers, rates])
    write_table(out / "lifetime.csv", ["time_ns", "counts"], [decay.time, decay.counts])
    write_table(out / "polarization.csv", ["angle_deg", "counts"], [theta, pol_counts])
    summary = {
        "seed": seed,
        "model": {"gamma_rad": model.gamma_rad, "gamma_nr": model.gamma_nr, "psat": model.psat,
                  "detection_efficiency": model.detection_efficiency, "power": power},
        "g2_0": g2.g2_0,
        "antibunching_time": g2.antibunching_time,
        "antibunching_time_expected": 1.0 / (model.pump_rate(power) + model.gamma_total),
        "bunching_amplitude": g2.bunching_amplitude,
        "two_level": g2.two_level,
        "g2_zero_bin_counts": zero_counts,
        "psat": sat.psat, "psat_err": sat.psat_err,
        "i_inf": sat.i_inf, "i_inf_err": sat.i_inf_err,
        "tau": life.tau_dominant, "tau_err": life.tau_dominant_err,
        "lifetime_fit": life.to_dict(),
        "visibility": pol.visibility, "visibility_err": pol.visibility_err,
        "polarization_angle": pol.theta0,
        "qy": qy,
        "detected_rate": stream.rate,
        "warnings": warnings_list,
    }
    write_json(out / "summary.json", summary)
    if not args.no_plot:
        plotting.g2_plot(hist, g2, out / "g2.svg")
        plotting.saturation_plot(powers, rates, sat, out / "saturation.svg")
        plotting.lifetime_plot(decay, out / "lifetime.svg")
    print(f"g2(0)={g2.g2_0:.3f} tau={life.tau_dominant:.3f} ns psat={sat.psat:.3f} mW "
          f"i_inf={sat.i_inf:.4g} cps V={pol.visibility:.3f} qy={qy:.3f}")
    return EXIT_OK


# -- phonon -------------------------------------------------------------------

def cmd_phonon(args):
    out = _outdir(args)
    if args.lattice:
        try:
            model = LatticeModel.load(args.lattice)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"cannot read lattice {args.lattice}: {exc}") from None
        scale = None
    else:
        impurity = None
        if args.mass_ratio is not None:
            impurity = args.mass * (1.0 - args.mass_ratio)
        scale = args.scale
        size = args.size if args.size is not None else (100 if args.kind == "chain" else 3)
        if args.calibrate_to is not None:
            scale = calibrate_defect_scale(args.calibrate_to, args.kind, size, args.defect)
        model = build_lattice(args.kind, size, args.defect, scale, mass=args.mass,
                              boundary=args.boundary, impurity_mass=impurity)
    modes = solve_modes(model, band_max=args.band_max)
    band_max = modes.band_max
    if band_max is None:
        raise InputError("no bulk band maximum known for this lattice; pass --band-max")
    lvms = classify_lvm(modes, band_max, args.ipr_threshold)
    flag = np.zeros(modes.frequencies.size)
    flag[[m.index for m in lvms]] = 1
    write_table(out / "modes.csv", ["mode", "frequency_meV", "ipr", "lvm"],
                [np.arange(flag.size), modes.frequencies, modes.ipr, flag])
    model.save(out / "lattice.json")
    write_json(out / "phonon.json", {
        "n_atoms": model.n_atoms, "n_modes": int(modes.frequencies.size),
        "n_zero_modes": modes.n_zero, "band_max": band_max,
        "defect_stiffness_scale": scale,
        "lvms": [{"index": m.index, "frequency": m.frequency, "ipr": m.ipr} for m in lvms],
        "max_frequency": float(modes.frequencies.max()),
    })
    if not args.no_plot:
        plotting.ipr_plot(modes, lvms, out / "ipr.svg", band_max)
    print(f"{len(lvms)} localized mode(s) above {band_max:.2f} meV"
          + (": " + ", ".join(f"{m.frequency:.2f}" for m in lvms) if lvms else ""))
    return EXIT_OK


# -- stats --------------------------------------------------------------------

REGRESSIONS = (("zpl_fwhm_nm", "ZPL FWHM (nm)"), ("lvm_quantum", "LVM quantum (meV)"),
               ("anharmonicity", "anharmonicity (meV/level)"))


def _read_records(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from None
    try:
        return records_from_json(data)
    except TypeError as exc:
        raise InputError(f"{path}: not an emitter record file ({exc})") from None


def cmd_stats(args):
    paths = list(args.inputs)
    if args.bundled:
        paths.append(data_path("il1_ensemble.json"))
    if not paths:
        raise InputError("no record files given")
    records = [r for p in paths for r in _read_records(p)]
    if not records:
        raise InputError("the input files hold no records")
    out = _outdir(args)
    summary = ensemble_stats(records)
    notices = []
    regressions = {}
    energy = np.array([r.zpl_energy for r in records])
    for name, label in REGRESSIONS:
        vals = [getattr(r, name, None) for r in records]
        if any(v is None for v in vals):
            notices.append(f"{name}: missing in some records, regression skipped")
            continue
        if len(records) < 3 or np.ptp(energy) == 0:
            notices.append(f"{name}: fewer than three distinct records, regression skipped")
            continue
        res = regress_with_ci(energy, vals, level=args.level)
        regressions[name] = res.to_dict()
        if not args.no_plot:
            plotting.regression_plot(energy, vals, res, out / f"regression_{name}.svg",
                                     "ZPL energy (eV)", label)
    strain = None
    shifts = [r.raman_shift for r in records]
    if all(s is not None for s in shifts):
        mean_shift = float(np.mean(shifts))
        lower, upper = strain_range(mean_shift, args.max_raman_fwhm)
        strain = {"mean_raman_shift": mean_shift, "lower": lower, "upper": upper,
                  "max_raman_fwhm": args.max_raman_fwhm, "reference": DIAMOND_RAMAN_CM,
                  "method": "lower bound from the mean shift, upper bound from the widest "
                            "Raman line treated as a shift excursion"}
    else:
        notices.append("raman_shift: missing in some records, strain range skipped")
    fingerprints = [classify_fingerprint(r).is_il1 for r in records]
    for n in notices:
        print(f"notice: {n}", file=sys.stderr)
    write_json(out / "ensemble.json", {"summary": summary, "regressions": regressions,
                                       "strain": strain, "il1_count": int(sum(fingerprints)),
                                       "notices": notices})
    f = summary["fields"]["zpl_energy"]
    print(f"{summary['count']} records: ZPL {f['mean']:.4f} +- {f['std']:.4f} eV")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--seed", type=int, help="random seed (falls back to VIBRONIX_SEED)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--no-plot", action="store_true", help="skip SVG figures")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vibronix", description="Vibronic spectra, photon statistics and defect phonon modes.",
        epilog="exit codes: 0 success, 2 input error, 3 not an IL1 ladder")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a vibronic spectrum")
    _common(p)
    p.add_argument("--preset", choices=["il1"], help="il1 values (also the fallback for unset values)")
    p.add_argument("--e-zpl", type=float, help="ZPL energy (eV)")
    p.add_argument("--lvm-quantum", type=float, help="LVM quantum (meV)")
    p.add_argument("--anharmonicity", type=float, help="meV per level")
    p.add_argument("--s-factor", type=float, help="Huang-Rhys factor")
    p.add_argument("--debye-waller", type=float, help="ZPL fraction, alternative to --s-factor")
    p.add_argument("--gamma-zpl", type=float, help="ZPL FWHM at 300 K (meV)")
    p.add_argument("--gamma-vib", type=float, help="width increment per level (meV)")
    p.add_argument("--n-peaks", type=int)
    p.add_argument("--temperature", type=float, default=300.0,
                   help="K; the ZPL width scales as T^3 from its 300 K value")
    p.add_argument("--peak-counts", type=float, default=1e4, help="counts at the strongest line")
    p.add_argument("--step", type=float, default=0.02, help="grid step (nm)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit spectra and extract ladder parameters")
    _common(p)
    p.add_argument("inputs", nargs="*", help="two-column CSV spectra")
    p.add_argument("--axis", choices=["wavelength", "energy"], default="wavelength")
    p.add_argument("--background", choices=["linear_baseline", "rolling_median"])
    p.add_argument("--n-peaks", type=int, default=4)
    p.add_argument("--g2", type=float, help="measured g2(0) to attach to the record")
    p.add_argument("--raman", type=float, help="Raman shift (cm^-1) to attach to the record")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("mc", help="Monte Carlo photon statistics and fits")
    _common(p)
    p.add_argument("--preset", choices=["il1"])
    p.add_argument("--lifetime", type=float, help="total lifetime (ns)")
    p.add_argument("--quantum-yield", type=float)
    p.add_argument("--psat", type=float, help="mW")
    p.add_argument("--eta", type=float, help="detection efficiency")
    p.add_argument("--power", type=float, help="CW power for g2 (mW), default Psat")
    p.add_argument("--duration", type=float, default=0.2, help="CW acquisition for g2 (s)")
    p.add_argument("--binwidth", type=float, default=0.1, help="g2 bin (ns)")
    p.add_argument("--window", type=float, default=30.0, help="g2 half range (ns)")
    p.add_argument("--powers", type=float, nargs="+", help="saturation powers (mW)")
    p.add_argument("--saturation-duration", type=float, default=0.02, help="s per power")
    p.add_argument("--rep-rate", type=float, default=80.0, help="MHz")
    p.add_argument("--irf", type=float, default=30.0, help="IRF sigma (ps)")
    p.add_argument("--lifetime-duration", type=float, default=0.05, help="pulsed acquisition (s)")
    p.add_argument("--visibility", type=float, default=0.67)
    p.add_argument("--dipole-angle", type=float, default=30.0, help="degrees")
    p.add_argument("--polarization-counts", type=float, default=2e4, help="mean counts per angle")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("phonon", help="phonon modes and localized vibrations of a toy lattice")
    _common(p)
    p.add_argument("--kind", choices=["chain", "diamond_cubic"], default="chain")
    p.add_argument("--size", type=int, help="atoms (chain, default 100) or cells per axis (default 3)")
    p.add_argument("--defect", choices=["none", "vacancy", "split_interstitial",
                                        "triple_interstitial"], default="none")
    p.add_argument("--scale", type=float, default=1.0, help="defect spring scale")
    p.add_argument("--calibrate-to", type=float, help="tune the defect scale to this top mode (meV)")
    p.add_argument("--mass", type=float, default=12.011, help="host mass (amu)")
    p.add_argument("--mass-ratio", type=float, help="light impurity (M - m) / M at the centre")
    p.add_argument("--boundary", choices=["free", "periodic"], default="free")
    p.add_argument("--band-max", type=float, help="bulk band top (meV)")
    p.add_argument("--ipr-threshold", type=float, default=0.1)
    p.add_argument("--lattice", help="lattice JSON file instead of a built lattice")
    p.set_defaults(func=cmd_phonon)

    p = sub.add_parser("stats", help="ensemble statistics and regressions")
    _common(p)
    p.add_argument("inputs", nargs="*", help="record or ensemble JSON files")
    p.add_argument("--bundled", action="store_true", help="include the bundled 40-emitter set")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--max-raman-fwhm", type=float, default=5.4, help="cm^-1")
    p.set_defaults(func=cmd_stats)
    return parser


def _config_value(action, key, value):
    if isinstance(action, argparse._StoreTrueAction):
        if not isinstance(value, bool):
            raise InputError(f"config key {key!r} must be true or false")
        return value
    if action.nargs in ("*", "+"):
        if not isinstance(value, list):
            raise InputError(f"config key {key!r} must be a list")
        items = value
    else:
        items = [value]
    try:
        items = [action.type(v) if action.type and v is not None else v for v in items]
    except (TypeError, ValueError):
        raise InputError(f"config key {key!r} has an invalid value {value!r}") from None
    if action.choices is not None and any(v not in action.choices for v in items):
        raise InputError(f"config key {key!r} must be one of {sorted(action.choices)}")
    return items if action.nargs in ("*", "+") else items[0]


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(config, dict):
        raise InputError("config must be a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "func")}
    values = {}
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise InputError(f"unknown config key {key!r} for {args.command}")
        values[dest] = _config_value(actions[dest], key, value)
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    logging.basicConfig(format="vibronix: %(levelname)s: %(message)s", level=logging.WARNING)
    try:
        args = _apply_config(parser, argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        if args.jobs < 1:
            raise InputError("--jobs must be at least 1")
        return args.func(args)
    except (VibronixError, ValueError, OSError) as exc:
        print(f"vibronix: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
