"""Forward model of a vibronic emission ladder coupled to one local mode.

Energies of the ladder are in eV, mode quantum, anharmonicity and widths in
meV. Line shapes are area-normalised Lorentzians whose areas follow the
Poisson Franck-Condon progression of a displaced harmonic oscillator.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as sc
from scipy.special import gammaln

from .constants import DEBYE_CM, HC_EV_NM, HUANG_RHYS_PER_MEV_AMU_A2, width_mev_to_nm
from .errors import DomainError, GridCoverageError
from .spectrum import Spectrum

#: Lorentzian tails are cut at this many FWHM from the centre.
TAIL_CUTOFF_FWHM = 200.0


@dataclass(frozen=True)
class VibronicParams:
    e_zpl: float            # eV
    lvm_quantum: float      # meV
    anharmonicity: float    # meV per level
    s_total: float
    gamma_zpl: float        # meV, ZPL FWHM
    gamma_vib: float        # meV
    n_peaks: int = 4

    def __post_init__(self):
        if not self.e_zpl > 0:
            raise DomainError("e_zpl must be positive")
        if not self.lvm_quantum > 0:
            raise DomainError("lvm_quantum must be positive")
        if not self.s_total >= 0:
            raise DomainError("s_total must be non-negative")
        if not self.gamma_zpl > 0:
            raise DomainError("gamma_zpl must be positive")
        if not self.gamma_vib >= 0:
            raise DomainError("gamma_vib must be non-negative")
        if int(self.n_peaks) != self.n_peaks or self.n_peaks < 1:
            raise DomainError("n_peaks must be a positive integer")
        if not self.anharmonicity < self.lvm_quantum / self.n_peaks:
            raise DomainError("anharmonicity must stay below lvm_quantum / n_peaks")
        if ladder_energies(self)[-1] <= 0:
            raise DomainError("lowest ladder energy is not positive")

    @classmethod
    def from_debye_waller(cls, e_zpl, lvm_quantum, anharmonicity, debye_waller_fraction,
                          gamma_zpl, gamma_vib, n_peaks=4):
        return cls(e_zpl, lvm_quantum, anharmonicity, huang_rhys_from_dw(debye_waller_fraction),
                   gamma_zpl, gamma_vib, n_peaks)


@dataclass(frozen=True)
class TemperatureModel:
    """ZPL width ``alpha*T^3`` (meV) and shift ``a*T^4 + b*T^2`` (nm).

    ``fwhm_offset`` is an optional temperature independent width (meV), e.g.
    spectrometer resolution. It is zero unless set explicitly.
    """

    alpha: float = 0.0
    a: float = 0.0
    b: float = 0.0
    lambda0: float = 0.0
    fwhm_offset: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise DomainError("alpha must be non-negative")
        if self.fwhm_offset < 0:
            raise DomainError("fwhm_offset must be non-negative")

    @classmethod
    def calibrated(cls, fwhm_mev, temperature, **kwargs):
        """Model whose pure T^3 ZPL width equals ``fwhm_mev`` at ``temperature``."""
        return cls(alpha=fwhm_mev / temperature ** 3, **kwargs)

    def zpl_fwhm(self, T):
        return self.alpha * _check_temperature(T) ** 3 + self.fwhm_offset


@dataclass(frozen=True)
class ModeDisplacement:
    mode_energy: float                  # meV
    mass_weighted_displacement: float   # amu^0.5 * angstrom

    def __post_init__(self):
        if not self.mode_energy > 0:
            raise DomainError("mode_energy must be positive")


def _check_temperature(T):
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise DomainError("temperature must be non-negative")
    return T if T.ndim else float(T)


def fc_weight(s_total, n):
    """Poisson Franck-Condon weight exp(-S) S^n / n!."""
    n_arr = np.asarray(n)
    if s_total < 0:
        raise DomainError("Huang-Rhys factor must be non-negative")
    if np.any(n_arr < 0) or np.any(n_arr != np.floor(n_arr)):
        raise DomainError("level index must be a non-negative integer")
    n_f = n_arr.astype(float)
    if s_total == 0:
        w = np.where(n_f == 0, 1.0, 0.0)
    else:
        w = np.exp(-s_total + n_f * math.log(s_total) - gammaln(n_f + 1.0))
    return float(w) if w.ndim == 0 else w


def debye_waller(s_total):
    if s_total < 0:
        raise DomainError("Huang-Rhys factor must be non-negative")
    return math.exp(-s_total)


def huang_rhys_from_dw(dw):
    if not 0 < dw <= 1:
        raise DomainError("Debye-Waller fraction must lie in (0, 1]")
    return -math.log(dw)


def huang_rhys_from_ladder_fraction(zpl_fraction, n_peaks):
    """Huang-Rhys factor whose first ``n_peaks`` weights give this ZPL share.

    Inverts w_0 / sum_{n<N} w_n, the ZPL fraction seen when only ``n_peaks``
    lines of the progression are observed. Equals ``huang_rhys_from_dw`` as
    ``n_peaks`` grows.
    """
    if not 0 < zpl_fraction <= 1:
        raise DomainError("ZPL fraction must lie in (0, 1]")
    if n_peaks < 2 or zpl_fraction == 1:
        return huang_rhys_from_dw(zpl_fraction) if n_peaks >= 2 else 0.0
    # w_0 / sum = 1 / sum_{n<N} S^n/n!, a polynomial in S increasing from 1
    target = 1.0 / zpl_fraction
    coeffs = [1.0 / math.factorial(k) for k in range(n_peaks)]
    poly = np.polynomial.Polynomial(coeffs) - target
    roots = [r.real for r in poly.roots() if abs(r.imag) < 1e-9 and r.real > 0]
    if not roots:
        raise DomainError("no Huang-Rhys factor reproduces this fraction")
    return float(min(roots))


def ladder_energies(params):
    n = np.arange(params.n_peaks)
    return (params.e_zpl - 1e-3 * n * params.lvm_quantum
            + 1e-3 * params.anharmonicity * n * (n - 1) / 2.0)


def peak_energy(params, n):
    """Energy (eV) of the n-th ladder line; spacings shrink by the anharmonicity."""
    if int(n) != n or not 0 <= n < params.n_peaks:
        raise DomainError(f"level {n} outside 0..{params.n_peaks - 1}")
    return float(ladder_energies(params)[int(n)])


def peak_fwhm(params, temp_model, T, n):
    """FWHM (meV) of line n: ZPL width plus n vibrational decay widths.

    With ``temp_model=None`` the ZPL width is ``params.gamma_zpl``; otherwise
    it is the temperature model's alpha*T^3 (+ optional offset).
    """
    T = _check_temperature(T)
    if int(n) != n or n < 0:
        raise DomainError("level index must be a non-negative integer")
    if temp_model is None:
        base = params.gamma_zpl
    else:
        base = temp_model.zpl_fwhm(T)
    return base + n * params.gamma_vib


def zpl_shift(temp_model, T):
    T = _check_temperature(T)
    return temp_model.a * T ** 4 + temp_model.b * T ** 2


def shift_slope(temp_model, T):
    T = _check_temperature(T)
    return 4.0 * temp_model.a * T ** 3 + 2.0 * temp_model.b * T


def lorentzian(x, center, fwhm, area):
    """Area-normalised Lorentzian."""
    hw = 0.5 * fwhm
    return area * hw / np.pi / ((x - center) ** 2 + hw ** 2)


def _captured_fraction(lo, hi, center, fwhm):
    hw = 0.5 * fwhm
    return (np.arctan((hi - center) / hw) - np.arctan((lo - center) / hw)) / np.pi


def line_list(params, temp_model=None, T=300.0, axis_kind="wavelength", apply_shift=False):
    """Centres, FWHMs and Franck-Condon weights of all lines in axis units."""
    energies = ladder_energies(params)
    if apply_shift and temp_model is not None:
        lam0 = HC_EV_NM / params.e_zpl
        shifted = HC_EV_NM / (lam0 + zpl_shift(temp_model, T))
        energies = energies + (shifted - params.e_zpl)
    fwhm_mev = np.array([peak_fwhm(params, temp_model, T, n) for n in range(params.n_peaks)])
    weights = fc_weight(params.s_total, np.arange(params.n_peaks))
    if axis_kind == "wavelength":
        centers = HC_EV_NM / energies
        widths = width_mev_to_nm(fwhm_mev, centers)
    elif axis_kind == "energy":
        centers = energies
        widths = 1e-3 * fwhm_mev
    else:
        raise DomainError(f"unknown axis kind {axis_kind!r}")
    return centers, widths, np.atleast_1d(weights)


def synthesize_spectrum(params, temp_model=None, T=300.0, grid=None, noise_seed=None,
                        photon_budget=1e6, axis_kind="wavelength", peak_counts=None,
                        tail_cutoff=TAIL_CUTOFF_FWHM, apply_shift=False, background=0.0):
    """Render the vibronic ladder on ``grid``.

    Each line is a Lorentzian whose area is ``photon_budget * fc_weight(S, n)``
    counts, so the rendered lines carry the Franck-Condon share of the budget
    (all of it for S = 0 or enough lines). Intensities are counts per sample:
    the line density times the local sample spacing.

    Each line is evaluated only within ``tail_cutoff`` FWHM of its centre and
    renormalised by the Lorentzian fraction captured inside that window and
    the grid, which keeps the integrated counts exact despite truncation.
    ``tail_cutoff=None`` disables the truncation (no renormalisation either).

    ``peak_counts``, when given, rescales the budget so the noise-free maximum
    equals this value; Poisson noise then has relative size
    ``1/sqrt(peak_counts)`` at the strongest line. Noise is drawn only when
    ``noise_seed`` is not None.
    """
    if grid is None:
        raise DomainError("a sampling grid is required")
    x = np.asarray(grid, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DomainError("grid must be a 1-D array")
    steps = np.diff(x)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise DomainError("grid must be strictly monotone")
    centers, widths, weights = line_list(params, temp_model, T, axis_kind, apply_shift)
    lo, hi = float(x.min()), float(x.max())
    missing = [(n, float(ladder_energies(params)[n])) for n, c in enumerate(centers)
               if not lo <= c <= hi]
    if missing:
        raise GridCoverageError(missing)

    spacing = np.abs(np.gradient(x))
    density = np.zeros_like(x)
    for c, w, wt in zip(centers, widths, weights):
        if wt == 0:
            continue
        if tail_cutoff is None:
            density += lorentzian(x, c, w, wt)
            continue
        win_lo, win_hi = max(lo, c - tail_cutoff * w), min(hi, c + tail_cutoff * w)
        mask = (x >= win_lo) & (x <= win_hi)
        frac = _captured_fraction(win_lo, win_hi, c, w)
        density[mask] += lorentzian(x[mask], c, w, wt / frac)
    counts = density * spacing
    if peak_counts is not None:
        photon_budget = peak_counts / counts.max()
    counts = photon_budget * counts + background
    meta = {"photon_budget": float(photon_budget), "tail_cutoff_fwhm": tail_cutoff}
    if noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        counts = rng.poisson(counts).astype(float)
        meta["noise_seed"] = int(noise_seed)
    return Spectrum(x, counts, axis_kind, float(T), meta)


def partial_huang_rhys(modes):
    """Per-mode Huang-Rhys factors S_k = omega_k q_k^2 / (2 hbar) and their sum.

    Mode energies in meV and mass-weighted displacements in amu^0.5*angstrom.
    """
    energies = np.array([m.mode_energy for m in modes], dtype=float)
    q = np.array([m.mass_weighted_displacement for m in modes], dtype=float)
    if np.any(energies <= 0):
        raise DomainError("mode energies must be positive")
    s = HUANG_RHYS_PER_MEV_AMU_A2 * energies * q ** 2
    return s, float(s.sum())


def displacement_for_huang_rhys(s, mode_energy):
    """Mass-weighted displacement giving factor ``s`` in a mode of this energy (meV)."""
    if mode_energy <= 0 or s < 0:
        raise DomainError("need positive mode energy and non-negative S")
    return math.sqrt(s / (HUANG_RHYS_PER_MEV_AMU_A2 * mode_energy))


def project_displacement(frequencies_mev, eigenvectors, displacement, zero_tol=1e-9):
    """Project a mass-weighted displacement onto orthonormal phonon modes.

    Returns ModeDisplacement entries for all modes of non-zero energy.
    """
    coeffs = np.asarray(eigenvectors).T @ np.asarray(displacement, dtype=float)
    return [ModeDisplacement(float(f), float(q))
            for f, q in zip(frequencies_mev, coeffs) if f > zero_tol]


def radiative_rate(dipole_moment, transition_energy, medium_factor=1.0):
    """Spontaneous emission rate (1/s) of a dipole in a medium.

    Gamma = medium_factor * omega^3 mu^2 / (3 pi eps0 hbar c^3); the medium
    factor absorbs refractive index and local-field corrections.
    """
    if not (dipole_moment > 0 and transition_energy > 0 and medium_factor > 0):
        raise DomainError("dipole moment, energy and medium factor must be positive")
    omega = transition_energy * sc.e / sc.hbar
    mu = dipole_moment * DEBYE_CM
    return medium_factor * omega ** 3 * mu ** 2 / (3 * np.pi * sc.epsilon_0 * sc.hbar * sc.c ** 3)


def radiative_lifetime(dipole_moment, transition_energy, medium_factor=1.0):
    """Radiative lifetime in ns (dipole in debye, energy in eV)."""
    return 1e9 / radiative_rate(dipole_moment, transition_energy, medium_factor)


def lifetime_from_rate(rate):
    return 1e9 / rate


def dipole_for_lifetime(lifetime_ns, transition_energy, medium_factor=1.0):
    """Dipole moment (debye) that yields the given radiative lifetime."""
    if lifetime_ns <= 0:
        raise DomainError("lifetime must be positive")
    unit_rate = radiative_rate(1.0, transition_energy, medium_factor)
    return math.sqrt(1e9 / lifetime_ns / unit_rate)


def strain_zpl_shift(susceptibility, strain):
    """Linear ZPL shift (eV) for a strain (dimensionless)."""
    return susceptibility * strain
