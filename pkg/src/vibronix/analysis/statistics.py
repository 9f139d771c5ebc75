"""Ensemble statistics, regressions, Raman strain and thermometry figures."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..constants import (DIAMOND_RAMAN_CM, DIAMOND_YOUNG_GPA, HC_EV_NM,
                         RAMAN_STRESS_GPA_PER_CM)
from ..errors import DomainError

RAMAN_WINDOW_CM = (1300.0, 1360.0)

ENSEMBLE_FIELDS = ("zpl_energy", "zpl_wavelength", "zpl_fwhm_nm", "zpl_fwhm_mev", "lvm_quantum",
                   "anharmonicity", "debye_waller", "gamma_vib", "g2_0", "raman_shift")


@dataclass
class RamanStrain:
    raman_shift: float     # cm^-1
    stress: float          # GPa, negative = tensile
    strain: float          # magnitude, dimensionless
    sense: str             # "tensile", "compressive" or "none"
    warning: str | None = None


def raman_strain(raman_shift, reference=DIAMOND_RAMAN_CM):
    """Stress and strain from the diamond Raman line position.

    stress = 0.34 GPa/cm^-1 * (nu - 1332.5 cm^-1), strain = |stress| / 1100 GPa.
    A downshift (negative stress) is reported as tensile.
    """
    stress = RAMAN_STRESS_GPA_PER_CM * (raman_shift - reference)
    strain = abs(stress) / DIAMOND_YOUNG_GPA
    sense = "none" if stress == 0 else ("tensile" if stress < 0 else "compressive")
    warning = None
    if not RAMAN_WINDOW_CM[0] <= raman_shift <= RAMAN_WINDOW_CM[1]:
        warning = (f"Raman shift {raman_shift} cm^-1 outside the "
                   f"{RAMAN_WINDOW_CM[0]:g}-{RAMAN_WINDOW_CM[1]:g} cm^-1 sanity window")
        warnings.warn(warning, stacklevel=2)
    return RamanStrain(float(raman_shift), float(stress), float(strain), sense, warning)


def strain_range(mean_shift, max_fwhm, reference=DIAMOND_RAMAN_CM):
    """Lower and upper strain bounds from Raman statistics.

    The lower bound comes from the mean line shift, the upper bound from
    treating the largest line FWHM (cm^-1) as a shift excursion.
    """
    lower = raman_strain(mean_shift, reference).strain
    upper = raman_strain(reference - max_fwhm, reference).strain
    return lower, upper


@dataclass
class RegressionResult:
    slope: float
    intercept: float
    slope_err: float
    intercept_err: float
    r2: float
    n: int
    grid: np.ndarray
    fit: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    slope_ci: tuple
    level: float
    simultaneous: bool

    @property
    def excludes_zero_slope(self):
        return self.slope_ci[0] > 0 or self.slope_ci[1] < 0

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "slope_err": self.slope_err,
                "intercept_err": self.intercept_err, "r2": self.r2, "n": self.n,
                "slope_ci": list(self.slope_ci), "level": self.level,
                "excludes_zero_slope": bool(self.excludes_zero_slope)}


def regress_with_ci(x, y, grid=None, level=0.95, simultaneous=False, n_grid=101):
    """Ordinary least squares line with a confidence band for the mean response.

    The band is yhat +- t * s * sqrt(1/n + (x - xbar)^2 / Sxx) with Student t
    on n - 2 degrees of freedom. ``simultaneous=True`` replaces t by the
    Working-Hotelling factor sqrt(2 F(2, n-2)), which covers the whole line
    at once with the stated probability.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-D and of equal length")
    n = x.size
    if n < 3:
        raise DomainError("regression needs at least three points")
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    if sxx <= 1e-300 * max(1.0, float(np.sum(x ** 2))) or np.ptp(x) == 0:
        raise DomainError("x values are all equal")
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    sse = float(resid @ resid)
    s = math.sqrt(sse / (n - 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    slope_err = s / math.sqrt(sxx)
    intercept_err = s * math.sqrt(1.0 / n + xbar ** 2 / sxx)
    tcrit = stats.t.ppf(0.5 + level / 2, n - 2)
    if simultaneous:
        factor = math.sqrt(2 * stats.f.ppf(level, 2, n - 2))
    else:
        factor = tcrit
    if grid is None:
        grid = np.linspace(x.min(), x.max(), n_grid)
    grid = np.asarray(grid, dtype=float)
    fit = intercept + slope * grid
    half = factor * s * np.sqrt(1.0 / n + (grid - xbar) ** 2 / sxx)
    slope_ci = (slope - tcrit * slope_err, slope + tcrit * slope_err)
    return RegressionResult(slope, intercept, slope_err, intercept_err, r2, n, grid, fit,
                            fit - half, fit + half, slope_ci, level, simultaneous)


def _field(record, name):
    if name == "zpl_wavelength":
        return HC_EV_NM / record.zpl_energy
    return getattr(record, name, None)


def ensemble_stats(records, zpl_range_nm=(544.0, 560.0)):
    """Mean, sample standard deviation (ddof=1; 0 for one record), min and max per field.

    Optional fields are summarised over the records that carry them.
    """
    records = list(records)
    if not records:
        raise DomainError("no records to summarise")
    summary = {"count": len(records), "fields": {}}
    for name in ENSEMBLE_FIELDS:
        vals = np.array([v for v in (_field(r, name) for r in records) if v is not None], dtype=float)
        if vals.size == 0:
            continue
        summary["fields"][name] = {
            "n": int(vals.size),
            "mean": float(vals.mean()),
            "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
            "min": float(vals.min()),
            "max": float(vals.max()),
        }
    lam = np.array([_field(r, "zpl_wavelength") for r in records])
    outside = [i for i, v in enumerate(lam) if not zpl_range_nm[0] <= v <= zpl_range_nm[1]]
    summary["zpl_range_nm"] = list(zpl_range_nm)
    summary["zpl_outside_range"] = outside
    return summary


def thermometry_sensitivity(zpl_fwhm, dlambda_dT, photon_rate):
    """Shot-noise limited temperature noise floor (K / sqrt(Hz)).

    A line centroid of width ``zpl_fwhm`` (nm) measured with ``photon_rate``
    detected photons per second is located to about fwhm / sqrt(rate) per
    sqrt(Hz); dividing by the shift slope (nm/K) converts it to temperature.
    """
    if not (zpl_fwhm > 0 and dlambda_dT > 0 and photon_rate > 0):
        raise DomainError("all inputs must be positive")
    return zpl_fwhm / (dlambda_dT * math.sqrt(photon_rate))
