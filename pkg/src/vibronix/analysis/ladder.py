"""From fitted lines to vibronic-ladder parameters of one emitter."""

from dataclasses import MISSING, asdict, dataclass, field, fields

import numpy as np

from ..constants import DIAMOND_OPTICAL_PHONON_MEV, HC_EV_NM
from ..errors import NotALadderError
from ..vibronic import VibronicParams, huang_rhys_from_ladder_fraction
from .peakfit import MultiLorentzianFit

#: Consecutive spacings must stay within this fraction of their mean.
LADDER_TOLERANCE = 0.15


@dataclass
class EmitterRecord:
    zpl_energy: float                 # eV
    zpl_fwhm_mev: float
    zpl_fwhm_nm: float
    lvm_quantum: float                # meV, mean consecutive spacing
    anharmonicity: float              # meV per level
    debye_waller: float               # ZPL share of the fitted ladder area
    gamma_vib: float                  # meV
    n_peaks: int = 4
    zpl_energy_err: float = 0.0
    lvm_quantum_err: float = 0.0
    anharmonicity_err: float = 0.0
    debye_waller_err: float = 0.0
    gamma_vib_err: float = 0.0
    spacings: list = field(default_factory=list)   # meV, from the ZPL downwards
    g2_0: float | None = None
    raman_shift: float | None = None  # cm^-1
    source: str | None = None

    @property
    def zpl_wavelength(self):
        return HC_EV_NM / self.zpl_energy

    def to_dict(self):
        d = asdict(self)
        d["zpl_wavelength"] = self.zpl_wavelength
        return d

    @classmethod
    def from_dict(cls, d):
        """Inverse of :meth:`to_dict`. Only ``zpl_energy`` is mandatory; other
        missing measurements become None."""
        if "zpl_energy" not in d:
            raise TypeError("record lacks zpl_energy")
        kw = {f.name: None for f in fields(cls) if f.default is MISSING
              and f.default_factory is MISSING}
        kw.update({k: v for k, v in d.items() if k in kw or k in {f.name for f in fields(cls)}})
        return cls(**kw)


@dataclass
class FingerprintResult:
    is_il1: bool
    reasons: list

    def __bool__(self):
        return self.is_il1


def _moments(peaks):
    """Energies (eV), widths (meV), areas and their joint covariance."""
    if isinstance(peaks, MultiLorentzianFit):
        plist, cov = peaks.peaks, peaks.covariance[:-1, :-1]
        axis_kind = peaks.axis_kind
    else:
        plist = list(peaks)
        cov = np.zeros((3 * len(plist), 3 * len(plist)))
        for i, pk in enumerate(plist):
            cov[3 * i:3 * i + 3, 3 * i:3 * i + 3] = pk.covariance
        axis_kind = "wavelength"
    k = len(plist)
    values = np.empty(3 * k)
    D = np.zeros((3 * k, 3 * k))
    for i, pk in enumerate(plist):
        values[i], values[k + i], values[2 * k + i] = pk.center_ev, pk.fwhm_mev, pk.area
        if axis_kind == "wavelength":
            c, w = pk.center_nm, pk.fwhm_nm
            D[i, 3 * i] = -HC_EV_NM / c ** 2
            D[k + i, 3 * i] = -2.0 * pk.fwhm_mev / c
            D[k + i, 3 * i + 1] = pk.fwhm_mev / w
        else:
            D[i, 3 * i] = 1.0
            D[k + i, 3 * i + 1] = 1e3
        D[2 * k + i, 3 * i + 2] = 1.0
    return plist, values, D @ cov @ D.T


def extract_ladder(peaks, source=None, tolerance=LADDER_TOLERANCE):
    """Reduce fitted ladder lines to an :class:`EmitterRecord`.

    With spacings s_n = E_{n-1} - E_n, lvm_quantum is their mean and the
    anharmonicity is the mean decrement s_n - s_{n+1}. gamma_vib is the least-squares
    slope of FWHM against n and the Debye-Waller fraction is the ZPL share
    of the summed areas. Uncertainties are propagated linearly from the fit
    covariance (including cross terms when a full fit is given).
    """
    plist, values, cov = _moments(peaks)
    k = len(plist)
    if k < 3:
        raise NotALadderError(f"a ladder needs at least 3 lines, got {k}")
    order = np.argsort(values[:k])[::-1]
    perm = np.r_[order, k + order, 2 * k + order]
    values, cov = values[perm], cov[np.ix_(perm, perm)]
    plist = [plist[i] for i in order]
    energies, widths, areas = values[:k], values[k:2 * k], values[2 * k:]

    # spacings in meV as a linear map of energies
    S = np.zeros((k - 1, 3 * k))
    for j in range(k - 1):
        S[j, j], S[j, j + 1] = 1e3, -1e3
    spacings = S @ values
    mean = spacings.mean()
    if mean <= 0 or np.any(np.abs(spacings - mean) > tolerance * mean):
        raise NotALadderError(
            f"spacings {np.round(spacings, 2).tolist()} meV deviate more than "
            f"{tolerance:.0%} from their mean")

    L = np.zeros((2, k - 1))
    L[0] = 1.0 / (k - 1)
    if k > 2:
        L[1, 0], L[1, -1] = 1.0 / (k - 2), -1.0 / (k - 2)
    ladder = L @ S                      # (lvm_quantum, anharmonicity)
    lvm, anh = ladder @ values
    lvm_cov = ladder @ cov @ ladder.T

    n = np.arange(k, dtype=float)
    G = np.zeros(3 * k)
    G[k:2 * k] = (n - n.mean()) / np.sum((n - n.mean()) ** 2)
    gamma_vib = float(G @ values)
    total = areas.sum()
    dw = areas[0] / total
    gd = np.zeros(3 * k)
    gd[2 * k:] = -areas[0] / total ** 2
    gd[2 * k] += 1.0 / total

    def err(v):
        return float(np.sqrt(max(v, 0.0)))

    return EmitterRecord(
        zpl_energy=float(energies[0]),
        zpl_fwhm_mev=float(widths[0]),
        zpl_fwhm_nm=float(plist[0].fwhm_nm),
        lvm_quantum=float(lvm),
        anharmonicity=float(anh),
        debye_waller=float(dw),
        gamma_vib=gamma_vib,
        n_peaks=k,
        zpl_energy_err=err(cov[0, 0]),
        lvm_quantum_err=err(lvm_cov[0, 0]),
        anharmonicity_err=err(lvm_cov[1, 1]),
        debye_waller_err=err(gd @ cov @ gd),
        gamma_vib_err=err(G @ cov @ G),
        spacings=[float(s) for s in spacings],
        source=source,
    )


def ladder_to_params(record):
    """Vibronic model parameters implied by a record.

    The Huang-Rhys factor is solved from the ZPL share of the observed lines,
    accounting for the weight that falls beyond the last observed line. The
    mean spacing is converted back to the first-level quantum,
    mean + anharmonicity * (n_peaks - 2) / 2.
    """
    s = huang_rhys_from_ladder_fraction(record.debye_waller, record.n_peaks)
    quantum = record.lvm_quantum + record.anharmonicity * (record.n_peaks - 2) / 2.0
    return VibronicParams(record.zpl_energy, quantum, record.anharmonicity, s,
                          record.zpl_fwhm_mev, record.gamma_vib, record.n_peaks)


def classify_fingerprint(record, n_peaks=4, lvm_range=(DIAMOND_OPTICAL_PHONON_MEV, 210.0),
                         zpl_range_nm=(544.0, 560.0), max_zpl_fwhm_nm=0.6, max_g2=0.5):
    """Decide whether a record carries the IL1 four-line signature.

    Measurements missing from the record (None) are reported as reasons.
    """
    reasons = [f"{name}: missing" for name in ("lvm_quantum", "zpl_fwhm_nm")
               if getattr(record, name) is None]
    if reasons:
        return FingerprintResult(False, reasons)
    if record.n_peaks != n_peaks:
        reasons.append(f"peak count: found {record.n_peaks}, expected {n_peaks}")
    if not lvm_range[0] <= record.lvm_quantum <= lvm_range[1]:
        reasons.append(f"lvm quantum: {record.lvm_quantum:.1f} meV outside "
                       f"[{lvm_range[0]:g}, {lvm_range[1]:g}] meV")
    lam = record.zpl_wavelength
    if not zpl_range_nm[0] <= lam <= zpl_range_nm[1]:
        reasons.append(f"zpl wavelength: {lam:.2f} nm outside "
                       f"[{zpl_range_nm[0]:g}, {zpl_range_nm[1]:g}] nm")
    if record.zpl_fwhm_nm > max_zpl_fwhm_nm:
        reasons.append(f"linewidth: {record.zpl_fwhm_nm:.3f} nm above {max_zpl_fwhm_nm:g} nm")
    if record.g2_0 is not None and not record.g2_0 < max_g2:
        reasons.append(f"antibunching: g2(0) = {record.g2_0:.2f} not below {max_g2:g}")
    return FingerprintResult(not reasons, reasons)
