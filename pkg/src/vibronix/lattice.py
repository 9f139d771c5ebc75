"""Toy harmonic lattices: mass-spring supercells, normal modes and mode localization.

Positions are in angstrom, masses in amu and spring stiffnesses in eV/A^2,
so square roots of dynamical-matrix eigenvalues convert to meV through
:data:`SQRT_EIG_TO_MEV`. Springs are central pair springs only.
"""

import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .constants import (CARBON_MASS_AMU, DIAMOND_LATTICE_CONSTANT_A,
                        DIAMOND_OPTICAL_PHONON_MEV, SQRT_EIG_TO_MEV)
from .errors import DomainError, LatticeError

SCHEMA = "vibronix/lattice/1"
CHAIN_SPACING_A = 1.54
#: Half length of the [001] dumbbell of a split interstitial (A).
DUMBBELL_HALF_A = 0.63
ZERO_TOLERANCE = 1e-6

_FCC = np.array([[0, 0, 0], [0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]])
DIAMOND_BASIS = np.vstack([_FCC, _FCC + 0.25])


@dataclass
class LatticeModel:
    """Atoms joined by central springs.

    ``images`` holds, for each spring, the integer cell translation applied
    to atom j (all zeros for free boundaries). ``cell`` is a (dim, dim)
    matrix of cell vectors for periodic boundaries.
    """

    positions: np.ndarray
    masses: np.ndarray
    springs: np.ndarray
    stiffness: np.ndarray
    tags: list = None
    boundary: str = "free"
    cell: np.ndarray | None = None
    images: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim == 1:
            self.positions = self.positions[:, None]
        self.masses = np.asarray(self.masses, dtype=float)
        self.springs = np.asarray(self.springs, dtype=np.int64).reshape(-1, 2)
        self.stiffness = np.asarray(self.stiffness, dtype=float).reshape(-1)
        n, dim = self.positions.shape
        if self.tags is None:
            self.tags = ["bulk"] * n
        if self.images is None:
            self.images = np.zeros((len(self.springs), dim), dtype=np.int64)
        self.images = np.asarray(self.images, dtype=np.int64).reshape(-1, dim)
        if self.cell is not None:
            self.cell = np.asarray(self.cell, dtype=float).reshape(dim, dim)
        self.validate()

    @property
    def dim(self):
        return self.positions.shape[1]

    @property
    def n_atoms(self):
        return self.positions.shape[0]

    def validate(self):
        n, dim = self.positions.shape
        if dim not in (1, 3):
            raise LatticeError("positions must be 1-D or 3-D")
        if self.masses.shape != (n,) or len(self.tags) != n:
            raise LatticeError("masses and tags must have one entry per atom")
        if np.any(self.masses <= 0):
            raise LatticeError("masses must be positive")
        if self.stiffness.shape != (len(self.springs),) or self.images.shape != (len(self.springs), dim):
            raise LatticeError("stiffness and images must have one entry per spring")
        if np.any(self.stiffness <= 0):
            raise LatticeError("spring stiffnesses must be positive")
        if self.springs.size and (self.springs.min() < 0 or self.springs.max() >= n):
            raise LatticeError("spring references a missing atom")
        if self.boundary not in ("free", "periodic"):
            raise LatticeError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "periodic" and self.cell is None:
            raise LatticeError("periodic boundaries need cell vectors")
        if self.boundary == "free" and np.any(self.images):
            raise LatticeError("free boundaries cannot use periodic images")
        i, j = self.springs.T
        if np.any((i == j) & ~self.images.any(axis=1)):
            raise LatticeError("spring connects an atom to itself")
        # canonical key: (min, max, image oriented from min to max)
        flip = i > j
        img = np.where(flip[:, None], -self.images, self.images)
        keys = np.column_stack([np.minimum(i, j), np.maximum(i, j), img])
        if len(np.unique(keys, axis=0)) != len(keys):
            raise LatticeError("duplicate springs")
        if n > 1:
            graph = coo_matrix((np.ones(len(i)), (i, j)), shape=(n, n))
            n_comp, _ = connected_components(graph, directed=False)
            if n_comp != 1:
                raise LatticeError(f"spring graph has {n_comp} disconnected parts")

    def bond_vectors(self):
        """Vectors from atom i to (image of) atom j for every spring."""
        i, j = self.springs.T
        d = self.positions[j] - self.positions[i]
        if self.boundary == "periodic":
            d = d + self.images @ self.cell
        return d

    def to_dict(self):
        return {
            "schema": SCHEMA,
            "dim": self.dim,
            "boundary": self.boundary,
            "cell": None if self.cell is None else self.cell.tolist(),
            "atoms": [{"position": p.tolist(), "mass": float(m), "tag": t}
                      for p, m, t in zip(self.positions, self.masses, self.tags)],
            "springs": [{"i": int(a), "j": int(b), "stiffness": float(k), "image": im.tolist()}
                        for (a, b), k, im in zip(self.springs, self.stiffness, self.images)],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("schema") != SCHEMA:
            raise LatticeError(f"unsupported lattice schema {data.get('schema')!r}")
        atoms, springs = data["atoms"], data["springs"]
        dim = data["dim"]
        return cls(
            positions=np.array([a["position"] for a in atoms], dtype=float).reshape(-1, dim),
            masses=[a["mass"] for a in atoms],
            springs=np.array([[s["i"], s["j"]] for s in springs], dtype=np.int64).reshape(-1, 2),
            stiffness=[s["stiffness"] for s in springs],
            tags=[a.get("tag", "bulk") for a in atoms],
            boundary=data["boundary"],
            cell=data.get("cell"),
            images=np.array([s.get("image", [0] * dim) for s in springs], dtype=np.int64).reshape(-1, dim),
            metadata=data.get("metadata", {}),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class PhononModes:
    frequencies: np.ndarray      # meV, ascending
    eigenvectors: np.ndarray     # columns, mass weighted and orthonormal
    ipr: np.ndarray
    band_max: float | None       # meV, bulk reference
    dim: int
    n_zero: int

    @property
    def n_atoms(self):
        return self.eigenvectors.shape[0] // self.dim

    def to_csv(self, path):
        data = np.column_stack([np.arange(self.frequencies.size), self.frequencies, self.ipr])
        np.savetxt(path, data, delimiter=",", header="mode,frequency_meV,ipr", comments="",
                   fmt=["%d", "%.10g", "%.10g"])


def dynamical_matrix(model):
    """Mass-weighted dynamical matrix in eV/(A^2 amu)."""
    n, dim = model.n_atoms, model.dim
    d = model.bond_vectors()
    length = np.linalg.norm(d, axis=1)
    if np.any(length == 0):
        raise LatticeError("spring of zero length")
    e = d / length[:, None]
    blocks = model.stiffness[:, None, None] * e[:, :, None] * e[:, None, :]
    phi = np.zeros((n, dim, n, dim))
    i, j = model.springs.T
    np.add.at(phi, (i, slice(None), i), blocks)
    np.add.at(phi, (j, slice(None), j), blocks)
    np.add.at(phi, (i, slice(None), j), -blocks)
    np.add.at(phi, (j, slice(None), i), -blocks)
    phi = phi.reshape(n * dim, n * dim)
    inv_sqrt_m = np.repeat(1.0 / np.sqrt(model.masses), dim)
    dm = phi * inv_sqrt_m[:, None] * inv_sqrt_m[None, :]
    return 0.5 * (dm + dm.T)


def ipr(eigenvector, dim=1, atol=1e-8):
    """Normalised participation ratio of a mass-weighted mode.

    p_i is the squared amplitude on atom i; the result (1 / sum p_i^2) / N is
    1 for a mode spread evenly over all atoms and 1/N for a single-atom mode.
    """
    v = np.asarray(eigenvector, dtype=float)
    if v.size % dim:
        raise DomainError("eigenvector length is not a multiple of the dimension")
    p = (v.reshape(-1, dim) ** 2).sum(axis=1)
    if abs(p.sum() - 1.0) > atol:
        raise DomainError(f"eigenvector is not normalised (norm^2 = {p.sum():.6g})")
    return float(1.0 / np.sum(p ** 2) / p.size)


def _ipr_all(vectors, dim):
    p = (vectors.reshape(-1, dim, vectors.shape[1]) ** 2).sum(axis=1)
    return 1.0 / np.sum(p ** 2, axis=0) / p.shape[0]


def solve_modes(model, band_max=None, zero_tolerance=ZERO_TOLERANCE):
    """Normal modes of a lattice model.

    Eigenvalues with magnitude below ``zero_tolerance`` times the largest
    one are rigid-body or floppy modes and are set to zero; a more negative
    eigenvalue means the structure is not at mechanical equilibrium and
    raises :class:`LatticeError`. ``band_max`` (meV) defaults to the value
    recorded by :func:`build_lattice`.
    """
    dm = dynamical_matrix(model)
    lam, vec = np.linalg.eigh(dm)
    tol = zero_tolerance * max(abs(lam).max(), 1e-300)
    if lam.min() < -tol:
        raise LatticeError(f"negative eigenvalue {lam.min():.4g}: geometry is not an equilibrium")
    zero = np.abs(lam) < tol
    lam = np.where(zero, 0.0, lam)
    freqs = np.sqrt(lam) * SQRT_EIG_TO_MEV
    # fix the sign convention so results are reproducible
    pivot = np.argmax(np.abs(vec), axis=0)
    vec = vec * np.sign(vec[pivot, np.arange(vec.shape[1])])
    if band_max is None:
        band_max = model.metadata.get("band_max")
    return PhononModes(freqs, vec, _ipr_all(vec, model.dim), band_max, model.dim, int(zero.sum()))


@dataclass(frozen=True)
class LocalMode:
    index: int
    frequency: float   # meV
    ipr: float


def classify_lvm(modes, band_max=None, ipr_threshold=0.1):
    """Localized vibrational modes: above the bulk band and with low IPR."""
    if band_max is None:
        band_max = modes.band_max
    if band_max is None or band_max <= 0:
        raise DomainError("band_max must be positive")
    idx = np.nonzero((modes.frequencies > band_max) & (modes.ipr < ipr_threshold))[0]
    return [LocalMode(int(i), float(modes.frequencies[i]), float(modes.ipr[i])) for i in idx]


def chain_band_max(stiffness, mass):
    """Top of the monatomic chain band, 2 sqrt(K/M), in meV."""
    return 2.0 * math.sqrt(stiffness / mass) * SQRT_EIG_TO_MEV


def chain_local_mode_frequency(mass_ratio):
    """Local mode of a light impurity in a monatomic chain, in units of the band top.

    ``mass_ratio`` is (M - m) / M; the exact result is 1 / sqrt(1 - eps^2).
    """
    if not 0 < mass_ratio < 1:
        raise DomainError("mass ratio must lie in (0, 1)")
    return 1.0 / math.sqrt(1.0 - mass_ratio ** 2)


def nanoparticle_phonon_cutoff(sound_velocity, size):
    """Lowest confined acoustic frequency v_s / size in GHz (v in m/s, size in nm).

    ``size`` is used as given; radius and diameter conventions differ by 2.
    """
    if sound_velocity <= 0 or size <= 0:
        raise DomainError("sound velocity and size must be positive")
    return sound_velocity / size


# -- builders -----------------------------------------------------------------

def _chain(n, stiffness, mass, boundary):
    pos = (np.arange(n) * CHAIN_SPACING_A)[:, None]
    springs = [[i, i + 1] for i in range(n - 1)]
    images = [[0]] * (n - 1)
    cell = None
    if boundary == "periodic":
        springs.append([n - 1, 0])
        images.append([1])
        cell = [[n * CHAIN_SPACING_A]]
    m = len(springs)
    return LatticeModel(pos, np.full(n, mass), np.array(springs).reshape(-1, 2), np.full(m, stiffness),
                        boundary=boundary, cell=cell, images=np.array(images).reshape(-1, 1))


def _diamond_sites(cells):
    a = DIAMOND_LATTICE_CONSTANT_A
    grid = np.stack(np.meshgrid(*[np.arange(c) for c in cells], indexing="ij"), -1).reshape(-1, 3)
    frac = (grid[:, None, :] + DIAMOND_BASIS[None]).reshape(-1, 3)
    return frac * a


def _neighbour_springs(pos, cutoff, box=None):
    """Pairs closer than ``cutoff`` with minimum-image offsets (in cells)."""
    if box is None:
        tree = cKDTree(pos)
        pairs = np.array(sorted(tree.query_pairs(cutoff)), dtype=np.int64).reshape(-1, 2)
        return pairs, np.zeros((len(pairs), 3), dtype=np.int64)
    wrapped = np.mod(pos, box)
    tree = cKDTree(wrapped, boxsize=box)
    pairs = np.array(sorted(tree.query_pairs(cutoff)), dtype=np.int64).reshape(-1, 2)
    d = pos[pairs[:, 1]] - pos[pairs[:, 0]]
    images = -np.round(d / box).astype(np.int64)
    return pairs, images


def _centre_site(pos, box):
    centre = 0.5 * np.asarray(box) - 0.01
    return int(np.argmin(np.linalg.norm(pos - centre, axis=1)))


def _dumbbell(site):
    off = np.array([0.0, 0.0, DUMBBELL_HALF_A])
    return [site + off, site - off]


def _diamond(cells, stiffness, mass, boundary, defect, scale):
    a = DIAMOND_LATTICE_CONSTANT_A
    box = np.array(cells, dtype=float) * a
    pos = _diamond_sites(cells)
    tags = ["bulk"] * len(pos)
    nn = a * math.sqrt(3) / 4
    cutoff = 1.2 * nn
    centre = _centre_site(pos, box)
    defect_atoms = []
    if defect == "vacancy":
        vac = pos[centre]
        pos = np.delete(pos, centre, axis=0)
        tags = ["bulk"] * len(pos)
        near = np.nonzero(np.linalg.norm(pos - vac, axis=1) < cutoff)[0]
        for k in near:
            tags[k] = "vacancy_neighbour"
        defect_atoms = list(near)
    elif defect in ("split_interstitial", "triple_interstitial"):
        sites = [pos[centre]]
        if defect == "triple_interstitial":
            step = np.array([a / 2, a / 2, 0.0])
            sites = [pos[centre] - step, pos[centre], pos[centre] + step]
        remove = [int(np.argmin(np.linalg.norm(pos - s, axis=1))) for s in sites]
        pos = np.delete(pos, remove, axis=0)
        new = np.array([p for s in sites for p in _dumbbell(s)])
        defect_atoms = list(range(len(pos), len(pos) + len(new)))
        pos = np.vstack([pos, new])
        tags = ["bulk"] * (len(pos) - len(new)) + ["interstitial"] * len(new)
    elif defect != "none":
        raise LatticeError(f"unknown defect {defect!r}")
    pairs, images = _neighbour_springs(pos, cutoff, box if boundary == "periodic" else None)
    k = np.full(len(pairs), float(stiffness))
    if defect_atoms:
        touched = np.isin(pairs, defect_atoms).any(axis=1)
        k[touched] *= scale
    cell = np.diag(box) if boundary == "periodic" else None
    return LatticeModel(pos, np.full(len(pos), mass), pairs, k, tags=tags, boundary=boundary,
                        cell=cell, images=images)


@functools.lru_cache(maxsize=None)
def _diamond_unit_band_max():
    """Band top (meV) of the defect-free periodic lattice with K = 1 eV/A^2, carbon mass."""
    model = _diamond((2, 2, 2), 1.0, CARBON_MASS_AMU, "periodic", "none", 1.0)
    return float(solve_modes(model).frequencies.max())


def diamond_stiffness(band_max=DIAMOND_OPTICAL_PHONON_MEV, mass=CARBON_MASS_AMU):
    """Nearest-neighbour stiffness (eV/A^2) that puts the bulk band top at ``band_max``."""
    unit = _diamond_unit_band_max() * math.sqrt(CARBON_MASS_AMU / mass)
    return (band_max / unit) ** 2


def build_lattice(kind, size, defect="none", defect_stiffness_scale=1.0, stiffness=None,
                  mass=CARBON_MASS_AMU, boundary="free", impurity_mass=None):
    """Construct a chain or diamond-cubic supercell with an optional point defect.

    ``size`` is the number of atoms for a chain and the number of cubic
    cells per axis (int or 3-tuple) for diamond. Defects sit near the
    supercell centre: ``vacancy`` removes an atom, ``split_interstitial``
    replaces one by a [001] dumbbell, ``triple_interstitial`` places three
    dumbbells on neighbouring sites along [110]. Springs touching defect
    atoms are multiplied by ``defect_stiffness_scale`` (local compression
    modelled as stiffening). ``impurity_mass`` replaces the mass of the
    centre atom. By default diamond springs are calibrated so the bulk band
    top is the diamond optical phonon energy.
    """
    if defect_stiffness_scale <= 0:
        raise DomainError("defect_stiffness_scale must be positive")
    if boundary not in ("free", "periodic"):
        raise DomainError(f"unknown boundary {boundary!r}")
    if kind == "chain":
        n = int(size)
        if n < 2:
            raise DomainError("a chain needs at least two atoms")
        if defect != "none":
            raise LatticeError(f"defect {defect!r} is not available for a chain")
        k = 1.0 if stiffness is None else float(stiffness)
        model = _chain(n, k, mass, boundary)
        model.metadata["band_max"] = chain_band_max(k, mass)
    elif kind == "diamond_cubic":
        cells = (int(size),) * 3 if np.ndim(size) == 0 else tuple(int(c) for c in size)
        if len(cells) != 3 or min(cells) < 2:
            raise DomainError("diamond supercells need at least two cells per axis")
        k = diamond_stiffness(mass=mass) if stiffness is None else float(stiffness)
        model = _diamond(cells, k, mass, boundary, defect, defect_stiffness_scale)
        model.metadata["band_max"] = _diamond_unit_band_max() * math.sqrt(k * CARBON_MASS_AMU / mass)
    else:
        raise LatticeError(f"unknown lattice kind {kind!r}")
    if impurity_mass is not None:
        if impurity_mass <= 0:
            raise DomainError("impurity mass must be positive")
        centre = model.n_atoms // 2 if kind == "chain" else _centre_site(
            model.positions, np.array(cells) * DIAMOND_LATTICE_CONSTANT_A)
        model.masses[centre] = impurity_mass
        model.tags[centre] = "impurity"
    model.metadata.update({"kind": kind, "size": size if np.ndim(size) == 0 else list(size),
                           "defect": defect, "defect_stiffness_scale": defect_stiffness_scale,
                           "stiffness": k, "mass": mass, "impurity_mass": impurity_mass})
    return model


def highest_local_mode(model, ipr_threshold=0.1):
    """Frequency (meV) of the highest localized mode above the band, or None."""
    lvms = classify_lvm(solve_modes(model), ipr_threshold=ipr_threshold)
    return lvms[-1].frequency if lvms else None


def calibrate_defect_scale(target=187.0, kind="diamond_cubic", size=3, defect="triple_interstitial",
                           bracket=(0.5, 4.0), xtol=1e-6, **kwargs):
    """Spring scale that places the highest defect mode at ``target`` meV.

    The highest mode frequency rises monotonically with the scale, so the
    root is bracketed and found with Brent's method.
    """
    def top(scale):
        model = build_lattice(kind, size, defect, scale, **kwargs)
        return solve_modes(model).frequencies.max() - target

    lo, hi = bracket
    f_lo, f_hi = top(lo), top(hi)
    if f_lo * f_hi > 0:
        raise DomainError(f"target {target} meV is not bracketed by scales {bracket}")
    return brentq(top, lo, hi, xtol=xtol)
