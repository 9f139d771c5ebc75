import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vibronix.constants import SQRT_EIG_TO_MEV
from vibronix.errors import DomainError, LatticeError
from vibronix.lattice import (LatticeModel, PhononModes, build_lattice, calibrate_defect_scale,
                              chain_band_max, chain_local_mode_frequency, classify_lvm,
                              diamond_stiffness, dynamical_matrix, ipr,
                              nanoparticle_phonon_cutoff, solve_modes)


def _naive_dynamical_matrix(model):
    """Element-by-element force-constant assembly, used as an independent oracle."""
    n, dim = model.n_atoms, model.dim
    D = np.zeros((n * dim, n * dim))
    for (i, j), k, d in zip(model.springs, model.stiffness, model.bond_vectors()):
        e = d / np.linalg.norm(d)
        for a in range(dim):
            for b in range(dim):
                f = k * e[a] * e[b]
                D[i * dim + a, i * dim + b] += f / model.masses[i]
                D[j * dim + a, j * dim + b] += f / model.masses[j]
                D[i * dim + a, j * dim + b] -= f / np.sqrt(model.masses[i] * model.masses[j])
                D[j * dim + a, i * dim + b] -= f / np.sqrt(model.masses[i] * model.masses[j])
    return D


def _random_chain(n, seed):
    rng = np.random.default_rng(seed)
    springs = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return LatticeModel(np.arange(n) * 1.5, rng.uniform(1, 20, n), springs, rng.uniform(1, 40, n - 1))


# -- construction ----------------------------------------------------------------------------

def test_chain_counts():
    m = build_lattice("chain", 100)
    assert m.n_atoms == 100 and len(m.springs) == 99
    p = build_lattice("chain", 100, boundary="periodic")
    assert len(p.springs) == 100


def test_diamond_counts():
    assert build_lattice("diamond_cubic", 3).n_atoms == 216
    assert build_lattice("diamond_cubic", 3, "vacancy").n_atoms == 8 * 27 - 1
    assert build_lattice("diamond_cubic", 2, "split_interstitial").n_atoms == 65
    assert build_lattice("diamond_cubic", 2, "triple_interstitial").n_atoms == 67


def test_diamond_nearest_neighbours():
    m = build_lattice("diamond_cubic", 2, boundary="periodic")
    counts = np.bincount(m.springs.ravel(), minlength=m.n_atoms)
    assert np.all(counts == 4)
    assert np.linalg.norm(m.bond_vectors(), axis=1) == pytest.approx(3.567 * np.sqrt(3) / 4)


def test_chain_rejects_interstitial():
    with pytest.raises(LatticeError):
        build_lattice("chain", 20, "split_interstitial")


def test_disconnected_lattice():
    with pytest.raises(LatticeError):
        LatticeModel(np.arange(4.0), np.ones(4), [[0, 1], [2, 3]], [1.0, 1.0])


def test_invalid_springs():
    with pytest.raises(LatticeError):
        LatticeModel(np.arange(3.0), np.ones(3), [[0, 0], [1, 2]], [1.0, 1.0])
    with pytest.raises(LatticeError):
        LatticeModel(np.arange(3.0), np.ones(3), [[0, 1], [1, 2]], [1.0, -1.0])


def test_json_roundtrip(tmp_path):
    m = build_lattice("diamond_cubic", 2, "triple_interstitial", 1.3, boundary="periodic")
    m.save(tmp_path / "lat.json")
    back = LatticeModel.load(tmp_path / "lat.json")
    assert np.array_equal(dynamical_matrix(back), dynamical_matrix(m))
    assert back.metadata == m.metadata


# -- eigenproblem ------------------------------------------------------------------------------

def test_diatomic_molecule():
    m = LatticeModel([0.0, 1.5], [12.0, 12.0], [[0, 1]], [30.0])
    f = solve_modes(m, band_max=1.0).frequencies
    assert f[0] == pytest.approx(0.0, abs=1e-12)
    assert f[1] == pytest.approx(np.sqrt(2 * 30.0 / 12.0) * SQRT_EIG_TO_MEV, rel=1e-12)


def test_periodic_chain_dispersion():
    n, K, M = 64, 25.0, 12.011
    modes = solve_modes(build_lattice("chain", n, stiffness=K, mass=M, boundary="periodic"))
    k = 2 * np.pi * np.arange(n) / n
    analytic = np.sort(2 * np.sqrt(K / M) * np.abs(np.sin(k / 2))) * SQRT_EIG_TO_MEV
    assert np.allclose(modes.frequencies, analytic, rtol=1e-8, atol=1e-8 * analytic.max())
    assert chain_band_max(K, M) == pytest.approx(analytic.max(), rel=1e-12)


@pytest.mark.parametrize("n, seed", [(2, 0), (17, 1), (60, 2), (200, 3)])
def test_dense_oracle_chain(n, seed):
    m = _random_chain(n, seed)
    D = _naive_dynamical_matrix(m)
    assert np.allclose(dynamical_matrix(m), D, rtol=1e-12, atol=1e-12)
    oracle = np.sqrt(np.clip(np.linalg.eigvalsh(D), 0, None)) * SQRT_EIG_TO_MEV
    assert np.allclose(solve_modes(m, band_max=1.0).frequencies, oracle, rtol=1e-8,
                       atol=1e-8 * oracle.max())


def test_dense_oracle_3d_cluster():
    m = build_lattice("diamond_cubic", 2, "split_interstitial", 1.4)
    assert np.allclose(dynamical_matrix(m), _naive_dynamical_matrix(m), rtol=1e-12, atol=1e-12)


def test_rigid_body_zero_modes():
    assert solve_modes(build_lattice("chain", 50)).n_zero == 1
    # a tetrahedron of central springs is rigid: three translations and three rotations
    pos = np.array([[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]], dtype=float)
    pairs = [[i, j] for i in range(4) for j in range(i + 1, 4)]
    tet = LatticeModel(pos, np.full(4, 12.0), pairs, np.full(6, 20.0))
    assert solve_modes(tet, band_max=1.0).n_zero == 6
    assert solve_modes(build_lattice("diamond_cubic", 2)).n_zero >= 3


@given(st.integers(2, 40), st.integers(0, 1000))
def test_trace_equals_eigenvalue_sum(n, seed):
    m = _random_chain(n, seed)
    f = solve_modes(m, band_max=1.0).frequencies / SQRT_EIG_TO_MEV
    assert np.sum(f ** 2) == pytest.approx(np.trace(dynamical_matrix(m)), rel=1e-9)


@given(st.integers(3, 40), st.integers(0, 1000))
def test_modes_are_orthonormal(n, seed):
    v = solve_modes(_random_chain(n, seed), band_max=1.0).eigenvectors
    assert np.allclose(v.T @ v, np.eye(n), atol=1e-10)


# -- localization ------------------------------------------------------------------------------

def test_ipr_limits():
    n = 50
    assert ipr(np.full(n, 1 / np.sqrt(n))) == pytest.approx(1.0)
    single = np.zeros(n)
    single[7] = 1.0
    assert ipr(single) == pytest.approx(1 / n)
    assert ipr(np.r_[single, np.zeros(2 * n)].reshape(n, 3).ravel(), dim=3) == pytest.approx(1 / n)
    with pytest.raises(DomainError):
        ipr(np.full(n, 1.0))


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=60).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_ipr_bounds(values):
    v = np.asarray(values) / np.linalg.norm(values)
    assert 1 / v.size - 1e-12 <= ipr(v) <= 1 + 1e-12


def test_local_mode_formula():
    assert chain_local_mode_frequency(0.5) == pytest.approx(1.1547, abs=1e-4)
    assert chain_local_mode_frequency(0.8) == pytest.approx(1.6667, abs=1e-4)
    assert chain_local_mode_frequency(1e-9) == pytest.approx(1.0)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            chain_local_mode_frequency(bad)


@pytest.mark.parametrize("n", [100, 400])
def test_light_impurity_local_mode(n):
    M = 12.011
    m = build_lattice("chain", n, mass=M, impurity_mass=M / 2)
    modes = solve_modes(m)
    lvms = classify_lvm(modes)
    assert len(lvms) == 1
    assert lvms[0].ipr < 0.1
    if n == 400:
        ratio = lvms[0].frequency / modes.band_max
        assert ratio == pytest.approx(chain_local_mode_frequency(0.5), rel=5e-3)


def test_classification_thresholds():
    freqs = np.array([150.0, 187.0])
    modes = PhononModes(freqs, np.eye(2), np.array([0.9, 0.05]), 165.0, 1, 0)
    lvms = classify_lvm(modes)
    assert [m.frequency for m in lvms] == [187.0]
    modes = PhononModes(np.array([187.0]), np.eye(1), np.array([0.8]), 165.0, 1, 0)
    assert classify_lvm(modes) == []


def test_pristine_lattices_have_no_local_modes():
    assert classify_lvm(solve_modes(build_lattice("chain", 120))) == []
    assert classify_lvm(solve_modes(build_lattice("diamond_cubic", 3))) == []


def test_diamond_band_top():
    assert diamond_stiffness() == pytest.approx(29.335, rel=1e-3)
    modes = solve_modes(build_lattice("diamond_cubic", 3, boundary="periodic"))
    assert modes.frequencies.max() == pytest.approx(165.0, rel=1e-6)


def test_calibrated_interstitial_mode():
    scale = calibrate_defect_scale(187.0)
    m = build_lattice("diamond_cubic", 3, "triple_interstitial", scale)
    lvms = classify_lvm(solve_modes(m))
    assert lvms and max(l.frequency for l in lvms) == pytest.approx(187.0, abs=1e-3)
    assert all(l.frequency > 165.0 for l in lvms)


def test_stiffer_defect_raises_top_mode():
    tops = [solve_modes(build_lattice("diamond_cubic", 2, "vacancy", s)).frequencies.max()
            for s in (0.5, 1.0, 2.0, 3.0)]
    assert np.all(np.diff(tops) >= -1e-9)


def test_nanoparticle_cutoff():
    assert nanoparticle_phonon_cutoff(12000.0, 25.0) == pytest.approx(480.0)
    assert nanoparticle_phonon_cutoff(12000.0, 50.0) == pytest.approx(240.0)
    assert nanoparticle_phonon_cutoff(12000.0, 1e12) == pytest.approx(0.0, abs=1e-6)


def test_modes_csv(tmp_path):
    modes = solve_modes(build_lattice("chain", 10))
    modes.to_csv(tmp_path / "m.csv")
    data = np.loadtxt(tmp_path / "m.csv", delimiter=",", skiprows=1)
    assert data.shape == (10, 3)
    assert data[:, 1] == pytest.approx(modes.frequencies)
