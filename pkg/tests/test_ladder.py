import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vibronix.analysis import (EmitterRecord, PeakFit, analyze_spectrum, classify_fingerprint,
                               extract_ladder, ladder_to_params)
from vibronix.constants import HC_EV_NM, width_mev_to_nm
from vibronix.datasets import broad_sample_spectrum, il1_sample_spectrum, load_sample
from vibronix.errors import NotALadderError
from vibronix.presets import default_grid
from vibronix.vibronic import VibronicParams, fc_weight, ladder_energies, synthesize_spectrum


def _peak(energy_ev, fwhm_mev, area):
    c = HC_EV_NM / energy_ev
    w = width_mev_to_nm(fwhm_mev, c)
    return PeakFit(c, energy_ev, w, fwhm_mev, area, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                   np.diag([1e-8, 1e-8, 1e-8]), 0.0)


def _ladder(e0=2.27, quantum=187.0, chi=1.2, widths=(1.28, 1.54, 1.80, 2.06), s=0.9676):
    p = VibronicParams(e0, quantum, chi, s, widths[0], 0.0, len(widths))
    areas = fc_weight(s, np.arange(len(widths))) * 1e5
    return [_peak(e, w, a) for e, w, a in zip(ladder_energies(p), widths, areas)]


def test_exact_ladder_reduction():
    rec = extract_ladder(_ladder())
    assert rec.zpl_energy == pytest.approx(2.27)
    assert rec.spacings == pytest.approx([187.0, 185.8, 184.6])
    assert rec.lvm_quantum == pytest.approx(185.8)     # mean spacing
    assert rec.anharmonicity == pytest.approx(1.2)
    assert rec.gamma_vib == pytest.approx(0.26)
    w = fc_weight(0.9676, np.arange(4))
    assert rec.debye_waller == pytest.approx(w[0] / w.sum())


def test_ladder_to_params_inverts_extraction():
    p = ladder_to_params(extract_ladder(_ladder()))
    assert p.lvm_quantum == pytest.approx(187.0)
    assert p.anharmonicity == pytest.approx(1.2)
    assert math.exp(-p.s_total) == pytest.approx(0.38, abs=1e-4)


def test_harmonic_ladder_has_zero_anharmonicity():
    assert extract_ladder(_ladder(chi=0.0)).anharmonicity == pytest.approx(0.0, abs=1e-9)


def test_linewidth_increment_from_quoted_widths():
    rec = extract_ladder(_ladder(widths=(1.5, 1.8, 2.1, 2.4)))
    assert rec.gamma_vib == pytest.approx(0.3, abs=1e-9)


def test_peak_order_does_not_matter():
    peaks = _ladder()
    a = extract_ladder(peaks)
    b = extract_ladder(peaks[::-1])
    assert a.to_dict() == b.to_dict()


def test_irregular_spacing_is_not_a_ladder():
    peaks = _ladder()
    peaks[2] = _peak(peaks[2].center_ev - 0.06, 1.8, peaks[2].area)
    with pytest.raises(NotALadderError):
        extract_ladder(peaks)


def test_two_lines_are_not_a_ladder():
    with pytest.raises(NotALadderError):
        extract_ladder(_ladder()[:2])


@given(st.floats(1.9, 2.4), st.floats(120.0, 230.0), st.floats(-3.0, 3.0),
       st.floats(0.2, 2.5))
def test_extraction_inverse_property(e0, quantum, chi, s):
    p = ladder_to_params(extract_ladder(_ladder(e0, quantum, chi, s=s)))
    assert p.lvm_quantum == pytest.approx(quantum, rel=1e-6)
    assert p.anharmonicity == pytest.approx(chi, abs=1e-6)
    assert p.s_total == pytest.approx(s, rel=1e-6)


# -- fingerprint -------------------------------------------------------------------

def _record(**kw):
    base = dict(zpl_energy=HC_EV_NM / 547.5, zpl_fwhm_mev=1.28, zpl_fwhm_nm=0.31,
                lvm_quantum=187.0, anharmonicity=1.2, debye_waller=0.38, gamma_vib=0.26,
                n_peaks=4, g2_0=0.1)
    base.update(kw)
    return EmitterRecord(**base)


def test_typical_record_is_il1():
    assert classify_fingerprint(_record()).is_il1


def test_broad_line_is_rejected_for_linewidth():
    res = classify_fingerprint(_record(zpl_fwhm_mev=100.0, zpl_fwhm_nm=24.0))
    assert not res.is_il1
    assert any(r.startswith("linewidth") for r in res.reasons)


def test_bunched_record_is_rejected_for_antibunching():
    res = classify_fingerprint(_record(g2_0=0.7))
    assert not res
    assert [r.split(":")[0] for r in res.reasons] == ["antibunching"]


def test_missing_g2_is_not_a_reason():
    assert classify_fingerprint(_record(g2_0=None)).is_il1


def test_record_dict_roundtrip():
    rec = _record(spacings=[187.0, 185.8, 184.6], source="x")
    assert EmitterRecord.from_dict(rec.to_dict()) == rec


def test_partial_record_loads_with_missing_fields():
    rec = EmitterRecord.from_dict({"zpl_energy": 2.26})
    assert rec.lvm_quantum is None
    assert not classify_fingerprint(rec).is_il1


# -- full pipeline -------------------------------------------------------------------

def test_pipeline_on_il1_sample(il1):
    res = analyze_spectrum(il1_sample_spectrum(), source="il1")
    rec = res.record
    assert res.fingerprint.is_il1
    assert rec.n_peaks == 4
    assert rec.zpl_energy == pytest.approx(2.27, abs=1e-4)
    p = ladder_to_params(rec)
    assert p.lvm_quantum == pytest.approx(187.0, rel=0.01)
    assert p.anharmonicity == pytest.approx(1.2, rel=0.15)
    assert rec.gamma_vib == pytest.approx(0.26, rel=0.2)
    d = res.to_dict()
    assert d["fingerprint"]["is_il1"] is True and len(d["peaks"]) == 4


def test_bundled_samples_match_generators():
    assert np.array_equal(load_sample("il1").intensity, il1_sample_spectrum().intensity)
    assert np.array_equal(load_sample("broad").intensity, broad_sample_spectrum().intensity)


def test_broad_emitter_is_not_a_ladder():
    with pytest.raises(NotALadderError):
        analyze_spectrum(broad_sample_spectrum())


def test_pipeline_recovers_varied_parameters():
    p = VibronicParams(2.24, 175.0, 2.0, 1.3, 1.0, 0.3, 4)
    s = synthesize_spectrum(p, grid=default_grid(p), noise_seed=3, peak_counts=2e4)
    rec = analyze_spectrum(s).record
    back = ladder_to_params(rec)
    assert back.lvm_quantum == pytest.approx(175.0, rel=0.01)
    assert back.anharmonicity == pytest.approx(2.0, rel=0.15)
    assert math.exp(-back.s_total) == pytest.approx(math.exp(-1.3), abs=0.02)


def test_pipeline_with_background(il1):
    s = il1_sample_spectrum(background=300.0)
    res = analyze_spectrum(s, background="linear_baseline")
    assert res.fingerprint.is_il1
