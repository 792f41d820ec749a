import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entconvert.analysis import (
    FitConvergenceError,
    FitError,
    FringeSample,
    FringeScan,
    chsh_s,
    chsh_table_from_csv,
    chsh_table_to_csv,
    correlation_e,
    fit_fringe,
)
from entconvert.apparatus import ApparatusConfig, EffectiveSource, build_source, simulate_dl_scan
from entconvert.detection import (
    AnalyzerSetting,
    chsh_settings_deg,
    coincidence_probability,
    expected_chsh_counts,
    scan_angle,
    simulate_chsh,
)
from entconvert.modes import PathMode, Polarization, SingleMode, make_bell, product_state

from oracles import bell_dict, chsh_from_probability, finite_difference_sigma, projection_probability

DEG = math.pi / 180
SQ2 = math.sqrt(2)


def angle_scan(offset, amplitude, phase, xs_deg):
    y = offset + amplitude * np.cos(2 * np.deg2rad(xs_deg) - phase)
    return FringeScan(tuple(FringeSample(x, c, 1.0) for x, c in zip(xs_deg, y)))


def dl_scan(base, amp, width, xs):
    y = base + amp * np.exp(-xs**2 / (2 * width**2))
    return FringeScan(tuple(FringeSample(x, c, 1.0) for x, c in zip(xs, y)), "dl_scan")


# -- fringe fits --------------------------------------------------------------

def test_fit_noiseless_triplet_scan_is_perfect():
    src = EffectiveSource(make_bell(0.0), 1.0)
    xs = np.arange(0, 180, 10.0)
    scan = FringeScan(tuple(
        FringeSample(x, 1e4 * coincidence_probability(src, AnalyzerSetting.from_degrees(x, 45)), 1.0)
        for x in xs
    ))
    assert fit_fringe(scan).visibility == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.floats(10, 1e5), st.floats(0.01, 0.99), st.floats(-math.pi + 0.01, math.pi - 0.01))
def test_angle_fit_recovers_parameters(offset, frac, phase):
    amplitude = frac * offset
    fit = fit_fringe(angle_scan(offset, amplitude, phase, np.linspace(0, 170, 18)))
    assert fit.offset == pytest.approx(offset, rel=1e-6)
    assert fit.amplitude == pytest.approx(amplitude, rel=1e-6)
    assert fit.phase == pytest.approx(phase, abs=1e-6)
    assert fit.visibility == pytest.approx(frac, rel=1e-6)
    assert fit.residual_rms < 1e-6 * offset


@pytest.mark.parametrize("base,amp,width", [(2500, 2000, 80), (2500, -2200, 80), (100, 30, 150)])
def test_dl_fit_recovers_parameters(base, amp, width):
    fit = fit_fringe(dl_scan(base, amp, width, np.linspace(-400, 400, 41)))
    assert fit.offset == pytest.approx(base, rel=1e-6)
    assert fit.amplitude == pytest.approx(amp, rel=1e-6)
    assert fit.width == pytest.approx(width, rel=1e-6)
    assert fit.visibility == pytest.approx(abs(amp) / base, rel=1e-6)


def test_dl_pair_visibility():
    xs = np.linspace(-400, 400, 41)
    v = 0.89
    plus = dl_scan(2500, 2500 * v, 80, xs)
    minus = dl_scan(2500, -2500 * v, 80, xs)
    assert fit_fringe(plus, minus).visibility == pytest.approx(v, rel=1e-6)
    assert fit_fringe(minus, plus).visibility == pytest.approx(v, rel=1e-6)


def test_fit_underdetermined():
    with pytest.raises(FitError):
        fit_fringe(angle_scan(10, 5, 0, np.arange(0, 70, 10.0)))
    with pytest.raises(FitError):
        fit_fringe(dl_scan(10, 5, 50, np.array([-10.0, 0.0, 10.0])))
    # eight samples, all at the same fringe phase: rank deficient
    with pytest.raises(FitError):
        fit_fringe(angle_scan(10, 5, 0, np.array([0.0, 180, 360, 540, 720, 900, 1080, 1260])))


def test_fit_nonconvergence_reported(monkeypatch):
    import entconvert.analysis as analysis

    monkeypatch.setattr(analysis, "DL_MAX_ITER", 2)
    with pytest.raises(FitConvergenceError):
        fit_fringe(dl_scan(2500, 2000, 80, np.linspace(-400, 400, 41)))


def test_scan_duplicates_and_csv_roundtrip():
    with pytest.raises(ValueError):
        FringeScan((FringeSample(0, 1, 1), FringeSample(0, 2, 1)))
    src = build_source(ApparatusConfig(spatial_visibility=0.7))
    scan = scan_angle(src, 45 * DEG, np.linspace(0, math.pi, 9), 1000, 2.0, seed=4)
    text = scan.to_csv()
    assert text.splitlines()[0] == "setting_deg,duration_s,singles_a,singles_b,coincidences,probability_model"
    first = text.splitlines()[1].split(",")
    assert first[0] == "0.0000"
    assert len(first[5].split(".")[1]) == 10
    back = FringeScan.from_csv(text)
    assert back.to_csv() == text
    dl = simulate_dl_scan(ApparatusConfig(), np.linspace(-100, 100, 5), 45 * DEG, 45 * DEG, 1.0, 2)
    assert dl.to_csv().startswith("delta_l_um,")
    assert FringeScan.from_csv(dl.to_csv()).kind == "dl_scan"


# -- correlations ---------------------------------------------------------------

def test_correlation_examples():
    assert correlation_e(100, 0, 0, 100)[0] == 1.0
    assert correlation_e(100, 100, 0, 0)[0] == 0.0
    e, s = correlation_e(50, 50, 50, 50)
    assert e == 0.0
    assert s == pytest.approx(1 / math.sqrt(200), rel=1e-12)
    with pytest.raises(ValueError):
        correlation_e(0, 0, 0, 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 10**6), min_size=4, max_size=4))
def test_correlation_sigma_matches_finite_difference(counts):
    _, sigma = correlation_e(*counts)
    expected = finite_difference_sigma(counts, lambda a, b, c, d: correlation_e(a, b, c, d)[0])
    assert sigma == pytest.approx(expected, rel=1e-5)


def test_triplet_correlation_at_paper_angle():
    src = EffectiveSource(make_bell(0.0), 1.0)
    p = lambda a, b: coincidence_probability(src, AnalyzerSetting.from_degrees(a, b))
    e, _ = correlation_e(p(0, 22.5), p(0, 112.5), p(90, 22.5), p(90, 112.5))
    assert e == pytest.approx(-math.cos(math.radians(45)), abs=1e-12)


# -- CHSH -----------------------------------------------------------------------

def test_chsh_ideal_triplet():
    counts = expected_chsh_counts(EffectiveSource(make_bell(0.0), 1.0), 1e6)
    res = chsh_s(counts)
    assert res.s_value == pytest.approx(2 * SQ2, abs=1e-9)
    assert res.e_values == pytest.approx((-1 / SQ2, 1 / SQ2, 1 / SQ2, 1 / SQ2), abs=1e-12)
    assert res.sign_combination == "-E(a,b)+E(a,b')+E(a',b)+E(a',b')"


def test_chsh_singlet_uses_different_pattern():
    res = chsh_s(expected_chsh_counts(EffectiveSource(make_bell(math.pi), 1.0), 1e6))
    assert res.s_value == pytest.approx(2 * SQ2, abs=1e-9)
    assert res.sign_combination != "-E(a,b)+E(a,b')+E(a',b)+E(a',b')"


def test_chsh_product_state():
    src = EffectiveSource(
        product_state(SingleMode(Polarization.H, PathMode.Aout), SingleMode(Polarization.V, PathMode.Bout)), 1.0
    )
    res = chsh_s(expected_chsh_counts(src, 1e6))
    assert res.e_values == pytest.approx((-1 / SQ2, 1 / SQ2, 0, 0), abs=1e-12)
    assert res.s_value == pytest.approx(SQ2, abs=1e-9)


def test_chsh_matches_probability_oracle():
    for cfg in (ApparatusConfig(spatial_visibility=0.6, tilt_phase=0.4), ApparatusConfig(imbalance=0.3)):
        src = build_source(cfg)
        oracle = chsh_from_probability(lambda a, b: coincidence_probability(src, AnalyzerSetting.from_degrees(a, b)))
        assert chsh_s(expected_chsh_counts(src, 1e4)).s_value == pytest.approx(oracle, abs=1e-12)


def test_chsh_table_errors():
    counts = expected_chsh_counts(EffectiveSource(make_bell(0.0), 1.0), 100)
    partial = dict(list(counts.items())[:15])
    with pytest.raises(ValueError):
        chsh_s(partial)
    zeros = {k: 0 for k in counts}
    with pytest.raises(ValueError):
        chsh_s(zeros)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_chsh_scale_invariant(scale):
    counts = expected_chsh_counts(build_source(ApparatusConfig(spatial_visibility=0.8)), 1e4)
    scaled = {k: v * scale for k, v in counts.items()}
    assert chsh_s(scaled).s_value == pytest.approx(chsh_s(counts).s_value, abs=1e-12)


@pytest.mark.parametrize("v", np.linspace(0, 1, 11))
@pytest.mark.parametrize("phi", [0.0, math.pi])
def test_chsh_uniform_cross_scaling(v, phi):
    # dephasing keeps the H/V anticorrelation: E(0, b) = -cos 2b is independent of v,
    # E(45, b) = v cos(phi) sin 2b, hence S = sqrt(2) (1 + v) rather than 2 sqrt(2) v
    src = build_source(ApparatusConfig(tilt_phase=phi, spatial_visibility=v))
    s = chsh_s(expected_chsh_counts(src, 1e4)).s_value
    oracle = chsh_from_probability(
        lambda a, b: projection_probability(bell_dict(math.pi / 4, phi), math.radians(a), math.radians(b), v)
    )
    assert s == pytest.approx(oracle, abs=1e-12)
    assert s == pytest.approx(SQ2 * (1 + v), abs=1e-9)


def test_local_product_family_obeys_classical_bound():
    for eps in (0.0, math.pi / 2):
        for phi in np.linspace(0, 2 * math.pi, 9):
            src = build_source(ApparatusConfig(imbalance=eps, tilt_phase=phi))
            assert chsh_s(expected_chsh_counts(src, 1e4)).s_value <= 2 + 1e-9


def test_chsh_csv_roundtrip():
    settings_deg = chsh_settings_deg()
    assert len(settings_deg) == 16
    assert sorted({a for a, _ in settings_deg}) == [0.0, 45.0, 90.0, 135.0]
    assert sorted({b for _, b in settings_deg}) == [22.5, 67.5, 112.5, 157.5]
    rows = [(a, b, i + 1, 10.0) for i, (a, b) in enumerate(settings_deg)]
    text = chsh_table_to_csv(rows)
    assert text.splitlines()[0] == "theta_a_deg,theta_b_deg,coincidences,duration_s"
    table = chsh_table_from_csv(text)
    assert table[(45.0, 157.5)] == rows[settings_deg.index((45.0, 157.5))][2]
    with pytest.raises(ValueError):
        chsh_table_from_csv(text.replace(",10\n", ",5\n", 1))


def test_paper_s_value_from_dephasing_relation():
    # inverting S = sqrt(2) (1 + v) for the reported 2.61 gives v ~ 0.8455
    v = 2.61 / SQ2 - 1
    src = build_source(ApparatusConfig(spatial_visibility=v))
    settings_deg = chsh_settings_deg()
    for seed in range(5):
        records = simulate_chsh(src, 4000, 10.0, seed, settings_deg)
        res = chsh_s({k: r.coincidences for k, r in zip(settings_deg, records)})
        assert abs(res.s_value - 2.61) <= 3 * res.s_error
