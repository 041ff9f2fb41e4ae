import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coprime_psd import CoprimeScheme, NyquistFrame
from coprime_psd.errors import (
    ConfigError,
    FrequencyOutOfBandError,
    SweepOutOfBandError,
    SymbolRateTooHighError,
    ZeroSignalPowerError,
)
from coprime_psd.siggen import (
    BPSKSpec,
    LFMSpec,
    MPSpec,
    NoiseSpec,
    PRESETS,
    add_awgn,
    apply_delay,
    fold_frequency,
    gen_bpsk,
    gen_lfm,
    gen_mp,
    preset,
    random_frequencies,
    render_components,
    render_scenario,
    scenario_from_dict,
)

S = CoprimeScheme(3, 4, 50, 1, 1000.0)  # N = 612


def test_quarter_rate_tone_has_period_four():
    x = gen_mp(MPSpec(250.0), S).x
    np.testing.assert_allclose(x[:8], [1, 1j, -1, -1j, 1, 1j, -1, -1j], atol=1e-12)


def test_tone_matches_closed_form():
    spec = MPSpec(123.4, 2.0, 0.3)
    n = np.arange(S.N)
    expected = 2.0 * np.exp(1j * (2 * np.pi * 123.4 * n / 1000.0 + 0.3))
    np.testing.assert_allclose(gen_mp(spec, S).x, expected, atol=1e-9)


def test_multitone_power():
    g = np.random.default_rng(3)
    specs = [MPSpec(f, 1.5, ph) for f, ph in zip(g.uniform(0, 1000, 8), g.uniform(0, 6, 8))]
    s = CoprimeScheme(3, 4, 3000, 1, 1000.0)
    assert gen_mp(specs, s).power == pytest.approx(8 * 1.5**2, rel=0.01)


def test_real_tone():
    x = gen_mp(MPSpec(100.0), S, real=True).x
    assert np.all(x.imag == 0)
    assert x.real[0] == pytest.approx(1.0)


def test_tone_out_of_band():
    with pytest.raises(FrequencyOutOfBandError):
        gen_mp(MPSpec(1000.0), S)
    with pytest.raises(FrequencyOutOfBandError):
        gen_mp(MPSpec(-1.0), S)


@pytest.mark.parametrize("f, folded", [(100.0, 100.0), (900.0, 100.0), (1100.0, 100.0), (-100.0, 100.0), (500.0, 500.0)])
def test_fold_frequency(f, folded):
    assert fold_frequency(f, 1000.0) == pytest.approx(folded)


def test_bpsk_all_zero_code_is_pure_carrier():
    a = gen_bpsk(BPSKSpec(200.0, 10.0, (0, 0, 0)), S).x
    b = gen_mp(MPSpec(200.0), S).x
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_bpsk_symbol_boundaries():
    # 4 samples per symbol, alternating code, zero carrier
    x = gen_bpsk(BPSKSpec(0.0, 250.0, (0, 1)), S).x
    np.testing.assert_allclose(x[:12].real, [1, 1, 1, 1, -1, -1, -1, -1, 1, 1, 1, 1])


def test_bpsk_power_near_carrier():
    s = CoprimeScheme(3, 4, 300, 1, 1000.0)
    fc, R = 300.0, 1000.0 / 8
    x = gen_bpsk(BPSKSpec(fc, R, (0, 1)), s).x
    psd = np.abs(np.fft.fft(x)) ** 2
    f = np.fft.fftfreq(s.N, 1 / s.fs) % s.fs
    near = np.abs(f - fc) <= R
    assert psd[near].sum() / psd.sum() >= 0.8


def test_bpsk_validation():
    with pytest.raises(SymbolRateTooHighError):
        gen_bpsk(BPSKSpec(100.0, 1000.0), S)
    with pytest.raises(ConfigError):
        gen_bpsk(BPSKSpec(100.0, 10.0, (0, 2)), S)
    with pytest.raises(FrequencyOutOfBandError):
        gen_bpsk(BPSKSpec(1200.0, 10.0), S)


@pytest.mark.parametrize("f0, bw", [(100.0, 600.0), (800.0, -500.0)])
def test_lfm_instantaneous_frequency(f0, bw):
    x = gen_lfm(LFMSpec(f0, bw), S).x
    inst = np.angle(x[1:] * np.conj(x[:-1])) * S.fs / (2 * np.pi) % S.fs
    for n in (0, S.N // 4, S.N // 2, 3 * S.N // 4):
        expected = (f0 + bw * (n + 0.5) / S.N) % S.fs
        assert inst[n] == pytest.approx(expected, abs=1e-6)


def test_lfm_repeats_with_short_duration():
    T = 100 / S.fs
    x = gen_lfm(LFMSpec(100.0, 300.0, T), S).x
    np.testing.assert_allclose(x[100:200], x[:100], atol=1e-9)


def test_lfm_out_of_band():
    with pytest.raises(SweepOutOfBandError):
        gen_lfm(LFMSpec(800.0, 300.0), S)
    with pytest.raises(SweepOutOfBandError):
        gen_lfm(LFMSpec(100.0, -200.0), S)


def test_awgn_exact_snr_and_determinism():
    clean = gen_mp([MPSpec(100.0), MPSpec(300.0, 0.5)], S)
    noisy = add_awgn(clean, NoiseSpec(3.0, seed=9))
    noise = noisy.x - clean.x
    realized = 10 * np.log10(clean.power / np.mean(np.abs(noise) ** 2))
    assert realized == pytest.approx(3.0, abs=1e-9)
    assert np.array_equal(add_awgn(clean, NoiseSpec(3.0, seed=9)).x, noisy.x)
    assert not np.array_equal(add_awgn(clean, NoiseSpec(3.0, seed=10)).x, noisy.x)


def test_awgn_passthrough_and_zero_power():
    clean = gen_mp(MPSpec(100.0), S)
    assert add_awgn(clean, None) is clean
    assert add_awgn(clean, NoiseSpec(float("inf"))) is clean
    with pytest.raises(ZeroSignalPowerError):
        add_awgn(NyquistFrame(np.zeros(S.N, complex), S.fs), NoiseSpec(0.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["mp", "bpsk", "lfm"]))
def test_delay_shifts_signal(d, kind):
    spec = {"mp": MPSpec(321.0, 1.0, 0.2),
            "bpsk": BPSKSpec(100.0, 50.0, (0, 1, 1, 0, 1)),
            "lfm": LFMSpec(50.0, 400.0)}[kind]
    base = render_components([spec], S, 0).x
    shifted = apply_delay(lambda s: render_components([spec], S, s), d).x
    if d < S.N:
        np.testing.assert_allclose(shifted[: S.N - d], base[d:], atol=1e-6)
    # periodic generators repeat with the frame length
    if kind == "lfm":
        np.testing.assert_allclose(shifted, np.roll(base, -d), atol=1e-6)


def test_delay_validation():
    with pytest.raises(ValueError):
        apply_delay(lambda s: gen_mp(MPSpec(1.0), S, s), -1)


def test_random_frequencies_separation():
    g = np.random.default_rng(0)
    f = random_frequencies(g, 30, [100.0, 900.0], min_separation=10.0)
    assert f.size == 30 and f.min() >= 100 and f.max() < 900
    d = np.abs(f[:, None] - f[None, :])[~np.eye(30, dtype=bool)]
    assert d.min() >= 10.0
    with pytest.raises(ConfigError):
        random_frequencies(g, 100, [0.0, 10.0], min_separation=1.0)


def test_scenario_parsing():
    d = {
        "seed": 5,
        "components": [{"type": "mp", "freq_hz": 100.0, "phase_rad": 0.0}],
        "random": [{"type": "bpsk", "count": 2, "band_hz": [200, 400], "symbol_rate_hz": 10.0}],
        "noise": {"snr_db": 10.0, "seed": 3},
        "delay_samples": 7,
    }
    scn = scenario_from_dict(d, S)
    assert len(scn.components) == 3
    assert isinstance(scn.components[0], MPSpec) and scn.components[0].phase == 0.0
    assert all(isinstance(c, BPSKSpec) for c in scn.components[1:])
    assert scn.noise == NoiseSpec(10.0, 3)
    assert scn.delay_samples == 7
    assert np.all((scn.frequencies[1:] >= 200) & (scn.frequencies[1:] < 400))
    # same seed, same frame
    a = render_scenario(scn, S).x
    b = render_scenario(scenario_from_dict(d, S), S).x
    assert np.array_equal(a, b)
    assert not np.array_equal(a, render_scenario(scenario_from_dict(d, S, seed=6), S).x)


@pytest.mark.parametrize(
    "d",
    [
        {},
        {"components": [{"type": "square", "freq_hz": 1.0}]},
        {"components": [{"type": "mp"}]},
        {"random": [{"type": "lfm", "count": 1}]},
    ],
)
def test_scenario_errors(d):
    with pytest.raises(ConfigError):
        scenario_from_dict(d, S)


def test_presets_are_copies():
    p = preset("tones50")
    p["noise"]["snr_db"] = -100
    assert PRESETS["tones50"]["noise"]["snr_db"] == 15.0
    with pytest.raises(ConfigError):
        preset("nope")


def test_zero_bandwidth_chirp_is_a_tone():
    np.testing.assert_allclose(gen_lfm(LFMSpec(210.0, 0.0, None, 1.0, 0.4), S).x,
                               gen_mp(MPSpec(210.0, 1.0, 0.4), S).x, atol=1e-9)


def test_unit_power_frame_at_zero_db():
    clean = gen_mp(MPSpec(100.0), S)
    assert clean.power == pytest.approx(1.0)
    noise = add_awgn(clean, NoiseSpec(0.0, 1)).x - clean.x
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(1.0, rel=0.01)


def test_zero_delay_is_identity():
    comps = [MPSpec(100.0, 1.0, 0.1), BPSKSpec(300.0, 20.0, (0, 1, 1))]
    a = render_components(comps, S, 0).x
    assert np.array_equal(apply_delay(lambda s: render_components(comps, S, s), 0).x, a)


@pytest.mark.parametrize("d", [1, 17, 10**5])
def test_delayed_tone_same_magnitude_spectrum(d):
    spec = MPSpec(123.0, 1.0, 0.0)
    a = np.abs(np.fft.fft(gen_mp(spec, S).x))
    b = np.abs(np.fft.fft(apply_delay(lambda s: gen_mp(spec, S, s), d).x))
    np.testing.assert_allclose(a, b, atol=1e-6 * a.max())


def test_equal_power_components():
    s = CoprimeScheme(3, 4, 1000, 1, 1000.0)
    comps = [MPSpec(111.0, 2.0), BPSKSpec(444.0, 25.0, (0, 1, 1, 0, 1), 2.0), LFMSpec(600.0, 200.0, None, 2.0)]
    powers = [render_components([c], s, 0).power for c in comps]
    assert max(powers) / min(powers) <= 1.01


def test_generator_outputs_have_frame_length():
    for c in (MPSpec(1.0), BPSKSpec(2.0, 1.0), LFMSpec(1.0, 5.0)):
        assert len(render_components([c], S, 0)) == S.N
