import numpy as np
import pytest

from waverom.oscillator import fit_oscillator, separation_series
from waverom.tracking import PeakPoint, WaveTrack


def test_damped_cosine_parameters_recovered():
    # 600 samples of 18.38 * exp(0.0011 t) * cos(0.0837 t)
    t = np.arange(600, dtype=float)
    series = 18.38 * np.exp(0.0011 * t) * np.cos(0.0837 * t)
    fit = fit_oscillator(series, dt=1.0)
    assert fit.growth == pytest.approx(0.0011, abs=1e-4)
    assert fit.frequency == pytest.approx(0.0837, abs=1e-3)
    assert fit.amplitude == pytest.approx(18.38, rel=1e-3)


def test_pure_cosine_zero_growth():
    t = np.arange(400, dtype=float)
    series = 2.5 * np.cos(0.21 * t + 0.4)
    fit = fit_oscillator(series)
    assert abs(fit.growth) <= 1e-6
    assert fit.frequency == pytest.approx(0.21, abs=1e-6)


def test_frequency_matches_fft_peak_oracle(rng):
    t = np.arange(512, dtype=float)
    freq_true = 0.3
    series = np.exp(-0.001 * t) * np.cos(freq_true * t + 1.0)
    # independent oracle: the FFT peak bin
    spectrum = np.abs(np.fft.rfft(series - series.mean()))
    spectrum[0] = 0.0
    bin_width = 2.0 * np.pi / 512
    oracle = np.argmax(spectrum) * bin_width
    fit = fit_oscillator(series)
    assert abs(fit.frequency - oracle) <= bin_width


def test_scale_equivariance():
    t = np.arange(300, dtype=float)
    base = np.exp(0.002 * t) * np.cos(0.15 * t + 0.3)
    fit1 = fit_oscillator(base)
    fit2 = fit_oscillator(10.0 * base)
    assert fit2.amplitude == pytest.approx(10.0 * fit1.amplitude, rel=1e-6)
    assert fit2.growth == pytest.approx(fit1.growth, abs=1e-9)
    assert fit2.frequency == pytest.approx(fit1.frequency, abs=1e-9)
    assert fit2.phase == pytest.approx(fit1.phase, abs=1e-6)


def test_canonical_form():
    t = np.arange(200, dtype=float)
    series = -3.0 * np.cos(0.4 * t)  # negative amplitude input form
    fit = fit_oscillator(series)
    assert fit.amplitude >= 0.0
    assert fit.frequency >= 0.0
    assert -np.pi < fit.phase <= np.pi
    assert np.allclose(fit.predict(t), series, atol=1e-6)


def test_short_series_rejected():
    with pytest.raises(ValueError, match="too short"):
        fit_oscillator(np.arange(5.0))


def test_noisy_fit_converges(rng):
    t = np.arange(500, dtype=float)
    series = 5.0 * np.exp(0.001 * t) * np.cos(0.12 * t) + rng.normal(0, 0.3, 500)
    fit = fit_oscillator(series)
    assert fit.converged
    assert fit.frequency == pytest.approx(0.12, abs=2e-3)


def _make_track(label, positions):
    pts = [PeakPoint(t, float(x % 180), 1.0) for t, x in enumerate(positions)]
    return WaveTrack(label=label, points=pts)


def test_separation_series_demeaned_oscillation():
    t = np.arange(120, dtype=float)
    a = 40.0 + 3.0 * np.sin(0.2 * t)
    b = np.full(120, 10.0)
    t_idx, x1 = separation_series(_make_track(0, a), _make_track(1, b), 180)
    assert t_idx.shape == (120,)
    assert abs(x1.mean()) <= 1e-9
    assert np.allclose(x1, 3.0 * np.sin(0.2 * t) - (3.0 * np.sin(0.2 * t)).mean(), atol=1e-9)


def test_separation_series_needs_overlap():
    a = _make_track(0, [10.0, 11.0])
    b = WaveTrack(label=1, points=[PeakPoint(5, 20.0, 1.0)])
    with pytest.raises(ValueError, match="fewer than two"):
        separation_series(a, b, 180)
