"""Damped-oscillator fits to wave-separation series.

The distance between two co-rotating wave fronts often behaves like a lightly
driven mass-spring-damper; fitting the explicit solution
``a * exp(g t) * cos(f t + phi)`` directly avoids the eigenvalue biases of
regression-based linear fits. Initial guesses come from the FFT peak
(frequency), the log-envelope slope (growth), and the analytic signal at t=0
(amplitude/phase); a nonlinear least-squares refinement finishes the job.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import hilbert

from .tracking import WaveTrack, signed_wrap
from .validation import as_series, check_positive

__all__ = ["OscillatorFit", "fit_oscillator", "separation_series"]


@dataclass(frozen=True)
class OscillatorFit:
    """Parameters of ``a * exp(g t) * cos(f t + phi)`` with a >= 0, f >= 0."""

    amplitude: float
    growth: float
    frequency: float
    phase: float
    residual: float
    converged: bool

    def predict(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.exp(self.growth * t) * np.cos(self.frequency * t + self.phase)


def _fft_peak_frequency(series, dt):
    """Angular frequency of the largest non-DC FFT peak."""
    centered = series - series.mean()
    spectrum = np.abs(np.fft.rfft(centered))
    spectrum[0] = 0.0
    freqs = 2.0 * np.pi * np.fft.rfftfreq(series.size, d=dt)
    return float(freqs[int(np.argmax(spectrum))])


def fit_oscillator(x1, dt=1.0) -> OscillatorFit:
    """Fit a damped cosine to a separation series.

    Parameters
    ----------
    x1 : 1D array, length >= 8
        De-meaned separation samples at uniform spacing.
    dt : float
        Sample spacing in time units.

    Returns
    -------
    OscillatorFit in canonical form (non-negative amplitude and frequency,
    phase in (-pi, pi]); ``converged`` is False when the refinement stopped
    on its iteration budget, in which case the best iterate is returned and
    ``residual`` tells how bad it is.
    """
    series = as_series(x1, "x1")
    if series.size < 8:
        raise ValueError(f"series too short for an oscillator fit: {series.size} < 8")
    check_positive(dt, "dt")
    t = np.arange(series.size) * dt

    f0 = _fft_peak_frequency(series, dt)
    analytic = hilbert(series)
    envelope = np.abs(analytic)
    # Trim edge samples: the analytic-signal envelope is unreliable there.
    margin = max(1, series.size // 20)
    core = slice(margin, series.size - margin)
    safe = np.maximum(envelope[core], 1e-300)
    g0, log_a0 = np.polyfit(t[core], np.log(safe), 1)
    a0 = float(np.exp(log_a0))
    phi0 = float(np.angle(analytic[0]))

    def residuals(p):
        a, g, f, phi = p
        return a * np.exp(g * t) * np.cos(f * t + phi) - series

    result = least_squares(residuals, x0=[a0, g0, f0, phi0], max_nfev=2000)
    a, g, f, phi = result.x
    if a < 0:
        a, phi = -a, phi + np.pi
    if f < 0:
        f, phi = -f, -phi
    phi = float((phi + np.pi) % (2.0 * np.pi) - np.pi)
    if phi == -np.pi:
        phi = np.pi
    return OscillatorFit(
        amplitude=float(a),
        growth=float(g),
        frequency=float(f),
        phase=phi,
        residual=float(np.linalg.norm(result.fun)),
        converged=bool(result.success),
    )


def separation_series(track_a: WaveTrack, track_b: WaveTrack, k_space):
    """De-meaned signed circular separation between two tracks.

    For every time row both tracks cover, takes the minimal signed
    representative of ``x_a - x_b`` modulo K and removes its mean, so the
    series oscillates about zero. The signed representative jumps if the
    separation straddles +-K/2; keep wave pairs away from that seam.

    Returns
    -------
    (t_indices, x1) : int array and float array of equal length.
    """
    a_by_t = {p.t_index: p.x_index for p in track_a.points}
    b_by_t = {p.t_index: p.x_index for p in track_b.points}
    common = sorted(set(a_by_t) & set(b_by_t))
    if len(common) < 2:
        raise ValueError("tracks share fewer than two time rows")
    t_idx = np.array(common, dtype=int)
    raw = signed_wrap(
        np.array([a_by_t[t] for t in common]) - np.array([b_by_t[t] for t in common]),
        k_space,
    )
    return t_idx, raw - raw.mean()
