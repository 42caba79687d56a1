"""Co-moving coordinate frames for traveling waves.

Shifting happens in two stages. A preprocessing stage tracks peaks over a
short initial window, fits a straight line to each wave, and removes the
average linear speed from the whole record — fast fronts over long records
need this coarse alignment before anything else works. A refining stage then
re-detects peaks on the preprocessed field, fits per-wave models over a
richer function library, and shifts by the chosen wave's fitted trajectory so
that wave sits still.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .field import SpatiotemporalField
from .library import FunctionLibrary, build_library
from .sr3 import fit_sr3
from .tracking import cluster_waves, detect_ridges
from .validation import as_values, check_int

__all__ = [
    "ShiftSpec",
    "shift_field",
    "preprocess_shift",
    "refine_shift",
    "ComovingFrame",
]


@dataclass(frozen=True)
class ShiftSpec:
    """Per-row spatial shifts (pixels) and the interpolation rule."""

    offsets: np.ndarray
    interpolation: str = "linear"

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        if offsets.ndim != 1 or not np.all(np.isfinite(offsets)):
            raise ValueError("offsets must be a finite 1D array")
        object.__setattr__(self, "offsets", offsets)
        if self.interpolation not in ("nearest", "linear"):
            raise ValueError(f"interpolation must be 'nearest' or 'linear', got {self.interpolation!r}")

    def negated(self) -> "ShiftSpec":
        return ShiftSpec(-self.offsets, self.interpolation)


def shift_field(field, spec: ShiftSpec):
    """Circularly translate each time row by ``-offsets[r]`` pixels.

    Content at position p moves to p - offsets[r], with periodic wrap.
    Fractional offsets use circular linear interpolation (row intensity is
    preserved to rounding); "nearest" rounds offsets to whole pixels and is
    bit-exact.

    Accepts a field or a 2D array and returns the same kind.
    """
    values = as_values(field, "field")
    n_time, k = values.shape
    offsets = spec.offsets
    if offsets.shape != (n_time,):
        raise ValueError(f"offsets length {offsets.shape[0]} != n_time {n_time}")

    cols = np.arange(k)
    if spec.interpolation == "nearest":
        m = np.rint(offsets).astype(int) % k
        idx = (cols[None, :] + m[:, None]) % k
        shifted = np.take_along_axis(values, idx, axis=1)
    else:
        base = np.floor(offsets).astype(int)
        frac = (offsets - base)[:, None]
        idx0 = (cols[None, :] + base[:, None]) % k
        idx1 = (idx0 + 1) % k
        shifted = (1.0 - frac) * np.take_along_axis(values, idx0, axis=1)
        shifted += frac * np.take_along_axis(values, idx1, axis=1)

    if isinstance(field, SpatiotemporalField):
        return field.with_values(shifted)
    return shifted


_LINEAR = build_library({"linear"})


def _track_field(field, n_waves, min_prominence, min_separation, kernel_scale, seed):
    values = as_values(field, "field")
    points = detect_ridges(values, min_prominence, min_separation)
    if not points:
        raise ValueError("no peaks detected; lower min_prominence or check the data")
    return cluster_waves(points, n_waves, kernel_scale, values.shape[1], seed=seed)


def preprocess_shift(field, window=10, n_waves=1, min_prominence=0.1,
                     min_separation=3, kernel_scale=5.0, seed=0):
    """Remove the average linear wave speed, estimated on a short window.

    Tracks peaks over the first ``window`` rows only, fits a straight line to
    each wave, and shifts the whole record by the mean slope.

    Returns
    -------
    (shifted field, mean speed) — the speed is in pixels per time unit, so
    row r is shifted by ``speed * r * dt`` pixels.

    Raises
    ------
    ValueError
        If no peaks are detected in the window.
    """
    if isinstance(field, np.ndarray):
        field = SpatiotemporalField(field)
    check_int(window, "window", minimum=2, maximum=field.n_time)
    head = SpatiotemporalField(field.values[:window], dt=field.dt)
    tracks = _track_field(head, n_waves, min_prominence, min_separation, kernel_scale, seed)
    model = fit_sr3(tracks, _LINEAR, lam=0.0, zeta=1e6, dt=field.dt)
    slope_row = _LINEAR.names.index("t")
    mean_speed = float(np.mean(model.coefficients[slope_row, :]))
    offsets = mean_speed * np.arange(field.n_time) * field.dt
    return shift_field(field, ShiftSpec(offsets, "linear")), mean_speed


def _refine_with_model(field, library, wave_index, n_waves, min_prominence,
                       min_separation, kernel_scale, lam, zeta, regularizer, seed):
    tracks = _track_field(field, n_waves, min_prominence, min_separation, kernel_scale, seed)
    check_int(wave_index, "wave_index", minimum=0, maximum=len(tracks) - 1)
    model = fit_sr3(tracks, library, lam=lam, zeta=zeta, regularizer=regularizer, dt=field.dt)
    trajectory = model.predict(field.times, wave=wave_index)
    offsets = trajectory - trajectory[0]
    return shift_field(field, ShiftSpec(offsets, "linear")), model, tracks


def refine_shift(field, library: FunctionLibrary, wave_index=0, n_waves=1,
                 min_prominence=0.1, min_separation=3, kernel_scale=5.0,
                 lam=None, zeta=1.0, regularizer="l1", seed=0):
    """Shift a preprocessed field into the frame of one wave.

    Peaks are re-detected on the (already preprocessed) field, per-wave
    models are fitted over the full library, and every row is shifted by the
    chosen wave's fitted trajectory relative to its starting position, making
    that wave stationary.
    """
    if isinstance(field, np.ndarray):
        field = SpatiotemporalField(field)
    shifted, _, _ = _refine_with_model(
        field, library, wave_index, n_waves, min_prominence, min_separation,
        kernel_scale, lam, zeta, regularizer, seed,
    )
    return shifted


class ComovingFrame(BaseEstimator, TransformerMixin):
    """Learn a co-moving frame for one wave and shift fields into it.

    ``fit`` runs the full two-stage workflow (window-limited linear
    preprocessing, then a refining fit over ``library``); ``transform``
    replays both shifts on a field of the same length. Fitted attributes:

    - ``mean_speed_`` : linear speed removed by the preprocessing stage
      (pixels per time unit)
    - ``model_`` : the refining :class:`SpeedModel`
    - ``tracks_`` : tracks detected on the preprocessed field
    - ``preprocess_offsets_``, ``refine_offsets_`` : per-row shifts (pixels)

    Parameters mirror the functional API; ``library=None`` refines with the
    linear library only.
    """

    def __init__(self, n_waves=1, wave_index=0, window=10, library=None,
                 min_prominence=0.1, min_separation=3, kernel_scale=5.0,
                 lam=None, zeta=1.0, regularizer="l1", seed=0):
        self.n_waves = n_waves
        self.wave_index = wave_index
        self.window = window
        self.library = library
        self.min_prominence = min_prominence
        self.min_separation = min_separation
        self.kernel_scale = kernel_scale
        self.lam = lam
        self.zeta = zeta
        self.regularizer = regularizer
        self.seed = seed

    def fit(self, X, y=None):
        field = X if isinstance(X, SpatiotemporalField) else SpatiotemporalField(as_values(X))
        track_kw = dict(
            n_waves=self.n_waves,
            min_prominence=self.min_prominence,
            min_separation=self.min_separation,
            kernel_scale=self.kernel_scale,
            seed=self.seed,
        )
        preprocessed, mean_speed = preprocess_shift(field, window=self.window, **track_kw)
        self.mean_speed_ = mean_speed
        self.preprocess_offsets_ = mean_speed * np.arange(field.n_time) * field.dt

        library = self.library if self.library is not None else _LINEAR
        self.tracks_ = _track_field(preprocessed, **track_kw)
        check_int(self.wave_index, "wave_index", minimum=0, maximum=len(self.tracks_) - 1)
        self.model_ = fit_sr3(
            self.tracks_, library, lam=self.lam, zeta=self.zeta,
            regularizer=self.regularizer, dt=field.dt,
        )
        trajectory = self.model_.predict(field.times, wave=self.wave_index)
        self.refine_offsets_ = trajectory - trajectory[0]
        return self

    def transform(self, X):
        """Apply the preprocessing shift then the refining shift."""
        first = shift_field(X, ShiftSpec(self.preprocess_offsets_, "linear"))
        return shift_field(first, ShiftSpec(self.refine_offsets_, "linear"))

    def inverse_transform(self, X):
        """Undo both shifts (within linear-interpolation tolerance)."""
        first = shift_field(X, ShiftSpec(-self.refine_offsets_, "linear"))
        return shift_field(first, ShiftSpec(-self.preprocess_offsets_, "linear"))
