"""Exact dynamic mode decomposition and eigen-reconstruction forecasts.

Given snapshots u_0..u_{T-1}, the best-fit linear map advancing one step is
eigendecomposed through a rank-r SVD; the data is then represented as
u_k = sum_j phi_j lambda_j^k b_j, which evaluates at any k, past or future.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .validation import check_int

__all__ = ["DmdModel", "exact_dmd", "dmd_forecast", "DMD"]


@dataclass(frozen=True)
class DmdModel:
    """Eigentriples of the best-fit one-step linear operator.

    ``eigenvalues[j]`` advances mode j by one time step; ``modes`` is
    (n_features, r); ``amplitudes`` are the initial-condition coordinates in
    the mode basis. ``continuous_eigenvalues`` converts to per-time-unit
    rates: real part growth/decay, imaginary part angular frequency.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    dt: float
    squeeze_output: bool = False

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    @property
    def continuous_eigenvalues(self) -> np.ndarray:
        return np.log(self.eigenvalues) / self.dt


def exact_dmd(data, rank, dt=1.0) -> DmdModel:
    """Fit an exact DMD model of the given rank.

    Parameters
    ----------
    data : SpatiotemporalField, (T, n_features) array, or 1D series
        Snapshots in time order, at least two of them.
    rank : int, 1 <= rank <= min(n_features, T - 1)
        SVD truncation; silently reduced to the numerical rank of the data
        when smaller.
    dt : float
        Used only when ``data`` has no ``dt`` of its own.

    Raises
    ------
    ValueError
        For degenerate (all-zero) data or an out-of-range rank.
    """
    dt = float(getattr(data, "dt", dt))
    values = np.asarray(getattr(data, "values", data), dtype=float)
    squeeze = values.ndim == 1
    if squeeze:
        values = values[:, None]
    if values.ndim != 2 or values.shape[0] < 2:
        raise ValueError("data must hold at least two snapshots in time order")
    n_time, n_feat = values.shape
    check_int(rank, "rank", minimum=1, maximum=min(n_feat, n_time - 1))

    x = values[:-1].T
    x_next = values[1:].T
    if not np.any(x):
        raise ValueError("snapshot matrix is zero; dynamics are degenerate")

    u, s, vt = np.linalg.svd(x, full_matrices=False)
    r = min(rank, int(np.sum(s > s[0] * 1e-13)))
    u, s, vt = u[:, :r], s[:r], vt[:r]

    reduced = u.conj().T @ x_next @ vt.conj().T / s
    eigvals, eigvecs = np.linalg.eig(reduced)

    # Exact modes; fall back to projected modes for (near-)zero eigenvalues.
    raw = x_next @ vt.conj().T @ (eigvecs / s[:, None])
    modes = np.empty_like(raw)
    for j, lam in enumerate(eigvals):
        if abs(lam) > 1e-12:
            modes[:, j] = raw[:, j] / lam
        else:
            modes[:, j] = (u @ eigvecs)[:, j]

    amplitudes = np.linalg.lstsq(modes, values[0].astype(complex), rcond=None)[0]
    return DmdModel(
        eigenvalues=eigvals, modes=modes, amplitudes=amplitudes, dt=dt,
        squeeze_output=squeeze,
    )


def dmd_forecast(model: DmdModel, k_max) -> np.ndarray:
    """Evaluate the eigen-reconstruction for k = 0..k_max (real part).

    Returns an array of shape (k_max + 1, n_features), squeezed to 1D when
    the model was fitted on a scalar series.
    """
    check_int(k_max, "k_max", minimum=0)
    k = np.arange(k_max + 1)
    growth = model.eigenvalues[None, :] ** k[:, None]
    out = np.real((growth * model.amplitudes[None, :]) @ model.modes.T)
    return out[:, 0] if model.squeeze_output else out


class DMD(BaseEstimator):
    """Exact DMD as an estimator: ``fit`` snapshots, ``predict`` a horizon.

    Fitted attributes: ``eigenvalues_``, ``amplitudes_``, ``components_``
    (rank, n_features) complex modes, ``model_``.
    """

    def __init__(self, rank=2, dt=1.0):
        self.rank = rank
        self.dt = dt

    def fit(self, X, y=None):
        self.model_ = exact_dmd(X, rank=self.rank, dt=self.dt)
        self.eigenvalues_ = self.model_.eigenvalues
        self.amplitudes_ = self.model_.amplitudes
        self.components_ = self.model_.modes.T
        return self

    def predict(self, k_max):
        """Snapshots k = 0..k_max from the fitted eigen-reconstruction."""
        return dmd_forecast(self.model_, k_max)
