"""Low-rank analysis of wave fields: POD/SVD and robust PCA.

POD is the truncated SVD of the space-by-time data matrix; robust PCA splits
a field into a low-rank part plus a sparse part by principal component
pursuit (inexact augmented-Lagrangian alternation of singular-value
thresholding and entrywise soft thresholding).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .field import SpatiotemporalField
from .validation import as_values, check_int, check_positive

__all__ = ["ModalDecomposition", "pod", "rpca", "POD", "RobustPCA"]


@dataclass(frozen=True)
class ModalDecomposition:
    """Truncated SVD of a field, space-major.

    ``modes`` (K, r) has orthonormal columns; ``time_coeffs`` (r, T) rows are
    already scaled by the singular values, so ``modes @ time_coeffs`` is the
    rank-r reconstruction (space by time). ``total_energy`` is the squared
    Frobenius norm of the full data matrix, i.e. the sum over *all* squared
    singular values, so energy fractions do not depend on the truncation.
    """

    modes: np.ndarray
    singular_values: np.ndarray
    time_coeffs: np.ndarray
    total_energy: float

    @property
    def rank(self) -> int:
        return self.modes.shape[1]

    @property
    def energy_fractions(self) -> np.ndarray:
        return self.singular_values**2 / self.total_energy

    def reconstruct(self) -> np.ndarray:
        """Rank-r reconstruction in (time, space) layout."""
        return (self.modes @ self.time_coeffs).T


def pod(field, rank) -> ModalDecomposition:
    """Proper orthogonal decomposition (truncated SVD) of a field.

    Parameters
    ----------
    field : SpatiotemporalField or (T, K) array
    rank : int, 1 <= rank <= min(K, T)
    """
    values = as_values(field, "field")
    n_time, k = values.shape
    rank = check_int(rank, "rank", minimum=1, maximum=min(k, n_time))
    u, s, vt = np.linalg.svd(values.T, full_matrices=False)
    return ModalDecomposition(
        modes=u[:, :rank],
        singular_values=s[:rank],
        time_coeffs=s[:rank, None] * vt[:rank],
        total_energy=float(np.sum(s**2)),
    )


def _svt(matrix, threshold):
    """Singular-value thresholding."""
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    s = np.maximum(s - threshold, 0.0)
    keep = s > 0
    return (u[:, keep] * s[keep]) @ vt[keep]


def _soft(matrix, threshold):
    return np.sign(matrix) * np.maximum(np.abs(matrix) - threshold, 0.0)


def rpca(field, mu=None, lambda_rpca=None, tol=1e-9, max_iter=500):
    """Split a field into low-rank plus sparse parts (principal component pursuit).

    Solves ``min ||L||_* + lambda ||S||_1 s.t. L + S = M`` by the inexact
    augmented-Lagrangian method: alternate singular-value thresholding on L
    and entrywise soft thresholding on S while increasing the penalty.

    Parameters
    ----------
    field : SpatiotemporalField or 2D array
    mu : float, optional
        Initial penalty; defaults to ``1.25 / ||M||_2``.
    lambda_rpca : float, optional
        Sparsity weight; defaults to ``1 / sqrt(max(K, T))``.
    tol : float
        Relative Frobenius feasibility ``||M - L - S||_F <= tol ||M||_F``.
    max_iter : int

    Returns
    -------
    (low_rank, sparse) of the same kind as the input; ``L + S`` equals the
    input within ``tol``. A RuntimeWarning flags non-convergence (the best
    iterate is still returned).
    """
    values = as_values(field, "field")
    check_positive(tol, "tol")
    check_int(max_iter, "max_iter", minimum=1)
    norm_fro = np.linalg.norm(values)
    if norm_fro == 0.0:
        zero = np.zeros_like(values)
        return _wrap_like(field, zero), _wrap_like(field, zero.copy())

    spectral = np.linalg.norm(values, 2)
    lam = 1.0 / np.sqrt(max(values.shape)) if lambda_rpca is None else check_positive(lambda_rpca, "lambda_rpca")
    mu = 1.25 / spectral if mu is None else check_positive(mu, "mu")
    mu_max = mu * 1e7
    rho = 1.5

    dual = values / max(spectral, np.max(np.abs(values)) / lam)
    sparse = np.zeros_like(values)
    low_rank = np.zeros_like(values)
    converged = False
    for _ in range(max_iter):
        low_rank = _svt(values - sparse + dual / mu, 1.0 / mu)
        sparse = _soft(values - low_rank + dual / mu, lam / mu)
        residual = values - low_rank - sparse
        dual = dual + mu * residual
        mu = min(mu * rho, mu_max)
        if np.linalg.norm(residual) <= tol * norm_fro:
            converged = True
            break
    if not converged:
        warnings.warn(
            "robust PCA did not reach the feasibility tolerance; returning the best iterate",
            RuntimeWarning,
            stacklevel=2,
        )
    return _wrap_like(field, low_rank), _wrap_like(field, sparse)


def _wrap_like(template, values):
    if isinstance(template, SpatiotemporalField):
        return template.with_values(values)
    return values


class POD(BaseEstimator, TransformerMixin):
    """Truncated-SVD basis of time snapshots (rows are time, columns space).

    Fitted attributes: ``components_`` (rank, K) orthonormal spatial modes,
    ``singular_values_``, ``total_energy_``, ``energy_fractions_``.
    """

    def __init__(self, rank=1):
        self.rank = rank

    def fit(self, X, y=None):
        decomp = pod(X, self.rank)
        self.components_ = decomp.modes.T
        self.singular_values_ = decomp.singular_values
        self.total_energy_ = decomp.total_energy
        self.energy_fractions_ = decomp.energy_fractions
        self.decomposition_ = decomp
        return self

    def transform(self, X):
        """Project snapshots onto the modes; returns (T, rank) coefficients."""
        return as_values(X, "X") @ self.components_.T

    def inverse_transform(self, coeffs):
        return np.asarray(coeffs) @ self.components_


class RobustPCA(BaseEstimator, TransformerMixin):
    """Principal component pursuit as a (transductive) estimator.

    ``fit_transform(X)`` returns the low-rank part; the sparse part and the
    convergence flag live in ``sparse_`` and ``converged_``.
    """

    def __init__(self, mu=None, lambda_rpca=None, tol=1e-9, max_iter=500):
        self.mu = mu
        self.lambda_rpca = lambda_rpca
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            low_rank, sparse = rpca(
                X, mu=self.mu, lambda_rpca=self.lambda_rpca, tol=self.tol, max_iter=self.max_iter
            )
        self.low_rank_ = as_values(low_rank, "low_rank")
        self.sparse_ = as_values(sparse, "sparse")
        self.converged_ = not any(issubclass(w.category, RuntimeWarning) for w in caught)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).low_rank_
