"""Sparse wave-speed model regression (relaxed sparse regression solver).

Fits, per wave, the unwrapped peak positions as a sparse combination of
library functions of time. The objective is

    1/2 ||W . (X - T C)||_F^2  +  lambda * R(B)  +  1/(2 zeta) ||C - B||_F^2

minimized by alternating exact block updates: a ridge-regularized weighted
least-squares solve for C (closed form) and the proximal operator of
``lambda * R`` for B (soft threshold for l1, hard threshold for l0). With the
0/1 mask W fixed from clustering the problem separates per wave column, and
each alternation cannot increase the objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConditioningError
from .library import FunctionLibrary
from .validation import check_int, check_positive

__all__ = ["SpeedModel", "fit_sr3", "speed_model_to_json"]

_COND_LIMIT = 1e13


@dataclass
class SpeedModel:
    """Fitted sparse speed models for a set of waves.

    ``coefficients`` (C) and ``sparse_coefficients`` (B) are
    (n_terms, n_waves); column j models wave j's unwrapped position as a
    function of time. ``mask`` (W) is the 0/1 point-to-wave assignment the
    fit used. Thresholding lives in B; predictions use C.
    """

    coefficients: np.ndarray
    sparse_coefficients: np.ndarray
    mask: np.ndarray
    lam: float
    zeta: float
    regularizer: str
    objective: float
    objective_history: np.ndarray
    converged: bool
    term_names: tuple[str, ...]
    library: FunctionLibrary

    @property
    def n_waves(self) -> int:
        return self.coefficients.shape[1]

    def predict(self, t, wave=0) -> np.ndarray:
        """Modeled unwrapped position of one wave at times ``t``."""
        return self.library.evaluate(t) @ self.coefficients[:, wave]

    def active_terms(self, wave=0, tol=1e-10) -> list[str]:
        """Names of terms with nonzero sparse coefficient for one wave."""
        b = self.sparse_coefficients[:, wave]
        return [name for name, value in zip(self.term_names, b) if abs(value) > tol]


def _regularizer_value(b: np.ndarray, regularizer: str) -> float:
    if regularizer == "l1":
        return float(np.abs(b).sum())
    return float(np.count_nonzero(b))


def _prox(c: np.ndarray, threshold: float, regularizer: str) -> np.ndarray:
    if regularizer == "l1":
        return np.sign(c) * np.maximum(np.abs(c) - threshold, 0.0)
    # l0: prox of (threshold) * ||.||_0 with the 1/(2 zeta) coupling is a
    # hard threshold at sqrt(2 * lambda * zeta); the threshold argument here
    # is lambda * zeta, shared with the l1 branch.
    return np.where(np.abs(c) > np.sqrt(2.0 * threshold), c, 0.0)


def fit_sr3(tracks, library: FunctionLibrary, lam=None, zeta=1.0, regularizer="l1",
            max_iter=500, tol=1e-8, dt=1.0) -> SpeedModel:
    """Fit sparse speed models to unwrapped wave tracks.

    Parameters
    ----------
    tracks : list of WaveTrack
        Each must carry ``unwrapped_x`` and at least ``len(library)`` points.
    library : FunctionLibrary
        Candidate functions of time; evaluated at ``t_index * dt``.
    lam : float, optional
        Sparsity weight; defaults to ``0.1 * max_j max|T_j' x_j|``
        (scale-aware). ``lam=0`` disables sparsity, and the fixed point then
        solves the weighted normal equations exactly.
    zeta : float
        Relaxation strength coupling C to B, > 0.
    regularizer : {"l1", "l0"}
    max_iter, tol : stopping rule on the objective decrease.
    dt : float
        Time units per row index.

    Returns
    -------
    SpeedModel with the final objective value; ``converged`` is False when
    the iteration budget ran out first (best iterate still returned).

    Raises
    ------
    ConditioningError
        When the regularized normal matrix is numerically singular (rank-
        deficient library with huge zeta); decrease zeta or prune the library.
    """
    if regularizer not in ("l1", "l0"):
        raise ValueError(f"regularizer must be 'l1' or 'l0', got {regularizer!r}")
    check_positive(zeta, "zeta")
    check_positive(dt, "dt")
    check_int(max_iter, "max_iter", minimum=1)
    tracks = list(tracks)
    if not tracks:
        raise ValueError("fit_sr3 needs at least one track")
    n_terms = len(library)

    thetas, xs = [], []
    for track in tracks:
        if track.unwrapped_x is None:
            raise ValueError(f"track {track.label} has no unwrapped positions")
        if len(track) < n_terms:
            raise ValueError(
                f"track {track.label} has {len(track)} points; needs >= {n_terms}"
            )
        t = track.t_indices * dt
        thetas.append(library.evaluate(t))
        xs.append(np.asarray(track.unwrapped_x, dtype=float))

    n_waves = len(tracks)
    offsets = np.cumsum([0] + [x.size for x in xs])
    mask = np.zeros((offsets[-1], n_waves))
    for j in range(n_waves):
        mask[offsets[j]:offsets[j + 1], j] = 1.0

    if lam is None:
        lam = 0.1 * max(float(np.max(np.abs(th.T @ x))) for th, x in zip(thetas, xs))
    lam = check_positive(lam, "lam", strict=False)

    # Per-wave SVD factors for the closed-form ridge update.
    factors = []
    for j, theta in enumerate(thetas):
        u, s, vt = np.linalg.svd(theta, full_matrices=False)
        gains = s**2 + 1.0 / zeta
        if gains.max() / gains.min() > _COND_LIMIT:
            raise ConditioningError(
                f"library matrix for wave {j} is numerically rank-deficient at "
                f"zeta={zeta:g}; decrease zeta (stronger relaxation) or remove "
                "redundant library terms"
            )
        factors.append((vt.T, gains, theta.T @ xs[j]))

    def c_update(b):
        c = np.empty((n_terms, n_waves))
        for j, (v, gains, theta_t_x) in enumerate(factors):
            rhs = theta_t_x + b[:, j] / zeta
            c[:, j] = v @ ((v.T @ rhs) / gains)
        return c

    def objective(c, b):
        fit_cost = sum(
            0.5 * float(np.sum((xs[j] - thetas[j] @ c[:, j]) ** 2)) for j in range(n_waves)
        )
        return (
            fit_cost
            + lam * _regularizer_value(b, regularizer)
            + 0.5 / zeta * float(np.sum((c - b) ** 2))
        )

    b = np.zeros((n_terms, n_waves))
    c = c_update(b)
    history = [objective(c, b)]
    converged = False
    for _ in range(max_iter):
        b = _prox(c, lam * zeta, regularizer)
        c = c_update(b)
        history.append(objective(c, b))
        if history[-2] - history[-1] < tol:
            converged = True
            break

    return SpeedModel(
        coefficients=c,
        sparse_coefficients=b,
        mask=mask,
        lam=float(lam),
        zeta=float(zeta),
        regularizer=regularizer,
        objective=float(history[-1]),
        objective_history=np.array(history),
        converged=converged,
        term_names=tuple(library.names),
        library=library,
    )


def speed_model_to_json(model: SpeedModel, path=None) -> str:
    """Serialize a fitted speed model (terms, C, B, active terms, objective)."""
    doc = {
        "terms": [
            {"name": term.name, "params": list(term.params)} for term in model.library.terms
        ],
        "coefficients": model.coefficients.tolist(),
        "sparse_coefficients": model.sparse_coefficients.tolist(),
        "active_terms": [model.active_terms(j) for j in range(model.n_waves)],
        "lambda": model.lam,
        "zeta": model.zeta,
        "regularizer": model.regularizer,
        "objective": model.objective,
        "converged": model.converged,
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
