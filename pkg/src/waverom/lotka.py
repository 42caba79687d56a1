"""Predator-prey interaction models for competing wave fronts.

Two waves sharing a fuel supply behave like predator and prey: one wave's
acceleration starves the other. The model is

    dy/dt = alpha * y - beta * y * z
    dz/dt = delta * y * z - gamma * z

integrated with classical fixed-step RK4. Fitting is an exhaustive parameter
sweep scored by the Frobenius norm of the stacked [y, z] error over a
training prefix. The sweep and the scalar simulator share one vectorized
stepping path, so a sweep candidate reproduces its own simulated data
bit-exactly.
"""

from __future__ import annotations

import numpy as np

from dataclasses import dataclass

from .validation import as_series, check_int, check_positive

__all__ = ["LvParams", "LvTrajectory", "lv_simulate", "lv_conserved", "lv_fit_sweep",
           "default_grids"]


@dataclass(frozen=True)
class LvParams:
    """Rates of Lotka-Volterra dynamics, all strictly positive (per unit t)."""

    alpha: float
    beta: float
    delta: float
    gamma: float

    def __post_init__(self):
        for name in ("alpha", "beta", "delta", "gamma"):
            check_positive(getattr(self, name), name)

    def fixed_point(self) -> tuple[float, float]:
        """Coexistence equilibrium (y*, z*) = (gamma/delta, alpha/beta)."""
        return self.gamma / self.delta, self.alpha / self.beta


@dataclass(frozen=True)
class LvTrajectory:
    """Sampled (t, y, z) arrays of equal length."""

    t: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        t, y, z = (np.asarray(v, dtype=float) for v in (self.t, self.y, self.z))
        if not (t.shape == y.shape == z.shape):
            raise ValueError("t, y, z must have equal lengths")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(z))):
            raise ValueError("trajectory contains non-finite values")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)


def _rates(alpha, beta, delta, gamma, y, z):
    return y * (alpha - beta * z), z * (delta * y - gamma)


def _rk4_step(alpha, beta, delta, gamma, y, z, h):
    """One classical RK4 step; inputs may be scalars or candidate arrays."""
    ky1, kz1 = _rates(alpha, beta, delta, gamma, y, z)
    ky2, kz2 = _rates(alpha, beta, delta, gamma, y + 0.5 * h * ky1, z + 0.5 * h * kz1)
    ky3, kz3 = _rates(alpha, beta, delta, gamma, y + 0.5 * h * ky2, z + 0.5 * h * kz2)
    ky4, kz4 = _rates(alpha, beta, delta, gamma, y + h * ky3, z + h * kz3)
    sixth = h / 6.0
    return (
        y + sixth * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4),
        z + sixth * (kz1 + 2.0 * kz2 + 2.0 * kz3 + kz4),
    )


def _sweep_chunk(a, b, d, g, y0, z0, y_train, z_train, h):
    """Accumulated squared error of every candidate against the training data.

    Runs the exact floating-point operation sequence of :func:`_rk4_step`
    with pre-allocated scratch buffers, so a candidate's trajectory is
    bit-identical to :func:`lv_simulate` with the same parameters while the
    sweep stays cache-resident. Overflowed candidates score infinity and are
    parked at the origin (a fixed point) so they stop producing warnings.
    """
    n = a.size
    yy = np.full(n, y0)
    zz = np.full(n, z0)
    err = np.zeros(n)
    diff = np.empty(n)
    buf = [np.empty(n) for _ in range(8)]
    ky1, kz1, ky2, kz2, ky3, kz3, ty, tz = buf
    half = 0.5 * h
    sixth = h / 6.0

    def stage(ky, kz, yin, zin):
        np.multiply(b, zin, out=ky); np.subtract(a, ky, out=ky); np.multiply(yin, ky, out=ky)
        np.multiply(d, yin, out=kz); np.subtract(kz, g, out=kz); np.multiply(zin, kz, out=kz)

    for k in range(1, y_train.size):
        stage(ky1, kz1, yy, zz)
        np.multiply(half, ky1, out=ty); np.add(yy, ty, out=ty)
        np.multiply(half, kz1, out=tz); np.add(zz, tz, out=tz)
        stage(ky2, kz2, ty, tz)
        np.multiply(half, ky2, out=ty); np.add(yy, ty, out=ty)
        np.multiply(half, kz2, out=tz); np.add(zz, tz, out=tz)
        stage(ky3, kz3, ty, tz)
        np.multiply(h, ky3, out=ty); np.add(yy, ty, out=ty)
        np.multiply(h, kz3, out=tz); np.add(zz, tz, out=tz)
        # stage 4 accumulates straight into ky1/kz1: k1 + 2 k2 + 2 k3 + k4
        np.multiply(2.0, ky2, out=ky2); np.add(ky1, ky2, out=ky1)
        np.multiply(2.0, kz2, out=kz2); np.add(kz1, kz2, out=kz1)
        np.multiply(2.0, ky3, out=ky3); np.add(ky1, ky3, out=ky1)
        np.multiply(2.0, kz3, out=kz3); np.add(kz1, kz3, out=kz1)
        stage(ky2, kz2, ty, tz)
        np.add(ky1, ky2, out=ky1); np.multiply(sixth, ky1, out=ky1); np.add(yy, ky1, out=yy)
        np.add(kz1, kz2, out=kz1); np.multiply(sixth, kz1, out=kz1); np.add(zz, kz1, out=zz)

        finite = np.isfinite(yy) & np.isfinite(zz)
        if not finite.all():
            bad = ~finite
            err[bad] = np.inf
            yy[bad] = 0.0
            zz[bad] = 0.0
        np.subtract(yy, y_train[k], out=diff); np.multiply(diff, diff, out=diff)
        np.add(err, diff, out=err)
        np.subtract(zz, z_train[k], out=diff); np.multiply(diff, diff, out=diff)
        np.add(err, diff, out=err)
    return err


def lv_simulate(params: LvParams, y0, z0, n_steps, h) -> LvTrajectory:
    """Integrate the predator-prey system with fixed-step RK4.

    Returns a trajectory of ``n_steps + 1`` samples including the initial
    condition. Raises OverflowError naming the step at which values left the
    finite range.
    """
    if y0 < 0 or z0 < 0:
        raise ValueError("initial populations must be non-negative")
    check_positive(h, "h")
    check_int(n_steps, "n_steps", minimum=1)
    y = np.empty(n_steps + 1)
    z = np.empty(n_steps + 1)
    y[0], z[0] = float(y0), float(z0)
    a, b, d, g = params.alpha, params.beta, params.delta, params.gamma
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            y[k + 1], z[k + 1] = _rk4_step(a, b, d, g, y[k], z[k], h)
            if not (np.isfinite(y[k + 1]) and np.isfinite(z[k + 1])):
                raise OverflowError(f"integration overflowed at step {k + 1}")
    return LvTrajectory(t=np.arange(n_steps + 1) * h, y=y, z=z)


def lv_conserved(params: LvParams, trajectory: LvTrajectory) -> np.ndarray:
    """First integral V = delta*y - gamma*ln(y) + beta*z - alpha*ln(z).

    Exactly conserved by the continuous dynamics; its per-sample drift
    measures the integrator error. Requires positive y and z throughout.
    """
    y, z = trajectory.y, trajectory.z
    if np.any(y <= 0) or np.any(z <= 0):
        raise ValueError("first integral needs strictly positive y and z")
    return (
        params.delta * y - params.gamma * np.log(y)
        + params.beta * z - params.alpha * np.log(z)
    )


def default_grids() -> dict[str, np.ndarray]:
    """Per-parameter sweep grid: 0.01 to 0.30 in steps of 0.01.

    Built by integer division so grid values equal the corresponding float
    literals exactly.
    """
    grid = np.arange(1, 31) / 100.0
    return {"alpha": grid, "beta": grid.copy(), "delta": grid.copy(), "gamma": grid.copy()}


def lv_fit_sweep(y, z, train_len, grids=None, h=1.0, chunk_size=25_000):
    """Exhaustive grid search for the best-fitting rate parameters.

    Every candidate is integrated from ``(y[0], z[0])`` with the same RK4
    stepper as :func:`lv_simulate` and scored by the Frobenius norm of the
    stacked ``[y_hat - y, z_hat - z]`` error over the first ``train_len``
    samples. Ties break toward the lexicographically smallest
    (alpha, beta, delta, gamma). Candidates that overflow score infinity.

    Parameters
    ----------
    y, z : 1D series of equal length
    train_len : int, 2 <= train_len <= len(y)
    grids : mapping with keys alpha, beta, delta, gamma, optional
        Defaults to :func:`default_grids`.
    h : float
        Integration step, normally the series' time spacing.

    Returns
    -------
    (LvParams, training error); raises RuntimeError if every candidate
    overflowed.
    """
    y = as_series(y, "y")
    z = as_series(z, "z")
    if y.size != z.size:
        raise ValueError("y and z must have equal lengths")
    check_int(train_len, "train_len", minimum=2, maximum=y.size)
    check_positive(h, "h")
    if grids is None:
        grids = default_grids()
    axes = []
    for name in ("alpha", "beta", "delta", "gamma"):
        axis = np.asarray(grids[name], dtype=float).ravel()
        if axis.size == 0:
            raise ValueError(f"grid for {name} is empty")
        axes.append(axis)

    mesh = np.meshgrid(*axes, indexing="ij")
    cand = np.stack([m.ravel() for m in mesh])  # (4, n_candidates), lexicographic order
    n_cand = cand.shape[1]

    best_err = np.inf
    best_idx = -1
    y_train, z_train = y[:train_len], z[:train_len]
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(0, n_cand, chunk_size):
            a, b, d, g = (np.ascontiguousarray(row) for row in cand[:, start:start + chunk_size])
            err = _sweep_chunk(a, b, d, g, y[0], z[0], y_train, z_train, h)
            idx = int(np.argmin(err))
            if err[idx] < best_err:
                best_err = float(err[idx])
                best_idx = start + idx
    if not np.isfinite(best_err):
        raise RuntimeError("every sweep candidate overflowed; check the data scaling")
    alpha, beta, delta, gamma = cand[:, best_idx]
    return (
        LvParams(alpha=float(alpha), beta=float(beta), delta=float(delta), gamma=float(gamma)),
        float(np.sqrt(best_err)),
    )
