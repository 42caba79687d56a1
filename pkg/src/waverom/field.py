"""Spatiotemporal field data model, CSV persistence, and fit metrics.

A field is a real matrix ``u(x, t)`` sampled on a spatially periodic domain:
rows are time snapshots, columns are spatial samples, and all spatial index
arithmetic is modulo the number of columns. Files round-trip bit-exactly
through :func:`save_field` / :func:`load_field`.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FieldFormatError, UndefinedMetricError
from .validation import check_field_values, check_positive

__all__ = [
    "SpatiotemporalField",
    "load_field",
    "save_field",
    "variance_explained",
]


@dataclass(frozen=True)
class SpatiotemporalField:
    """Real-valued wave intensity on a 1D-periodic domain.

    Parameters
    ----------
    values : ndarray, shape (n_time, n_space)
        Intensity samples, one row per time step (arbitrary units).
    dt : float
        Time units per row, > 0.

    Notes
    -----
    The spatial domain length equals ``n_space`` (normalized pixel units), so
    positions and speeds are expressed in pixels and pixels per time unit.
    Instances are immutable; the backing array is marked read-only.
    """

    values: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        arr = check_field_values(self.values)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "dt", check_positive(self.dt, "dt"))

    @property
    def n_time(self) -> int:
        return self.values.shape[0]

    @property
    def n_space(self) -> int:
        return self.values.shape[1]

    @property
    def domain_length(self) -> float:
        """Spatial samples per period."""
        return float(self.n_space)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_time) * self.dt

    def with_values(self, values) -> "SpatiotemporalField":
        """New field with the same dt and different values."""
        return SpatiotemporalField(values, dt=self.dt)


def save_field(field: SpatiotemporalField, path) -> None:
    """Write a field as CSV with a ``# K=.. T=.. dt=..`` metadata header.

    Values are written with 17 significant digits so a reload reproduces the
    field bit-exactly.
    """
    path = Path(path)
    header = f"# K={field.n_space} T={field.n_time} dt={field.dt!r}\n"
    try:
        with open(path, "w") as fh:
            fh.write(header)
            np.savetxt(fh, field.values, fmt="%.17g", delimiter=",")
    except OSError as exc:
        raise OSError(f"could not write field to {path}: {exc}") from exc


def _parse_header(line: str, path) -> tuple[int, int, float]:
    if not line.startswith("#"):
        raise FieldFormatError(f"{path}: missing '# K=.. T=.. dt=..' header line")
    entries = {}
    for token in line[1:].split():
        if "=" not in token:
            raise FieldFormatError(f"{path}: malformed header token {token!r}")
        key, _, raw = token.partition("=")
        entries[key] = raw
    try:
        return int(entries["K"]), int(entries["T"]), float(entries["dt"])
    except KeyError as exc:
        raise FieldFormatError(f"{path}: header missing {exc.args[0]}") from exc
    except ValueError as exc:
        raise FieldFormatError(f"{path}: unparsable header value ({exc})") from exc


def load_field(path) -> SpatiotemporalField:
    """Load a field saved by :func:`save_field`.

    Raises
    ------
    FieldFormatError
        On a missing/malformed header, ragged rows, or non-numeric cells; the
        message names the offending row and column (1-based, header excluded).
    """
    path = Path(path)
    with open(path) as fh:
        header = fh.readline()
        k_space, n_time, dt = _parse_header(header.strip(), path)
        rows = []
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != k_space:
                raise FieldFormatError(
                    f"{path}: row {i}: expected {k_space} columns, got {len(cells)}"
                )
            try:
                rows.append(np.array(cells, dtype=float))
            except ValueError:
                for j, cell in enumerate(cells, start=1):
                    try:
                        float(cell)
                    except ValueError:
                        raise FieldFormatError(
                            f"{path}: row {i}, column {j}: non-numeric cell {cell.strip()!r}"
                        ) from None
                raise
    if len(rows) != n_time:
        raise FieldFormatError(f"{path}: header promises T={n_time} rows, found {len(rows)}")
    return SpatiotemporalField(np.vstack(rows), dt=dt)


def variance_explained(truth, pred) -> float:
    """Fraction of variance of ``truth`` explained by ``pred``.

    Returns ``1 - SSE/SST`` where SST is the total variance of ``truth``
    about its mean. May be negative for predictions worse than the mean.

    Raises
    ------
    UndefinedMetricError
        If ``truth`` is constant (SST == 0).
    ValueError
        If the shapes differ.
    """
    truth_arr = np.asarray(getattr(truth, "values", truth), dtype=float)
    pred_arr = np.asarray(getattr(pred, "values", pred), dtype=float)
    if truth_arr.shape != pred_arr.shape:
        raise ValueError(f"shape mismatch: truth {truth_arr.shape} vs pred {pred_arr.shape}")
    sst = float(np.sum((truth_arr - truth_arr.mean()) ** 2))
    if sst == 0.0:
        raise UndefinedMetricError("variance explained is undefined for constant truth (SST=0)")
    sse = float(np.sum((truth_arr - pred_arr) ** 2))
    return 1.0 - sse / sst
