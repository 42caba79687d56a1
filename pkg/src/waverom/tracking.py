"""Wave-front tracking: peak detection in (x, t) and grouping into tracks.

The pipeline is: per-row periodic peak detection with a prominence threshold
and parabolic sub-pixel refinement, then spectral clustering of the detected
points into one track per wave, then periodic unwrapping so downstream
regression sees continuous positions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np
from scipy.signal import peak_prominences
from sklearn.base import BaseEstimator

from .validation import as_values, check_int, check_positive

__all__ = [
    "PeakPoint",
    "WaveTrack",
    "detect_ridges",
    "cluster_waves",
    "unwrap_track",
    "circular_distance",
    "suggest_n_waves",
    "tracks_to_csv",
    "tracks_from_csv",
    "WaveTracker",
]


@dataclass(frozen=True)
class PeakPoint:
    """One detected wave-front peak: time row, sub-pixel position, height."""

    t_index: int
    x_index: float
    intensity: float


@dataclass
class WaveTrack:
    """Peak points belonging to one traveling wave.

    ``points`` are sorted by time row; ``unwrapped_x`` is the monotone
    continuation of the positions across the periodic seam and satisfies
    ``unwrapped_x[k] == points[k].x_index (mod K)``.
    """

    label: int
    points: list[PeakPoint] = dataclass_field(default_factory=list)
    unwrapped_x: np.ndarray | None = None

    @property
    def t_indices(self) -> np.ndarray:
        return np.array([p.t_index for p in self.points], dtype=int)

    @property
    def x_indices(self) -> np.ndarray:
        return np.array([p.x_index for p in self.points], dtype=float)

    @property
    def intensities(self) -> np.ndarray:
        return np.array([p.intensity for p in self.points], dtype=float)

    def __len__(self) -> int:
        return len(self.points)


def circular_distance(a, b, k_space):
    """Unsigned distance between positions on a circle of circumference K."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % k_space
    return np.minimum(d, k_space - d)


def signed_wrap(delta, k_space):
    """Minimal-magnitude representative of ``delta mod K``, in [-K/2, K/2)."""
    return (np.asarray(delta, dtype=float) + k_space / 2.0) % k_space - k_space / 2.0


def _row_peaks(row, min_prominence, min_separation):
    """Peak indices of one periodic row passing prominence and separation."""
    k = row.size
    left = np.roll(row, 1)
    right = np.roll(row, -1)
    candidates = np.flatnonzero((row > left) & (row >= right))
    if candidates.size == 0:
        return candidates
    # Circular prominence: evaluate on a 3x tiling so bases may cross the seam.
    tiled = np.concatenate([row, row, row])
    proms = peak_prominences(tiled, candidates + k)[0]
    keep = proms >= min_prominence
    candidates = candidates[keep]
    if candidates.size == 0 or min_separation <= 1:
        return candidates
    order = np.lexsort((candidates, -row[candidates]))  # strongest first, index tie-break
    kept: list[int] = []
    for idx in candidates[order]:
        if all(circular_distance(idx, j, k) >= min_separation for j in kept):
            kept.append(int(idx))
    return np.array(sorted(kept), dtype=int)


def detect_ridges(field, min_prominence, min_separation=1):
    """Detect wave-front peaks in every time row of a periodic field.

    Per row, local maxima on the periodic circle are kept when their circular
    prominence is at least ``min_prominence`` and they sit at least
    ``min_separation`` pixels (circular) from every stronger accepted peak.
    Positions are refined to sub-pixel accuracy with a 3-point parabola.

    Parameters
    ----------
    field : SpatiotemporalField or (T, K) array
    min_prominence : float
        Minimum circular prominence of an accepted peak.
    min_separation : int
        Minimum pairwise circular distance in pixels, >= 1.

    Returns
    -------
    list of PeakPoint, sorted by (t_index, x_index). Rows may contribute
    zero points; a constant field yields an empty list.
    """
    values = as_values(field, "field")
    check_positive(min_prominence, "min_prominence", strict=False)
    check_int(min_separation, "min_separation", minimum=1)
    n_time, k = values.shape
    points: list[PeakPoint] = []
    for t in range(n_time):
        row = values[t]
        for i in _row_peaks(row, min_prominence, min_separation):
            ym1, y0, yp1 = row[(i - 1) % k], row[i], row[(i + 1) % k]
            denom = ym1 - 2.0 * y0 + yp1
            if abs(denom) > 1e-12 * max(1.0, abs(y0)):
                delta = 0.5 * (ym1 - yp1) / denom
                delta = float(np.clip(delta, -0.5, 0.5))
            else:
                delta = 0.0
            height = y0 - 0.25 * (ym1 - yp1) * delta
            points.append(PeakPoint(t_index=t, x_index=(i + delta) % k, intensity=float(height)))
    points.sort(key=lambda p: (p.t_index, p.x_index))
    return points


def _scaled_coordinates(points, k_space, time_scale):
    x = np.array([p.x_index for p in points])
    t = np.array([p.t_index for p in points], dtype=float)
    if time_scale is None:
        window = max(t.max() - t.min(), 1.0)
        time_scale = k_space / window
    return x, t * time_scale


def _affinity(x, ts, sample, k_space, kernel_scale):
    dx = circular_distance(x[sample][:, None], x[sample][None, :], k_space)
    dtm = ts[sample][:, None] - ts[sample][None, :]
    return np.exp(-(dx**2 + dtm**2) / (2.0 * kernel_scale**2))


def _normalized_affinity(affinity):
    degrees = affinity.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(degrees, 1e-300))
    return affinity * inv_sqrt[:, None] * inv_sqrt[None, :]


def _spectral_embedding(affinity, n_components):
    sym = _normalized_affinity(affinity)
    _, vecs = np.linalg.eigh(sym)
    emb = vecs[:, -n_components:]
    norms = np.linalg.norm(emb, axis=1)
    return emb / np.maximum(norms, 1e-300)[:, None]


def _subsample(n_points, max_points):
    if n_points > max_points:
        return np.unique(np.linspace(0, n_points - 1, max_points).astype(int))
    return np.arange(n_points)


def suggest_n_waves(points, kernel_scale, k_space, max_waves=6, time_scale=None,
                    max_points=1200, gap_tol=1e-3):
    """Eigengap heuristic: likely number of waves in a peak-point set.

    Well-separated tracks form near-disconnected components of the affinity
    graph, each contributing a normalized-affinity eigenvalue at 1; the
    eigengap to the first within-track mode separates that block from the
    rest. The suggestion is the number of eigenvalues within ``gap_tol`` of
    the top. A suggestion only: long records push within-track modes toward
    1 and crossing tracks merge components, so the cluster count stays a
    user decision. Works best on short windows (the tracking workflow's
    preprocessing regime).
    """
    points = list(points)
    if not points:
        raise ValueError("suggest_n_waves needs a non-empty point set")
    check_int(max_waves, "max_waves", minimum=1)
    x, ts = _scaled_coordinates(points, k_space, time_scale)
    sample = _subsample(len(points), max_points)
    sym = _normalized_affinity(_affinity(x, ts, sample, k_space, kernel_scale))
    eigenvalues = np.linalg.eigvalsh(sym)[::-1]
    near_top = int(np.sum(eigenvalues >= eigenvalues[0] - gap_tol))
    return max(1, min(near_top, max_waves, len(points)))


def _kmeans(emb, n_clusters, seed, n_iter=200):
    """Lloyd's algorithm with seeded k-means++ initialization."""
    rng = np.random.default_rng(seed)
    n = emb.shape[0]
    centers = np.empty((n_clusters, emb.shape[1]))
    centers[0] = emb[rng.integers(n)]
    closest = np.full(n, np.inf)
    for c in range(1, n_clusters):
        dist = np.sum((emb - centers[c - 1]) ** 2, axis=1)
        closest = np.minimum(closest, dist)
        total = closest.sum()
        if total <= 0:
            centers[c] = emb[rng.integers(n)]
            continue
        centers[c] = emb[np.searchsorted(np.cumsum(closest), rng.random() * total)]
    labels = np.zeros(n, dtype=int)
    for _ in range(n_iter):
        d2 = ((emb[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        for c in range(n_clusters):
            mask = new_labels == c
            if mask.any():
                centers[c] = emb[mask].mean(axis=0)
            else:  # re-seed an empty cluster on the farthest point
                new_labels[np.argmax(d2.min(axis=1))] = c
                centers[c] = emb[new_labels == c].mean(axis=0)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels


def cluster_waves(points, n_waves, kernel_scale, k_space, time_scale=None, seed=0,
                  max_points=1200):
    """Group peak points into one track per wave via spectral clustering.

    The affinity is ``exp(-d^2 / (2 * kernel_scale^2))`` where ``d`` combines
    circular distance in x with time distance scaled by ``K / T_window`` so
    the two axes are commensurate on long records. The k-means stage uses a
    seeded deterministic initialization, and output labels are canonicalized
    by each track's earliest (t, x) point, so results are reproducible.

    When more than ``max_points`` points are given, clustering runs on an
    evenly strided subsample and the remaining points take the label of their
    nearest sampled neighbor (same metric); the full eigendecomposition would
    otherwise dominate the runtime of long records.

    Points from different waves that coincide in (x, t) — crossing or
    counter-rotating fronts — are a known limitation: the affinity cannot
    separate them and assignment near crossings is best-effort.

    Separation is effectively measured perpendicular to the tracks in the
    scaled (x, t) plane, so fast fronts over long records form steep, nearly
    parallel lines whose effective separation shrinks with the slope. Expect
    exact label recovery when that separation is at least ~10 kernel_scale;
    the intended workflow keeps tracks shallow by clustering either a short
    time window or an already-preprocessed (coarsely straightened) field.

    Parameters
    ----------
    points : list of PeakPoint
    n_waves : int
        Number of tracks to return, >= 1. Must not exceed ``len(points)``.
    kernel_scale : float
        Gaussian affinity bandwidth, in pixels.
    k_space : int
        Spatial samples per period (for circular distance).
    time_scale : float, optional
        Override for the time-axis scaling factor; defaults to
        ``k_space / (t_max - t_min + 1)``.
    seed : int
        Seed for the k-means initialization.

    Returns
    -------
    list of WaveTrack, length ``n_waves``, labels 0..n_waves-1, each with
    points sorted by time and ``unwrapped_x`` filled in.
    """
    points = list(points)
    check_int(n_waves, "n_waves", minimum=1)
    check_positive(kernel_scale, "kernel_scale")
    if not points:
        raise ValueError("cluster_waves needs a non-empty point set")
    if n_waves > len(points):
        raise ValueError(f"n_waves={n_waves} exceeds the number of points ({len(points)})")

    if n_waves == 1:
        members = sorted(points, key=lambda p: (p.t_index, p.x_index))
        return [unwrap_track(WaveTrack(label=0, points=members), k_space)]

    x, ts = _scaled_coordinates(points, k_space, time_scale)
    sample = _subsample(len(points), max_points)
    affinity = _affinity(x, ts, sample, k_space, kernel_scale)
    emb = _spectral_embedding(affinity, n_waves)
    sample_labels = _kmeans(emb, n_waves, seed)

    labels = np.empty(len(points), dtype=int)
    labels[sample] = sample_labels
    rest = np.setdiff1d(np.arange(len(points)), sample)
    if rest.size:
        dx = circular_distance(x[rest][:, None], x[sample][None, :], k_space)
        dtm = ts[rest][:, None] - ts[sample][None, :]
        nearest = np.argmin(dx**2 + dtm**2, axis=1)
        labels[rest] = sample_labels[nearest]

    # Canonical labels: order clusters by their earliest (t, x) point.
    keys = []
    for c in range(n_waves):
        members = [points[i] for i in np.flatnonzero(labels == c)]
        members.sort(key=lambda p: (p.t_index, p.x_index))
        keys.append(((members[0].t_index, members[0].x_index), members))
    keys.sort(key=lambda item: item[0])

    tracks = []
    for new_label, (_, members) in enumerate(keys):
        tracks.append(unwrap_track(WaveTrack(label=new_label, points=members), k_space))
    return tracks


def unwrap_track(track: WaveTrack, k_space) -> WaveTrack:
    """Fill in the monotone periodic continuation of a track's positions.

    Consecutive unwrapped positions differ by the minimal-magnitude
    representative of the wrapped step, so re-wrapping modulo K reproduces
    the raw positions exactly. The first point is unchanged.
    """
    if not track.points:
        return WaveTrack(label=track.label, points=[], unwrapped_x=np.array([]))
    pts = sorted(track.points, key=lambda p: (p.t_index, p.x_index))
    x = np.array([p.x_index for p in pts], dtype=float)
    steps = signed_wrap(np.diff(x), k_space)
    unwrapped = np.concatenate([[x[0]], x[0] + np.cumsum(steps)])
    return WaveTrack(label=track.label, points=pts, unwrapped_x=unwrapped)


def tracks_to_csv(tracks, path) -> None:
    """Write tracks as CSV with columns label, t_index, x_index, unwrapped_x."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "t_index", "x_index", "unwrapped_x"])
        for track in tracks:
            unwrapped = track.unwrapped_x
            for i, p in enumerate(track.points):
                u = float(unwrapped[i]) if unwrapped is not None else float("nan")
                writer.writerow([track.label, p.t_index, repr(float(p.x_index)), repr(u)])


def tracks_from_csv(path) -> list[WaveTrack]:
    """Load tracks written by :func:`tracks_to_csv` (intensity not stored)."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["label", "t_index", "x_index", "unwrapped_x"]:
            raise ValueError(f"{path}: unexpected track CSV header {header!r}")
        for row in reader:
            rows.append((int(row[0]), int(row[1]), float(row[2]), float(row[3])))
    tracks: dict[int, WaveTrack] = {}
    for label, t_idx, x_idx, unwrapped in rows:
        track = tracks.setdefault(label, WaveTrack(label=label, points=[], unwrapped_x=None))
        track.points.append(PeakPoint(t_index=t_idx, x_index=x_idx, intensity=float("nan")))
        track.unwrapped_x = (
            np.array([unwrapped])
            if track.unwrapped_x is None
            else np.append(track.unwrapped_x, unwrapped)
        )
    return [tracks[label] for label in sorted(tracks)]


class WaveTracker(BaseEstimator):
    """Detect and group traveling-wave peaks (estimator form).

    ``fit`` runs ridge detection and spectral clustering on a field;
    fitted attributes are ``points_`` and ``tracks_``.

    Parameters
    ----------
    n_waves : int
    min_prominence : float
    min_separation : int
    kernel_scale : float
    seed : int
    """

    def __init__(self, n_waves=1, min_prominence=0.1, min_separation=3,
                 kernel_scale=5.0, seed=0):
        self.n_waves = n_waves
        self.min_prominence = min_prominence
        self.min_separation = min_separation
        self.kernel_scale = kernel_scale
        self.seed = seed

    def fit(self, X, y=None):
        values = as_values(X, "X")
        self.points_ = detect_ridges(values, self.min_prominence, self.min_separation)
        self.tracks_ = cluster_waves(
            self.points_, self.n_waves, self.kernel_scale, values.shape[1], seed=self.seed
        )
        return self

    def fit_predict(self, X, y=None):
        """Fit and return the track list."""
        return self.fit(X).tracks_
