"""Pipeline orchestration: configured stages, artifacts, and a manifest.

A pipeline takes one input field (a CSV path or a synthetic-field spec) and
runs an ordered list of stages over it. Every stage writes its numeric
artifacts (CSV/JSON) plus SVG plots into the output directory and registers
them in a manifest; identical (config, seed) runs produce byte-identical
numeric artifacts.

Stage kinds and the context entries they need/produce:

    track               field -> tracks
    untwist-preprocess  field -> "preprocessed" field, mean speed
    untwist-refine      "preprocessed" -> "refined" field (needs preprocess)
    pod, rpca, dmd      any field
    oscillator, lv      tracks (needs a track stage first)
    koopman-forecast, koopman-modal   any field

Field-consuming stages accept a ``frame`` parameter naming which field to
use: "lab", "preprocessed", or "refined" (default: the latest one produced).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decomposition import pod, rpca
from .dmd import dmd_forecast, exact_dmd
from .errors import PipelineStageError, UndefinedMetricError
from .field import SpatiotemporalField, load_field, save_field, variance_explained
from .frames import _refine_with_model, preprocess_shift
from .koopman import fit_koopman_forecast
from .library import build_library
from .lotka import lv_fit_sweep, lv_simulate
from .modal import decompose_modes, fit_modal_koopman
from .oscillator import fit_oscillator, separation_series
from .plots import save_heatmap_svg, save_lines_svg
from .sr3 import speed_model_to_json
from .synth import SynthSpec, synth_field
from .tracking import cluster_waves, detect_ridges, suggest_n_waves, tracks_to_csv

__all__ = ["PipelineConfig", "run_pipeline"]

STAGE_KINDS = (
    "track",
    "untwist-preprocess",
    "untwist-refine",
    "pod",
    "rpca",
    "dmd",
    "oscillator",
    "lv",
    "koopman-forecast",
    "koopman-modal",
)

_TRACK_CONSUMERS = ("oscillator", "lv")
_FRAME_CONSUMERS = ("track", "pod", "rpca", "dmd", "koopman-forecast", "koopman-modal")


@dataclass
class PipelineConfig:
    """Validated pipeline description.

    Exactly one of ``input_path`` / ``synth`` provides the input field.
    ``stages`` entries are ``{"kind": <stage>, "params": {...}}``.
    """

    output_dir: Path
    stages: list[dict]
    seed: int = 0
    input_path: Path | None = None
    synth: SynthSpec | None = None

    @classmethod
    def from_json(cls, source) -> "PipelineConfig":
        """Build a config from a JSON file path, JSON text, or a dict."""
        if isinstance(source, dict):
            raw = dict(source)
        else:
            path = Path(str(source))
            text = path.read_text() if path.is_file() else str(source)
            raw = json.loads(text)
        synth = None
        if raw.get("synth") is not None:
            synth = SynthSpec.from_json(raw["synth"])
        config = cls(
            output_dir=Path(raw.get("output_dir", "out")),
            stages=list(raw.get("stages", [])),
            seed=int(raw.get("seed", 0)),
            input_path=Path(raw["input_path"]) if raw.get("input_path") else None,
            synth=synth,
        )
        return config

    def validate(self) -> None:
        """Reject configs whose stage inputs are not produced earlier."""
        if (self.input_path is None) == (self.synth is None):
            raise ValueError("config needs exactly one of input_path or synth")
        if self.input_path is not None and not Path(self.input_path).is_file():
            raise ValueError(f"input_path does not exist: {self.input_path}")
        produced_frames = {"lab"}
        have_tracks = False
        for i, stage in enumerate(self.stages):
            kind = stage.get("kind")
            if kind not in STAGE_KINDS:
                raise ValueError(f"stage {i}: unknown kind {kind!r}")
            params = stage.get("params", {})
            if not isinstance(params, dict):
                raise ValueError(f"stage {i} ({kind}): params must be a mapping")
            frame = params.get("frame")
            if frame is not None and frame not in produced_frames:
                raise ValueError(
                    f"stage {i} ({kind}): frame {frame!r} not produced by an earlier stage "
                    f"(have {sorted(produced_frames)})"
                )
            if kind == "untwist-refine" and "preprocessed" not in produced_frames:
                raise ValueError(f"stage {i}: untwist-refine requires untwist-preprocess first")
            if kind in _TRACK_CONSUMERS and not have_tracks:
                raise ValueError(f"stage {i} ({kind}): requires a track stage first")
            if kind == "track":
                have_tracks = True
            elif kind == "untwist-preprocess":
                produced_frames.add("preprocessed")
            elif kind == "untwist-refine":
                produced_frames.add("refined")


def _write_matrix(path, matrix, header=""):
    with open(path, "w") as fh:
        if header:
            fh.write(f"# {header}\n")
        np.savetxt(fh, np.atleast_2d(np.asarray(matrix)), fmt="%.17g", delimiter=",")


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _library_from_params(params):
    spec = params.get("library", {"kinds": ["linear"]})
    return build_library(
        set(spec.get("kinds", ["linear"])),
        poly_degree=spec.get("poly_degree", 2),
        sin_freqs=spec.get("sin_freqs", ()),
        exp_rates=spec.get("exp_rates", ()),
    )


def _tracking_kwargs(params, seed):
    return dict(
        n_waves=params.get("n_waves", 1),
        min_prominence=params.get("min_prominence", 0.1),
        min_separation=params.get("min_separation", 3),
        kernel_scale=params.get("kernel_scale", 5.0),
        seed=params.get("seed", seed),
    )


class _Run:
    """Mutable state threaded through the stages of one pipeline run."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.fields: dict[str, SpatiotemporalField] = {}
        self.tracks = None
        self.truth_tracks = None
        self.artifacts: list[dict] = []
        self._stage_idx = -1
        self._kind = "input"

    def frame(self, params) -> SpatiotemporalField:
        name = params.get("frame")
        if name is None:
            for candidate in ("refined", "preprocessed", "lab"):
                if candidate in self.fields:
                    return self.fields[candidate]
        if name not in self.fields:
            raise ValueError(f"frame {name!r} not available")
        return self.fields[name]

    def emit(self, name, path):
        self.artifacts.append(
            {"stage": self._stage_idx, "kind": self._kind, "name": name,
             "path": str(Path(path).relative_to(self.out))}
        )


def _load_input(run: _Run):
    config = run.config
    if config.synth is not None:
        spec = config.synth
        if config.seed and spec.seed != config.seed:
            spec = SynthSpec(
                n_space=spec.n_space, n_time=spec.n_time, dt=spec.dt,
                pulses=spec.pulses, noise_sigma=spec.noise_sigma, seed=config.seed,
            )
        field, truth = synth_field(spec)
        run.truth_tracks = truth
        path = run.out / "field.csv"
        save_field(field, path)
        run.emit("input field", path)
        truth_path = run.out / "truth_tracks.csv"
        tracks_to_csv(truth, truth_path)
        run.emit("ground-truth tracks", truth_path)
    else:
        field = load_field(config.input_path)
        path = run.out / "field.csv"
        save_field(field, path)
        run.emit("input field", path)
    run.fields["lab"] = field
    heat = run.out / "field.svg"
    save_heatmap_svg(field, heat, title="input field")
    run.emit("input heatmap", heat)


def _stage_track(run: _Run, params):
    field = run.frame(params)
    kw = _tracking_kwargs(params, run.config.seed)
    points = detect_ridges(field, kw["min_prominence"], kw["min_separation"])
    if not points:
        raise ValueError("no peaks detected")
    n_waves = kw["n_waves"]
    if n_waves == 0:  # eigengap suggestion requested
        n_waves = suggest_n_waves(points, kw["kernel_scale"], field.n_space)
    run.tracks = cluster_waves(points, n_waves, kw["kernel_scale"],
                               field.n_space, seed=kw["seed"])
    path = run.out / "tracks.csv"
    tracks_to_csv(run.tracks, path)
    run.emit("wave tracks", path)


def _stage_preprocess(run: _Run, params):
    field = run.fields["lab"]
    kw = _tracking_kwargs(params, run.config.seed)
    shifted, mean_speed = preprocess_shift(field, window=params.get("window", 10), **kw)
    run.fields["preprocessed"] = shifted
    path = run.out / "preprocessed.csv"
    save_field(shifted, path)
    run.emit("preprocessed field", path)
    _write_json(run.out / "preprocess_speed.json",
                {"mean_speed_px_per_time_unit": mean_speed, "window": params.get("window", 10)})
    run.emit("mean linear speed", run.out / "preprocess_speed.json")
    heat = run.out / "preprocessed.svg"
    save_heatmap_svg(shifted, heat, title="preprocessed (mean linear speed removed)")
    run.emit("preprocessed heatmap", heat)


def _stage_refine(run: _Run, params):
    field = run.fields["preprocessed"]
    kw = _tracking_kwargs(params, run.config.seed)
    wave = params.get("wave_index", 0)
    library = _library_from_params(params)
    shifted, model, tracks = _refine_with_model(
        field, library, wave, kw["n_waves"], kw["min_prominence"],
        kw["min_separation"], kw["kernel_scale"],
        params.get("lam"), params.get("zeta", 1.0), params.get("regularizer", "l1"),
        kw["seed"],
    )
    run.fields["refined"] = shifted
    run.tracks = tracks
    path = run.out / f"refined_wave{wave}.csv"
    save_field(shifted, path)
    run.emit(f"refined field (wave {wave})", path)
    model_path = run.out / "speed_model.json"
    speed_model_to_json(model, model_path)
    run.emit("speed model", model_path)
    heat = run.out / f"refined_wave{wave}.svg"
    save_heatmap_svg(shifted, heat, title=f"frame of wave {wave}")
    run.emit("refined heatmap", heat)


def _stage_pod(run: _Run, params):
    field = run.frame(params)
    rank = params.get("rank", 3)
    decomp = pod(field, rank)
    _write_matrix(run.out / "pod_modes.csv", decomp.modes, header="one spatial mode per column")
    run.emit("spatial modes", run.out / "pod_modes.csv")
    _write_matrix(run.out / "pod_singular_values.csv", decomp.singular_values[None, :])
    run.emit("singular values", run.out / "pod_singular_values.csv")
    _write_json(run.out / "pod_energy.json",
                {"energy_fractions": decomp.energy_fractions.tolist(),
                 "total_energy": decomp.total_energy})
    run.emit("mode energies", run.out / "pod_energy.json")
    save_lines_svg(run.out / "pod_modes.svg", np.arange(field.n_space),
                   {f"mode {j}": decomp.modes[:, j] for j in range(rank)},
                   title="leading spatial modes", xlabel="x (px)")
    run.emit("modes plot", run.out / "pod_modes.svg")


def _stage_rpca(run: _Run, params):
    field = run.frame(params)
    low_rank, sparse = rpca(
        field, mu=params.get("mu"), lambda_rpca=params.get("lambda_rpca"),
        tol=params.get("tol", 1e-9), max_iter=params.get("max_iter", 500),
    )
    save_field(low_rank, run.out / "rpca_low_rank.csv")
    run.emit("low-rank part", run.out / "rpca_low_rank.csv")
    save_field(sparse, run.out / "rpca_sparse.csv")
    run.emit("sparse part", run.out / "rpca_sparse.csv")
    save_heatmap_svg(low_rank, run.out / "rpca_low_rank.svg", title="low-rank part")
    run.emit("low-rank heatmap", run.out / "rpca_low_rank.svg")
    first_mode = pod(low_rank, 1).modes[:, 0]
    save_lines_svg(run.out / "rpca_first_mode.svg", np.arange(field.n_space),
                   {"first mode": first_mode}, title="first mode of the low-rank part",
                   xlabel="x (px)")
    run.emit("robust first mode", run.out / "rpca_first_mode.svg")


def _stage_dmd(run: _Run, params):
    field = run.frame(params)
    rank = params.get("rank", 6)
    horizon = params.get("horizon", field.n_time - 1)
    model = exact_dmd(field, rank)
    recon = dmd_forecast(model, horizon)
    _write_matrix(run.out / "dmd_eigenvalues.csv",
                  np.stack([model.eigenvalues.real, model.eigenvalues.imag]),
                  header="rows: real, imag")
    run.emit("eigenvalues", run.out / "dmd_eigenvalues.csv")
    _write_json(run.out / "dmd_report.json", {
        "rank": int(model.rank),
        "eigenvalues": [[complex(v).real, complex(v).imag] for v in model.eigenvalues],
        "continuous_eigenvalues": [
            [complex(v).real, complex(v).imag] for v in model.continuous_eigenvalues
        ],
        "amplitudes": [[complex(v).real, complex(v).imag] for v in model.amplitudes],
        "dt": model.dt,
    })
    run.emit("fit report", run.out / "dmd_report.json")
    recon_field = SpatiotemporalField(recon, dt=field.dt)
    save_field(recon_field, run.out / "dmd_reconstruction.csv")
    run.emit("reconstruction", run.out / "dmd_reconstruction.csv")
    save_heatmap_svg(recon_field, run.out / "dmd_reconstruction.svg", title="reconstruction")
    run.emit("reconstruction heatmap", run.out / "dmd_reconstruction.svg")


def _require_wave(tracks, index, role):
    if index >= len(tracks):
        raise ValueError(f"{role}={index} but only {len(tracks)} tracks exist")
    return tracks[index]


def _stage_oscillator(run: _Run, params):
    field = run.frame(params)
    track_a = _require_wave(run.tracks, params.get("wave_a", 0), "wave_a")
    track_b = _require_wave(run.tracks, params.get("wave_b", 1), "wave_b")
    t_idx, x1 = separation_series(track_a, track_b, field.n_space)
    t = t_idx * field.dt
    fit = fit_oscillator(x1, dt=field.dt)
    _write_json(run.out / "oscillator_fit.json", {
        "amplitude": fit.amplitude, "growth": fit.growth,
        "frequency": fit.frequency, "phase": fit.phase,
        "residual": fit.residual, "converged": fit.converged,
        "normalization": "signed circular separation, de-meaned",
    })
    run.emit("oscillator fit", run.out / "oscillator_fit.json")
    pred = fit.predict(t)
    _write_matrix(run.out / "oscillator_series.csv",
                  np.stack([t, x1, pred]).T, header="t, separation, model")
    run.emit("separation series", run.out / "oscillator_series.csv")
    save_lines_svg(run.out / "oscillator_fit.svg", t,
                   {"separation": x1, "model": pred}, title="wave separation vs model")
    run.emit("fit plot", run.out / "oscillator_fit.svg")


def _positivize(series, margin_fraction=0.1):
    """Affine shift making a series strictly positive; returns (series, offset)."""
    span = float(series.max() - series.min())
    offset = float(-series.min() + margin_fraction * max(span, 1.0))
    return series + offset, offset


def _stage_lv(run: _Run, params):
    field = run.frame(params)
    track_y = _require_wave(run.tracks, params.get("wave_y", 0), "wave_y")
    track_z = _require_wave(run.tracks, params.get("wave_z", 1), "wave_z")
    y_raw = np.asarray(track_y.unwrapped_x, dtype=float)
    z_raw = np.asarray(track_z.unwrapped_x, dtype=float)
    n = min(y_raw.size, z_raw.size)
    y_raw, z_raw = y_raw[:n], z_raw[:n]
    negate = params.get("negate", "y")
    if negate == "y":
        y_raw = -y_raw
    elif negate == "z":
        z_raw = -z_raw
    y, off_y = _positivize(y_raw - y_raw.mean())
    z, off_z = _positivize(z_raw - z_raw.mean())
    train_len = params.get("train_len", min(500, n))
    h = params.get("h", field.dt)
    grids = None
    if "grids" in params:
        grids = {k: np.asarray(v, dtype=float) for k, v in params["grids"].items()}
    best, err = lv_fit_sweep(y, z, train_len, grids=grids, h=h)
    extrapolate = params.get("extrapolate_len", min(2 * train_len, n))
    sim = lv_simulate(best, y[0], z[0], extrapolate - 1, h)
    _write_json(run.out / "lv_fit.json", {
        "alpha": best.alpha, "beta": best.beta, "delta": best.delta, "gamma": best.gamma,
        "train_error": err, "train_len": train_len, "h": h,
        "preprocessing": {"negated": negate, "offset_y": off_y, "offset_z": off_z},
    })
    run.emit("predator-prey fit", run.out / "lv_fit.json")
    rows = np.stack([sim.t, y[:extrapolate], z[:extrapolate], sim.y, sim.z]).T
    _write_matrix(run.out / "lv_extrapolation.csv", rows,
                  header="t, y_true, z_true, y_model, z_model")
    run.emit("extrapolation", run.out / "lv_extrapolation.csv")
    save_lines_svg(run.out / "lv_fit.svg", sim.t,
                   {"y": y[:extrapolate], "z": z[:extrapolate],
                    "y model": sim.y, "z model": sim.z},
                   title="wave interaction vs predator-prey model")
    run.emit("fit plot", run.out / "lv_fit.svg")


def _stage_koopman_forecast(run: _Run, params):
    field = run.frame(params)
    model = fit_koopman_forecast(
        field,
        n_freq=params.get("n_freq", 1),
        hidden=tuple(params.get("hidden", (32, 32))),
        epochs=params.get("epochs", 800),
        lr=params.get("lr", 0.05),
        rounds=params.get("rounds", 2),
        train_fraction=params.get("train_fraction", 6.0 / 7.0),
        seed=params.get("seed", run.config.seed),
    )
    _write_json(run.out / "koopman_forecast_model.json", model.to_dict())
    run.emit("forecast model", run.out / "koopman_forecast_model.json")
    horizon = params.get("horizon", field.n_time)
    pred = SpatiotemporalField(model.predict(np.arange(horizon, dtype=float)), dt=field.dt)
    save_field(pred, run.out / "koopman_forecast.csv")
    run.emit("forecast field", run.out / "koopman_forecast.csv")
    _write_matrix(run.out / "koopman_training_curve.csv",
                  model.training_curve[None, :], header="loss per epoch")
    run.emit("training curve", run.out / "koopman_training_curve.csv")
    save_heatmap_svg(pred, run.out / "koopman_forecast.svg", title="oscillator-decoder forecast")
    run.emit("forecast heatmap", run.out / "koopman_forecast.svg")


def _stage_koopman_modal(run: _Run, params):
    field = run.frame(params)
    model = fit_modal_koopman(
        field,
        n_modes=params.get("n_modes", 2),
        hidden=tuple(params.get("hidden", (32, 32))),
        epochs=params.get("epochs", 400),
        lr=params.get("lr", 0.1),
        rounds=params.get("rounds", 5),
        seed=params.get("seed", run.config.seed),
    )
    _write_json(run.out / "koopman_modal_model.json", model.to_dict())
    run.emit("modal model", run.out / "koopman_modal_model.json")
    horizon = params.get("horizon", field.n_time)
    modes, total = decompose_modes(model, np.arange(horizon, dtype=float))
    for i, mode_field in enumerate(modes):
        path = run.out / f"koopman_mode{i}.csv"
        save_field(mode_field, path)
        run.emit(f"mode {i} field", path)
    save_field(total, run.out / "koopman_modal_total.csv")
    run.emit("aggregate field", run.out / "koopman_modal_total.csv")
    _write_matrix(run.out / "koopman_modal_training_curve.csv",
                  model.training_curve[None, :], header="loss per epoch")
    run.emit("training curve", run.out / "koopman_modal_training_curve.csv")
    save_heatmap_svg(total, run.out / "koopman_modal_total.svg", title="modal aggregate")
    run.emit("aggregate heatmap", run.out / "koopman_modal_total.svg")
    try:
        ve = variance_explained(field, total.values[: field.n_time])
    except (UndefinedMetricError, ValueError):
        ve = None
    _write_json(run.out / "koopman_modal_report.json",
                {"speeds_px_per_step": model.speeds.tolist(), "variance_explained": ve})
    run.emit("modal report", run.out / "koopman_modal_report.json")


_STAGE_RUNNERS = {
    "track": _stage_track,
    "untwist-preprocess": _stage_preprocess,
    "untwist-refine": _stage_refine,
    "pod": _stage_pod,
    "rpca": _stage_rpca,
    "dmd": _stage_dmd,
    "oscillator": _stage_oscillator,
    "lv": _stage_lv,
    "koopman-forecast": _stage_koopman_forecast,
    "koopman-modal": _stage_koopman_modal,
}


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute a validated pipeline; returns (and writes) the manifest.

    Stages run in order; the first failure aborts the run, and the manifest
    is still written with a failure marker naming the stage and cause before
    :class:`PipelineStageError` is raised. Identical (config, seed) pairs
    produce identical manifests and byte-identical numeric artifacts.
    """
    config.validate()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    run = _Run(config)
    manifest = {"seed": config.seed, "stages": [], "artifacts": run.artifacts}
    failure = None
    try:
        _load_input(run)
        for idx, stage in enumerate(config.stages):
            kind = stage["kind"]
            run._stage_idx = idx
            run._kind = kind
            try:
                _STAGE_RUNNERS[kind](run, stage.get("params", {}))
            except Exception as exc:
                failure = PipelineStageError(kind, exc)
                break
            manifest["stages"].append({"index": idx, "kind": kind, "status": "ok"})
    finally:
        if failure is not None:
            manifest["stages"].append(
                {"index": run._stage_idx, "kind": run._kind, "status": "failed",
                 "error": str(failure.cause)}
            )
            manifest["failed_stage"] = run._kind
        _write_json(out / "manifest.json", manifest)
    if failure is not None:
        raise failure
    return manifest
