"""Co-moving frames and reduced-order models for 1D-periodic traveling waves.

The package discovers coordinate frames that move with traveling wave fronts
in (x, t) data on a periodic domain, then builds a suite of reduced-order
models in those frames: POD and robust PCA, exact DMD and damped-oscillator
fits, Lotka-Volterra interaction models, and two Koopman forecast variants.
"""

from .decomposition import POD, ModalDecomposition, RobustPCA, pod, rpca
from .dmd import DMD, DmdModel, dmd_forecast, exact_dmd
from .field import SpatiotemporalField, load_field, save_field, variance_explained
from .frames import ComovingFrame, ShiftSpec, preprocess_shift, refine_shift, shift_field
from .koopman import (
    KoopmanForecast,
    KoopmanForecastModel,
    fit_koopman_forecast,
    forecast,
    global_freq_search,
    oscillator_features,
)
from .library import FunctionLibrary, FunctionTerm, build_library
from .lotka import LvParams, LvTrajectory, lv_conserved, lv_fit_sweep, lv_simulate
from .modal import ModalKoopman, ModalKoopmanModel, decompose_modes, fit_modal_koopman
from .nnet import FeedForwardNet
from .oscillator import OscillatorFit, fit_oscillator, separation_series
from .pipeline import PipelineConfig, run_pipeline
from .sr3 import SpeedModel, fit_sr3, speed_model_to_json
from .synth import PulseSpec, SpeedSpec, SynthSpec, synth_field
from .tracking import (
    PeakPoint,
    WaveTrack,
    WaveTracker,
    cluster_waves,
    detect_ridges,
    suggest_n_waves,
    tracks_from_csv,
    tracks_to_csv,
    unwrap_track,
)

__version__ = "0.1.0"

__all__ = [
    "DMD",
    "POD",
    "ComovingFrame",
    "DmdModel",
    "FeedForwardNet",
    "FunctionLibrary",
    "FunctionTerm",
    "KoopmanForecast",
    "KoopmanForecastModel",
    "LvParams",
    "LvTrajectory",
    "ModalDecomposition",
    "ModalKoopman",
    "ModalKoopmanModel",
    "OscillatorFit",
    "PeakPoint",
    "PipelineConfig",
    "PulseSpec",
    "RobustPCA",
    "ShiftSpec",
    "SpatiotemporalField",
    "SpeedModel",
    "SpeedSpec",
    "SynthSpec",
    "WaveTrack",
    "WaveTracker",
    "build_library",
    "cluster_waves",
    "decompose_modes",
    "detect_ridges",
    "dmd_forecast",
    "exact_dmd",
    "fit_koopman_forecast",
    "fit_modal_koopman",
    "fit_oscillator",
    "fit_sr3",
    "forecast",
    "global_freq_search",
    "load_field",
    "lv_conserved",
    "lv_fit_sweep",
    "lv_simulate",
    "oscillator_features",
    "pod",
    "preprocess_shift",
    "refine_shift",
    "rpca",
    "run_pipeline",
    "save_field",
    "separation_series",
    "shift_field",
    "speed_model_to_json",
    "suggest_n_waves",
    "synth_field",
    "tracks_from_csv",
    "tracks_to_csv",
    "unwrap_track",
    "variance_explained",
]
