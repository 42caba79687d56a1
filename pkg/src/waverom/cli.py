"""Command-line interface.

Every subcommand assembles a small pipeline and runs it, so artifacts and
manifests are uniform whether a stage runs standalone or inside a configured
multi-stage run.

Exit codes: 0 success; 2 configuration or validation error; 3 input parse
error; 4 numerical failure (divergence, overflow, ill-conditioning);
1 any other error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    ConditioningError,
    FieldFormatError,
    PipelineStageError,
    TrainingDivergedError,
)
from .pipeline import PipelineConfig, run_pipeline
from .synth import SynthSpec

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waverom",
        description="Co-moving frames and reduced-order models for 1D-periodic traveling waves.",
    )
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--config", type=Path, default=None,
                        help="pipeline config JSON (used by the pipeline subcommand)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic field from a spec")
    p.add_argument("--spec", type=Path, required=True, help="synthetic-field spec JSON")

    def add_input(sp):
        sp.add_argument("--input", type=Path, required=True, help="field CSV")

    def add_tracking(sp):
        sp.add_argument("--n-waves", type=int, default=1,
                        help="wave count; 0 asks the eigengap heuristic")
        sp.add_argument("--min-prominence", type=float, default=0.1)
        sp.add_argument("--min-separation", type=int, default=3)
        sp.add_argument("--kernel-scale", type=float, default=5.0)

    p = sub.add_parser("track", help="detect peaks and group them into tracks")
    add_input(p)
    add_tracking(p)

    p = sub.add_parser("untwist", help="two-stage shift into a wave's co-moving frame")
    add_input(p)
    add_tracking(p)
    p.add_argument("--window", type=int, default=10, help="rows used by the preprocessing fit")
    p.add_argument("--wave", type=int, default=0, help="wave index to straighten")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="sparsity weight")
    p.add_argument("--zeta", type=float, default=1.0, help="relaxation strength")
    p.add_argument("--reg", choices=("l1", "l0"), default="l1", help="sparsity regularizer")
    p.add_argument("--library", nargs="+", default=["linear"],
                   choices=("constant", "linear", "polynomial", "sin", "exp"))
    p.add_argument("--poly-degree", type=int, default=2)
    p.add_argument("--sin-freqs", type=float, nargs="*", default=[])
    p.add_argument("--exp-rates", type=float, nargs="*", default=[])

    p = sub.add_parser("pod", help="proper orthogonal decomposition")
    add_input(p)
    p.add_argument("--rank", type=int, default=3)

    p = sub.add_parser("rpca", help="robust low-rank plus sparse split")
    add_input(p)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)

    p = sub.add_parser("dmd", help="exact DMD fit and reconstruction")
    add_input(p)
    p.add_argument("--rank", type=int, default=6)
    p.add_argument("--horizon", type=int, default=None)

    p = sub.add_parser("lv", help="predator-prey fit of two tracked waves")
    add_input(p)
    add_tracking(p)
    p.add_argument("--wave-y", type=int, default=0)
    p.add_argument("--wave-z", type=int, default=1)
    p.add_argument("--train-len", type=int, default=500)
    p.add_argument("--negate", choices=("y", "z", "none"), default="y")

    p = sub.add_parser("koopman", help="oscillator-decoder or modal forecast")
    add_input(p)
    p.add_argument("--variant", choices=("forecast", "modal"), default="forecast")
    p.add_argument("--n-freq", type=int, default=1)
    p.add_argument("--n-modes", type=int, default=2)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)

    sub.add_parser("pipeline", help="run a multi-stage pipeline from --config")
    return parser


def _tracking_params(args) -> dict:
    return {
        "n_waves": args.n_waves,
        "min_prominence": args.min_prominence,
        "min_separation": args.min_separation,
        "kernel_scale": args.kernel_scale,
    }


def _config_from_args(args) -> PipelineConfig:
    if args.command == "pipeline":
        if args.config is None:
            raise ValueError("pipeline subcommand needs --config")
        config = PipelineConfig.from_json(args.config)
        if args.seed:
            config.seed = args.seed
        if args.out != Path("out"):
            config.output_dir = args.out
        return config

    stages: list[dict] = []
    input_path = None
    synth = None
    if args.command == "synth":
        synth = json.loads(Path(args.spec).read_text())
    else:
        input_path = args.input

    if args.command == "track":
        stages.append({"kind": "track", "params": _tracking_params(args)})
    elif args.command == "untwist":
        tracking = _tracking_params(args)
        stages.append({"kind": "untwist-preprocess", "params": {**tracking, "window": args.window}})
        library = {
            "kinds": args.library,
            "poly_degree": args.poly_degree,
            "sin_freqs": args.sin_freqs,
            "exp_rates": args.exp_rates,
        }
        stages.append({
            "kind": "untwist-refine",
            "params": {**tracking, "wave_index": args.wave, "library": library,
                       "lam": args.lam, "zeta": args.zeta, "regularizer": args.reg},
        })
    elif args.command == "pod":
        stages.append({"kind": "pod", "params": {"rank": args.rank}})
    elif args.command == "rpca":
        stages.append({"kind": "rpca", "params": {"mu": args.mu, "lambda_rpca": args.lam}})
    elif args.command == "dmd":
        params = {"rank": args.rank}
        if args.horizon is not None:
            params["horizon"] = args.horizon
        stages.append({"kind": "dmd", "params": params})
    elif args.command == "lv":
        stages.append({"kind": "track", "params": _tracking_params(args)})
        stages.append({
            "kind": "lv",
            "params": {"wave_y": args.wave_y, "wave_z": args.wave_z,
                       "train_len": args.train_len,
                       "negate": "none" if args.negate == "none" else args.negate},
        })
    elif args.command == "koopman":
        kind = "koopman-forecast" if args.variant == "forecast" else "koopman-modal"
        params: dict = {}
        if args.variant == "forecast":
            params["n_freq"] = args.n_freq
        else:
            params["n_modes"] = args.n_modes
        if args.epochs is not None:
            params["epochs"] = args.epochs
        if args.rounds is not None:
            params["rounds"] = args.rounds
        if args.horizon is not None:
            params["horizon"] = args.horizon
        stages.append({"kind": kind, "params": params})

    return PipelineConfig(
        output_dir=args.out,
        stages=stages,
        seed=args.seed,
        input_path=input_path,
        synth=SynthSpec.from_json(synth) if synth is not None else None,
    )


def _exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PipelineStageError):
        return _exit_code_for(exc.cause)
    if isinstance(exc, FieldFormatError):
        return 3
    if isinstance(exc, (TrainingDivergedError, ConditioningError, OverflowError)):
        return 4
    if isinstance(exc, (ValueError, KeyError, FileNotFoundError)):
        return 2
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        manifest = run_pipeline(config)
    except Exception as exc:  # mapped to the documented exit taxonomy
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)
    n_artifacts = len(manifest["artifacts"])
    print(f"wrote {n_artifacts} artifacts to {config.output_dir} (manifest.json)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
