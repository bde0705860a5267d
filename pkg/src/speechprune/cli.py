"""Command-line surface: prune a bundle, synthesize bundles, run retention
experiments, and emit cost reports.

Exit codes: 0 success, 2 usage error, 3 data error (unreadable or invalid
bundle, bad configuration values), 4 internal error. Every subcommand is
deterministic given its flags; all randomness flows through --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from dataclasses import asdict

import numpy as np

from . import bundle as bundle_io
from . import cost as cost_model
from .errors import BundleError, SpeechPruneError, ValidationError
from .prune import MODES, MODE_BOTH, PruneConfig, speechprune
from .synth import SyntheticSpec, run_experiment, synth_bundle

PRUNE_SCHEMA = "prune-result-v1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    tmp = os.path.join(directory, f".{os.path.basename(path)}.tmp.{os.getpid()}")
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _emit(text: str, output: str | None) -> None:
    if output:
        _write_text_atomic(output, text)
    else:
        sys.stdout.write(text)


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValidationError("--config file must contain a JSON object")
    return data


def _resolve(args: argparse.Namespace, defaults: dict) -> None:
    """Fill unset flags from the --config file, then from hard defaults."""
    file_cfg = _load_config_file(getattr(args, "config", None))
    for key, fallback in defaults.items():
        if getattr(args, key, None) is None:
            value = file_cfg.get(key, fallback)
            setattr(args, key, value)


def _float_list(text: str) -> list[float]:
    return [float(item) for item in text.split(",") if item.strip()]


def _int_list(text: str) -> list[int]:
    return [int(item) for item in text.split(",") if item.strip()]


def _str_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


_SPEC_DEFAULTS = asdict(SyntheticSpec())


def _add_spec_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-tokens", type=int, default=None)
    parser.add_argument("--embed-dim", type=int, default=None)
    parser.add_argument("--proj-dim", type=int, default=None)
    parser.add_argument("--n-text", type=int, default=None)
    parser.add_argument("--tokens-per-second", type=int, default=None)
    parser.add_argument("--needle-length", type=int, default=None)
    parser.add_argument("--needle-snr", type=float, default=None)
    parser.add_argument("--noise-scale", type=float, default=None)
    parser.add_argument("--proj-text-gain", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)


def _spec_from_args(args: argparse.Namespace) -> SyntheticSpec:
    return SyntheticSpec(
        n_tokens=args.n_tokens,
        embed_dim=args.embed_dim,
        proj_dim=args.proj_dim,
        n_text=args.n_text,
        tokens_per_second=args.tokens_per_second,
        needle_length=args.needle_length,
        needle_snr=args.needle_snr,
        noise_scale=args.noise_scale,
        proj_text_gain=args.proj_text_gain,
        seed=args.seed,
    )


def cmd_prune(args: argparse.Namespace) -> int:
    _resolve(args, {
        "rate": 0.0,
        "mode": MODE_BOTH,
        "intermediate_target": 750,
        "frame_size": None,
    })
    if args.emit_bundle and not args.output:
        args.parser.error("--emit-bundle requires --output")

    b = bundle_io.read_bundle(args.input)
    config = PruneConfig(
        pruning_rate=args.rate,
        intermediate_target=args.intermediate_target,
        frame_size_override=args.frame_size,
        mode=args.mode,
    )
    result = speechprune(b, config)
    kept = result.kept_final

    if args.emit_bundle:
        pruned = _pruned_bundle(b, kept)
        bundle_io.write_bundle_atomic(pruned, args.output)
        return EXIT_OK

    payload = {
        "schema_version": PRUNE_SCHEMA,
        "config": {
            "pruning_rate": config.pruning_rate,
            "intermediate_target": config.intermediate_target,
            "frame_size": args.frame_size or int(b.tokens_per_second),
            "mode": config.mode,
        },
        "n_tokens": b.n_tokens,
        "phase1_kept": None if result.phase1 is None else len(result.phase1.kept),
        "kept_count": len(kept),
        "kept": [int(i) for i in kept],
        "method": result.method,
    }
    if args.trace:
        traces = {}
        if result.phase1 is not None:
            traces["phase1"] = {
                "frame_scores": [float(x) for x in result.phase1.frame_scores],
                "frame_probs": [float(x) for x in result.phase1.frame_probs],
                "allocations": [int(x) for x in result.phase1.allocations],
                "kept": [int(x) for x in result.phase1.kept],
            }
        if result.phase2 is not None:
            traces["phase2"] = {
                "token_scores": [float(x) for x in result.phase2.token_scores],
                "kept": [int(x) for x in result.phase2.kept],
            }
        payload["traces"] = traces
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.output)
    return EXIT_OK


def _pruned_bundle(b, kept: np.ndarray):
    """New bundle containing only kept speech rows, needle remapped."""
    needle = None
    if b.needle is not None:
        start, length = b.needle
        inside = (kept >= start) & (kept < start + length)
        surviving = int(np.count_nonzero(inside))
        if surviving > 0:
            new_start = int(np.count_nonzero(kept < start))
            needle = bundle_io.NeedleSpan(new_start, surviving)
    return bundle_io.EmbeddingBundle(
        speech=b.speech[kept],
        text=b.text,
        wq=b.wq,
        wk=b.wk,
        tokens_per_second=b.tokens_per_second,
        needle=needle,
        label=b.label,
        extra_matrices=dict(b.extra_matrices),
        extra_metadata=dict(b.extra_metadata),
    )


def cmd_synth(args: argparse.Namespace) -> int:
    _resolve(args, dict(_SPEC_DEFAULTS))
    spec = _spec_from_args(args)
    b = synth_bundle(spec)
    if spec.needle_snr == 0:
        b.label = "unseparated"
    bundle_io.write_bundle_atomic(b, args.output)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    defaults = dict(_SPEC_DEFAULTS)
    defaults.update({
        "rates": [0.2, 0.4, 0.6, 0.8],
        "methods": ["speechprune", "rap", "rac"],
        "modes": [MODE_BOTH],
        "trials": 100,
        "intermediate_target": 750,
        "frame_size": None,
        "format": "csv",
    })
    _resolve(args, defaults)
    spec = _spec_from_args(args)
    report = run_experiment(
        spec,
        rates=args.rates,
        methods=args.methods,
        modes=args.modes,
        trials=args.trials,
        intermediate_target=args.intermediate_target,
        frame_size_override=args.frame_size,
    )
    text = report.to_json() if args.format == "json" else report.to_csv()
    _emit(text, args.output)
    return EXIT_OK


def cmd_cost(args: argparse.Namespace) -> int:
    _resolve(args, {
        "n_layers": 28,
        "hidden_dim": 3584,
        "ffn_dim": 18944,
        "total_params": 7_000_000_000,
        "non_audio_tokens": None,
        "audio_tokens": sorted(cost_model.REFERENCE_PREFILL_TFLOPS, reverse=True),
    })
    fit = args.non_audio_tokens is None
    config = cost_model.CostModelConfig(
        n_layers=args.n_layers,
        hidden_dim=args.hidden_dim,
        ffn_dim=args.ffn_dim,
        total_params=args.total_params,
        non_audio_tokens=1 if fit else args.non_audio_tokens,
    )
    report = cost_model.cost_report(config, audio_tokens=args.audio_tokens, fit=fit)
    _emit(cost_model.cost_report_json(report), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speechprune",
        description="Two-phase speech-token pruning engine and evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prune", help="prune a .spb bundle")
    p.add_argument("input", help="input .spb path")
    p.add_argument("--rate", type=float, default=None, help="pruning rate in [0,1)")
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--intermediate-target", type=int, default=None)
    p.add_argument("--frame-size", type=int, default=None)
    p.add_argument("--trace", action="store_true", help="include per-phase score traces")
    p.add_argument("--emit-bundle", action="store_true",
                   help="write a pruned .spb instead of a JSON result")
    p.add_argument("--output", default=None)
    p.add_argument("--config", default=None, help="JSON defaults file (flags win)")
    p.set_defaults(func=cmd_prune, parser=p)

    p = sub.add_parser("synth", help="synthesize a needle bundle")
    _add_spec_flags(p)
    p.add_argument("--output", required=True, help="output .spb path")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_synth, parser=p)

    p = sub.add_parser("eval", help="run a retention experiment sweep")
    _add_spec_flags(p)
    p.add_argument("--rates", type=_float_list, default=None)
    p.add_argument("--methods", type=_str_list, default=None)
    p.add_argument("--modes", type=_str_list, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--intermediate-target", type=int, default=None)
    p.add_argument("--frame-size", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--output", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_eval, parser=p)

    p = sub.add_parser("cost", help="emit a prefill FLOPs report")
    p.add_argument("--n-layers", type=int, default=None)
    p.add_argument("--hidden-dim", type=int, default=None)
    p.add_argument("--ffn-dim", type=int, default=None)
    p.add_argument("--total-params", type=int, default=None)
    p.add_argument("--non-audio-tokens", type=int, default=None,
                   help="skip fitting and use this value")
    p.add_argument("--audio-tokens", type=_int_list, default=None)
    p.add_argument("--output", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_cost, parser=p)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BundleError as exc:
        print(f"error[{exc.kind}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValidationError, SpeechPruneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
