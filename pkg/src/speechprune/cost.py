"""Parametric transformer-prefill FLOPs estimator.

A deliberately coarse two-term model: a linear term for the dense matmuls
(2 FLOPs per weight per token) plus the quadratic self-attention term. It
targets savings *ratios* between audio-token budgets rather than absolute
TFLOPS; the one free parameter, the count of non-audio tokens accompanying
the audio, is fitted against reference prefill measurements.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .errors import ValidationError

# Reference prefill TFLOPS of a 7B-class speech LLM by audio-token budget,
# used to calibrate the fitted non-audio overhead term. 750 tokens is the
# unpruned 30-second budget; the smaller budgets correspond to pruning
# rates 0.2/0.4/0.6/0.8.
REFERENCE_PREFILL_TFLOPS = {750: 12.2, 600: 10.06, 450: 7.93, 300: 5.79, 150: 3.66}

COST_REPORT_SCHEMA = "cost-report-v1"


@dataclass(frozen=True)
class CostModelConfig:
    n_layers: int = 28
    hidden_dim: int = 3584
    ffn_dim: int = 18944
    total_params: int = 7_000_000_000  # weights participating in per-token matmuls
    non_audio_tokens: int = 1

    def validate(self) -> None:
        for name, value in asdict(self).items():
            if value < 1:
                raise ValidationError(f"{name} must be >= 1, got {value}")


def prefill_flops(config: CostModelConfig, n_audio_tokens: int) -> float:
    """Estimated FLOPs to prefill n audio tokens plus the non-audio context."""
    config.validate()
    if n_audio_tokens < 0:
        raise ValidationError(f"n_audio_tokens must be >= 0, got {n_audio_tokens}")
    n = n_audio_tokens + config.non_audio_tokens
    linear = 2.0 * n * config.total_params
    attention = 4.0 * n * n * config.hidden_dim * config.n_layers
    return linear + attention


def phase2_overhead_flops(n1: int, embed_dim: int, proj_dim: int) -> float:
    """Conservative FLOPs of the binarized-attention pass over n1 tokens.

    Two projections (counted as full multiply-accumulates even though the
    operands are sign matrices) plus the n1 x n1 score matrix.
    """
    if min(n1, embed_dim, proj_dim) < 1:
        raise ValidationError("n1, embed_dim and proj_dim must all be >= 1")
    projections = 2.0 * n1 * embed_dim * proj_dim * 2
    scores = 2.0 * n1 * n1 * proj_dim
    return projections + scores


def fit_non_audio_tokens(
    config: CostModelConfig,
    calibration: dict[int, float] | None = None,
    baseline_audio: int = 750,
    max_tokens: int = 8192,
) -> tuple[int, float]:
    """Fit the non-audio token count against reference FLOPs ratios.

    One-dimensional scan minimizing the maximum absolute error between the
    model's FLOPs ratios (each budget vs the baseline budget) and the
    calibration ratios. Returns (fitted count, max ratio error).
    """
    calibration = dict(calibration or REFERENCE_PREFILL_TFLOPS)
    if baseline_audio not in calibration:
        raise ValidationError(
            f"calibration must include the baseline budget {baseline_audio}"
        )
    base_ref = calibration[baseline_audio]
    targets = {
        audio: value / base_ref
        for audio, value in calibration.items()
        if audio != baseline_audio
    }
    best_c, best_err = 1, float("inf")
    for c in range(1, max_tokens + 1):
        candidate = CostModelConfig(
            n_layers=config.n_layers,
            hidden_dim=config.hidden_dim,
            ffn_dim=config.ffn_dim,
            total_params=config.total_params,
            non_audio_tokens=c,
        )
        base = prefill_flops(candidate, baseline_audio)
        err = max(
            abs(prefill_flops(candidate, audio) / base - target)
            for audio, target in targets.items()
        )
        if err < best_err:
            best_c, best_err = c, err
    return best_c, best_err


def cost_report(
    config: CostModelConfig,
    audio_tokens: list[int] | None = None,
    calibration: dict[int, float] | None = None,
    fit: bool = True,
    baseline_audio: int = 750,
) -> dict:
    """JSON-ready cost summary: fitted parameter, per-budget FLOPs and ratios.

    With ``fit`` the non-audio token count is re-fitted against the
    calibration table; otherwise the config's value is used as-is.
    """
    audio_tokens = list(audio_tokens or sorted(REFERENCE_PREFILL_TFLOPS, reverse=True))
    if fit:
        fitted, fit_err = fit_non_audio_tokens(config, calibration, baseline_audio)
        config = CostModelConfig(
            n_layers=config.n_layers,
            hidden_dim=config.hidden_dim,
            ffn_dim=config.ffn_dim,
            total_params=config.total_params,
            non_audio_tokens=fitted,
        )
    else:
        fit_err = None
    config.validate()

    base = prefill_flops(config, baseline_audio)
    entries = [
        {
            "audio_tokens": audio,
            "flops": prefill_flops(config, audio),
            "ratio_vs_baseline": prefill_flops(config, audio) / base,
        }
        for audio in audio_tokens
    ]
    overhead = phase2_overhead_flops(baseline_audio, config.hidden_dim, config.hidden_dim)
    return {
        "schema_version": COST_REPORT_SCHEMA,
        "config": asdict(config),
        "fitted": fit,
        "fit_max_ratio_error": fit_err,
        "baseline_audio_tokens": baseline_audio,
        "baseline_flops": base,
        "audio_sweep": entries,
        "phase2_overhead_flops": overhead,
        "phase2_overhead_ratio": overhead / base,
    }


def cost_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"
