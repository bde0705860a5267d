#!/usr/bin/env python3
"""Fit the prefill cost model and check the savings it predicts.

The model is two terms: 2*n*params for the dense matmuls plus
4*n^2*hidden*layers for attention, with n = audio tokens + a fitted count
of non-audio (prompt/text/special) tokens. One scalar fit reproduces the
reference TFLOPS ratios across all pruning rates simultaneously.
"""

from speechprune import (
    CostModelConfig,
    REFERENCE_PREFILL_TFLOPS,
    fit_non_audio_tokens,
    phase2_overhead_flops,
    prefill_flops,
)

config = CostModelConfig()  # 7B-class shape: 28 layers, 3584 hidden
fitted, max_err = fit_non_audio_tokens(config)
config = CostModelConfig(non_audio_tokens=fitted)
print(f"fitted non-audio tokens: {fitted} (max ratio error {max_err:.4f})")

base = prefill_flops(config, 750)
base_ref = REFERENCE_PREFILL_TFLOPS[750]
print(f"\n{'audio':>6} {'model ratio':>12} {'reference':>10} {'saving':>8}")
for audio in sorted(REFERENCE_PREFILL_TFLOPS, reverse=True):
    ratio = prefill_flops(config, audio) / base
    ref = REFERENCE_PREFILL_TFLOPS[audio] / base_ref
    print(f"{audio:>6} {ratio:>12.4f} {ref:>10.4f} {1 - ratio:>7.1%}")

# The scoring pass itself is cheap: two binarized projections plus an
# n^2 score matrix, counted as full multiply-accumulates.
overhead = phase2_overhead_flops(750, config.hidden_dim, config.hidden_dim)
print(f"\nphase-2 scoring overhead at 750 tokens: {overhead / 1e9:.1f} GFLOPs "
      f"= {overhead / base:.2%} of prefill")

# Absolute numbers are informational only; the model tracks ratios.
print(f"modeled prefill at 750 audio tokens: {base / 1e12:.1f} TFLOPs")
