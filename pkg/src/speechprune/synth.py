"""Synthetic needle-in-a-haystack bundles and retention experiments.

A bundle plants one short, text-aligned token span (the needle) inside a
long stretch of random background tokens. Retention of that span under a
pruning method is the harness metric: it is the upstream quantity the
pruner actually controls, measurable without running any language model.

Construction notes, load-bearing for the retention statistics:

* The needle span repeats a single normalized vector (one shared noise
  draw). Distinct per-token draws would give every needle token a
  different sign pattern, and the binarized-attention phase -- whose
  softmax operates deep in its saturated regime -- would then concentrate
  received attention on one or two of them instead of the whole span.
  With identical rows the span's attention columns tie exactly and the
  received mass splits evenly.

* ``wq`` and ``wk`` share a rank-one component along the mean text
  direction, scaled by ``proj_text_gain``. Trained Q/K projections are
  correlated with the directions the model attends to; fully independent
  Gaussian projections make the binarized attention scores statistically
  independent of token content, which turns phase 2 into an arbitrary
  seed-dependent filter. The shared component restores the property the
  pruner relies on: text-aligned tokens receive more first-layer
  attention.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .bundle import EmbeddingBundle, NeedleSpan
from .errors import ValidationError
from .ops import l2_normalize_rows
from .prune import (
    METHOD_SPEECHPRUNE,
    METHODS,
    MODE_BOTH,
    PruneConfig,
    PruneResult,
    run_method,
    seed_entropy,
)

REPORT_SCHEMA = "retention-report-v1"
CSV_COLUMNS = (
    "method",
    "mode",
    "pruning_rate",
    "trials",
    "retention_mean",
    "retention_std",
    "kept_mean",
)


@dataclass(frozen=True)
class SyntheticSpec:
    n_tokens: int = 2250
    embed_dim: int = 128
    proj_dim: int = 64
    n_text: int = 16
    tokens_per_second: int = 25
    needle_length: int = 25
    needle_snr: float = 8.0
    noise_scale: float = 1.0
    proj_text_gain: float = 5.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("n_tokens", "embed_dim", "proj_dim", "n_text",
                     "tokens_per_second", "needle_length"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.needle_length > self.n_tokens:
            raise ValidationError(
                f"needle_length {self.needle_length} exceeds n_tokens {self.n_tokens}"
            )
        if self.needle_snr < 0:
            raise ValidationError(f"needle_snr must be >= 0, got {self.needle_snr}")
        if self.noise_scale <= 0:
            raise ValidationError(f"noise_scale must be > 0, got {self.noise_scale}")
        if self.proj_text_gain < 0:
            raise ValidationError(
                f"proj_text_gain must be >= 0, got {self.proj_text_gain}"
            )


def synth_bundle(spec: SyntheticSpec) -> EmbeddingBundle:
    """Deterministically generate one bundle from a spec and its seed.

    Draw order is frozen (needle position, text, background, needle noise,
    projection plant, wq, wk) so downstream consumers can rely on
    byte-identical bundles for equal specs.
    """
    spec.validate()
    rng = np.random.default_rng(seed_entropy(spec.seed))
    d, dk = spec.embed_dim, spec.proj_dim

    start = int(rng.integers(0, spec.n_tokens - spec.needle_length + 1))
    text = l2_normalize_rows(rng.standard_normal((spec.n_text, d)))
    t_mean = text.astype(np.float64).mean(axis=0)
    t_dir = t_mean / np.linalg.norm(t_mean)

    speech = rng.standard_normal((spec.n_tokens, d)) * spec.noise_scale
    shared_noise = rng.standard_normal(d) * spec.noise_scale
    needle_vec = l2_normalize_rows(
        (spec.needle_snr * t_dir + shared_noise)[None, :]
    )[0]
    speech[start : start + spec.needle_length] = needle_vec

    plant_cols = rng.standard_normal(dk)
    plant = spec.proj_text_gain * np.outer(t_dir, plant_cols)
    wq = rng.standard_normal((d, dk)) + plant
    wk = rng.standard_normal((d, dk)) + plant

    return EmbeddingBundle(
        speech=speech.astype(np.float32),
        text=text,
        wq=wq.astype(np.float32),
        wk=wk.astype(np.float32),
        tokens_per_second=spec.tokens_per_second,
        needle=NeedleSpan(start, spec.needle_length),
    )


def needle_retention(result: PruneResult, needle: NeedleSpan) -> float:
    """Fraction of the needle span surviving in ``result.kept_final``."""
    start, length = needle
    if length < 1:
        raise ValidationError("needle span is empty")
    kept = result.kept_final
    hits = int(np.count_nonzero((kept >= start) & (kept < start + length)))
    return hits / length


@dataclass
class ReportRow:
    method: str
    mode: str
    pruning_rate: float
    trials: int
    retention_mean: float
    retention_std: float
    kept_mean: float


@dataclass
class RetentionReport:
    rows: list[ReportRow]
    spec: SyntheticSpec
    run: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow([
                row.method,
                row.mode,
                f"{row.pruning_rate:g}",
                row.trials,
                f"{row.retention_mean:.6f}",
                f"{row.retention_std:.6f}",
                f"{row.kept_mean:.6f}",
            ])
        return out.getvalue()

    def to_json(self) -> str:
        payload = {
            "schema_version": REPORT_SCHEMA,
            "spec": asdict(self.spec),
            "run": self.run,
            "rows": [asdict(row) for row in self.rows],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def retention_trials(
    spec: SyntheticSpec,
    method: str,
    rate: float,
    mode: str = MODE_BOTH,
    trials: int = 100,
    intermediate_target: int = 750,
    frame_size_override: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial needle retentions and kept counts for one method cell.

    Trial t uses seed ``spec.seed + t`` for both the bundle and the
    baseline sampler, so different methods evaluated at the same spec are
    paired trial by trial.
    """
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    retentions = np.empty(trials)
    kept_counts = np.empty(trials)
    for t in range(trials):
        bundle = synth_bundle(replace(spec, seed=spec.seed + t))
        config = PruneConfig(
            pruning_rate=rate,
            intermediate_target=intermediate_target,
            frame_size_override=frame_size_override,
            mode=mode if method == METHOD_SPEECHPRUNE else MODE_BOTH,
            seed=spec.seed + t,
        )
        result = run_method(bundle, method, config)
        retentions[t] = needle_retention(result, bundle.needle)
        kept_counts[t] = len(result.kept_final)
    return retentions, kept_counts


def run_experiment(
    spec: SyntheticSpec,
    rates: list[float],
    methods: list[str] | None = None,
    modes: list[str] | None = None,
    trials: int = 100,
    intermediate_target: int = 750,
    frame_size_override: int | None = None,
) -> RetentionReport:
    """Sweep (rate, method, mode) cells and aggregate retention statistics.

    Bundles are generated once per trial and shared by every cell, so all
    aggregates are paired across methods and rates.
    """
    spec.validate()
    methods = list(methods) if methods else [METHOD_SPEECHPRUNE]
    modes = list(modes) if modes else [MODE_BOTH]
    if trials < 1:
        raise ValidationError(f"trials must be >= 1, got {trials}")
    for method in methods:
        if method not in METHODS:
            raise ValidationError(f"unknown method {method!r}")

    cells = []
    for method in methods:
        for mode in modes if method == METHOD_SPEECHPRUNE else ["-"]:
            for rate in rates:
                cells.append((method, mode, rate))

    retention = {cell: np.empty(trials) for cell in cells}
    kept = {cell: np.empty(trials) for cell in cells}
    for t in range(trials):
        bundle = synth_bundle(replace(spec, seed=spec.seed + t))
        for method, mode, rate in cells:
            config = PruneConfig(
                pruning_rate=rate,
                intermediate_target=intermediate_target,
                frame_size_override=frame_size_override,
                mode=mode if method == METHOD_SPEECHPRUNE else MODE_BOTH,
                seed=spec.seed + t,
            )
            result = run_method(bundle, method, config)
            retention[(method, mode, rate)][t] = needle_retention(result, bundle.needle)
            kept[(method, mode, rate)][t] = len(result.kept_final)

    rows = [
        ReportRow(
            method=method,
            mode=mode,
            pruning_rate=rate,
            trials=trials,
            retention_mean=float(retention[cell].mean()),
            retention_std=float(retention[cell].std()),
            kept_mean=float(kept[cell].mean()),
        )
        for cell in cells
        for method, mode, rate in [cell]
    ]
    run = {
        "rates": [float(r) for r in rates],
        "methods": methods,
        "modes": modes,
        "trials": trials,
        "intermediate_target": intermediate_target,
        "frame_size_override": frame_size_override,
    }
    return RetentionReport(rows=rows, spec=spec, run=run)
