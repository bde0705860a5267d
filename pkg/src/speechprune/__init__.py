"""Training-free two-phase speech-token pruning over embedding matrices.

The engine selects which speech tokens survive before an expensive
transformer prefill: phase 1 keeps tokens by cosine similarity to the text
query with a frame-adaptive budget, phase 2 re-ranks the survivors by
attention received under sign-binarized first-layer Q/K projections.
Random-pruning baselines, a synthetic needle-retention harness, and a
prefill FLOPs cost model round out the package.
"""

from .bundle import EmbeddingBundle, NeedleSpan, read_bundle, write_bundle
from .cost import (
    CostModelConfig,
    REFERENCE_PREFILL_TFLOPS,
    cost_report,
    fit_non_audio_tokens,
    phase2_overhead_flops,
    prefill_flops,
)
from .errors import BundleError, ShapeError, SpeechPruneError, ValidationError
from .ops import (
    TIE_LOW_INDEX,
    l2_normalize_rows,
    matmul,
    mean_axis,
    sign_binarize,
    softmax,
    topk_indices,
)
from .prune import (
    METHOD_RAC,
    METHOD_RAP,
    METHOD_SPEECHPRUNE,
    METHODS,
    MODE_BOTH,
    MODE_PHASE1_ONLY,
    MODE_PHASE2_ONLY,
    MODES,
    Phase1Trace,
    Phase2Trace,
    PruneConfig,
    PruneResult,
    kept_count,
    largest_remainder_allocate,
    phase1_select,
    phase2_select,
    rac_crop,
    rap_prune,
    run_method,
    speechprune,
)
from .synth import (
    RetentionReport,
    SyntheticSpec,
    needle_retention,
    retention_trials,
    run_experiment,
    synth_bundle,
)

__version__ = "0.1.0"

__all__ = [
    "BundleError",
    "CostModelConfig",
    "EmbeddingBundle",
    "METHOD_RAC",
    "METHOD_RAP",
    "METHOD_SPEECHPRUNE",
    "METHODS",
    "MODE_BOTH",
    "MODE_PHASE1_ONLY",
    "MODE_PHASE2_ONLY",
    "MODES",
    "NeedleSpan",
    "Phase1Trace",
    "Phase2Trace",
    "PruneConfig",
    "PruneResult",
    "REFERENCE_PREFILL_TFLOPS",
    "RetentionReport",
    "ShapeError",
    "SpeechPruneError",
    "SyntheticSpec",
    "TIE_LOW_INDEX",
    "ValidationError",
    "cost_report",
    "fit_non_audio_tokens",
    "kept_count",
    "l2_normalize_rows",
    "largest_remainder_allocate",
    "matmul",
    "mean_axis",
    "needle_retention",
    "phase1_select",
    "phase2_overhead_flops",
    "phase2_select",
    "prefill_flops",
    "rac_crop",
    "rap_prune",
    "read_bundle",
    "retention_trials",
    "run_experiment",
    "run_method",
    "sign_binarize",
    "softmax",
    "speechprune",
    "synth_bundle",
    "topk_indices",
    "write_bundle",
]
