"""Acceptance suite: one test per release criterion, each printing a
pass/fail line. Run with ``pytest tests/test_acceptance.py -v -s`` to see
the lines as they complete.
"""

import io
import time

import numpy as np
import pytest

from speechprune import (
    CostModelConfig,
    MODE_BOTH,
    MODE_PHASE1_ONLY,
    MODE_PHASE2_ONLY,
    REFERENCE_PREFILL_TFLOPS,
    BundleError,
    EmbeddingBundle,
    NeedleSpan,
    SyntheticSpec,
    fit_non_audio_tokens,
    largest_remainder_allocate,
    phase1_select,
    phase2_overhead_flops,
    phase2_select,
    prefill_flops,
    read_bundle,
    retention_trials,
    softmax,
    write_bundle,
)
from speechprune.cli import main as cli_main
from oracles import oracle_phase1, oracle_phase2

RATES = (0.2, 0.4, 0.6, 0.8)


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {status} - {name}{suffix}")
    assert ok, f"{name}{suffix}"


def test_oracle_equivalence():
    """Both phases match independent brute-force reimplementations."""
    rng = np.random.default_rng(90_001)
    start = time.monotonic()
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 65))
        l = int(rng.integers(1, 7))
        d = int(rng.integers(2, 13))
        dk = int(rng.integers(1, 9))
        f = int(rng.integers(1, 9))
        speech = rng.standard_normal((n, d)).astype(np.float32)
        text = rng.standard_normal((l, d)).astype(np.float32)
        wq = rng.standard_normal((d, dk)).astype(np.float32)
        wk = rng.standard_normal((d, dk)).astype(np.float32)
        keep1 = int(rng.integers(0, n + 1))
        keep2 = int(rng.integers(0, n + 1))

        engine1 = phase1_select(speech, text, f, keep1)
        oracle1, _ = oracle_phase1(speech, text, f, keep1)
        if engine1.kept.tolist() != oracle1:
            mismatches += 1
        engine2 = phase2_select(speech, wq, wk, keep2)
        if engine2.kept.tolist() != oracle_phase2(speech, wq, wk, keep2):
            mismatches += 1
    elapsed = time.monotonic() - start
    report(
        "oracle equivalence (1000 bundles, N<=64, f<=8)",
        mismatches == 0 and elapsed < 60.0,
        f"{mismatches} mismatches, {elapsed:.1f}s",
    )


def test_allocation_conservation():
    """Largest-remainder budgets sum exactly and respect capacity."""
    rng = np.random.default_rng(90_002)
    violations = 0
    for _ in range(10_000):
        m = int(rng.integers(1, 24))
        capacities = rng.integers(1, 12, size=m)
        probs = softmax(rng.standard_normal(m) * 3.0)
        keep = int(rng.integers(0, capacities.sum() + 1))
        alloc = largest_remainder_allocate(probs, keep, capacities)
        if alloc.sum() != keep or np.any(alloc > capacities) or np.any(alloc < 0):
            violations += 1
    report("allocation conservation (10000 cases)", violations == 0,
           f"{violations} violations")


def test_attention_normalization():
    """Every attention row sums to 1 within 1e-5 on 100 random bundles."""
    rng = np.random.default_rng(90_003)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 90))
        d = int(rng.integers(2, 24))
        dk = int(rng.integers(1, 16))
        speech = rng.standard_normal((n, d)).astype(np.float32)
        wq = rng.standard_normal((d, dk)).astype(np.float32)
        wk = rng.standard_normal((d, dk)).astype(np.float32)
        trace = phase2_select(speech, wq, wk, min(5, n))
        worst = max(worst, float(np.abs(trace.attention.sum(axis=1) - 1.0).max()))
    report("attention row normalization (100 bundles)", worst <= 1e-5,
           f"worst |row sum - 1| = {worst:.2e}")


def test_rap_calibration():
    """RAP mean needle retention equals 1-r within 0.02 at every grid rate."""
    spec = SyntheticSpec()
    errors = {}
    for rate in RATES:
        rets, _ = retention_trials(spec, "rap", rate, trials=500)
        errors[rate] = abs(float(rets.mean()) - (1.0 - rate))
    ok = all(err <= 0.02 for err in errors.values())
    detail = ", ".join(f"r={r}: |err|={e:.4f}" for r, e in errors.items())
    report("RAP calibration (500 trials per rate)", ok, detail)


@pytest.fixture(scope="module")
def dominance_cells():
    spec = SyntheticSpec()
    cells = {}
    for rate in RATES:
        cells[("speechprune", rate)] = retention_trials(
            spec, "speechprune", rate, MODE_BOTH, trials=200
        )[0]
        cells[("rap", rate)] = retention_trials(spec, "rap", rate, trials=200)[0]
        cells[("rac", rate)] = retention_trials(spec, "rac", rate, trials=200)[0]
    return cells


def test_dominance(dominance_cells):
    """speechprune(both) beats RAP and RAC in mean at every rate, and the
    paired difference against RAP is positive in >=95% of 200 trials."""
    ok = True
    details = []
    for rate in RATES:
        sp = dominance_cells[("speechprune", rate)]
        rap = dominance_cells[("rap", rate)]
        rac = dominance_cells[("rac", rate)]
        mean_dom = sp.mean() > rap.mean() and sp.mean() > rac.mean()
        pos_frac = float((sp > rap).mean())
        ok = ok and mean_dom and pos_frac >= 0.95
        details.append(
            f"r={rate}: sp={sp.mean():.3f} rap={rap.mean():.3f} "
            f"rac={rac.mean():.3f} pos={pos_frac:.3f}"
        )
    report("retention dominance (200 paired trials)", ok, "; ".join(details))


def test_ablation_ordering(dominance_cells):
    """Combined-mode retention >= each single-phase mode at rate 0.2."""
    spec = SyntheticSpec()
    both = dominance_cells[("speechprune", 0.2)]
    p1, _ = retention_trials(spec, "speechprune", 0.2, MODE_PHASE1_ONLY, trials=200)
    p2, _ = retention_trials(spec, "speechprune", 0.2, MODE_PHASE2_ONLY, trials=200)
    ok = both.mean() >= p1.mean() and both.mean() >= p2.mean()
    report(
        "ablation ordering at rate 0.2 (200 trials)",
        ok,
        f"both={both.mean():.4f} phase1_only={p1.mean():.4f} "
        f"phase2_only={p2.mean():.4f}",
    )


def test_cost_ratio_reproduction():
    """One fitted scalar reproduces all reference FLOPs ratios within 0.03,
    and the modeled reduction at rate 0.8 is 70% within 3 points."""
    config = CostModelConfig()
    fitted, _ = fit_non_audio_tokens(config)
    config = CostModelConfig(non_audio_tokens=fitted)
    base = prefill_flops(config, 750)
    base_ref = REFERENCE_PREFILL_TFLOPS[750]
    errs = {
        audio: abs(prefill_flops(config, audio) / base - ref / base_ref)
        for audio, ref in REFERENCE_PREFILL_TFLOPS.items()
        if audio != 750
    }
    reduction = 1.0 - prefill_flops(config, 150) / base
    ok = all(e <= 0.03 for e in errs.values()) and abs(reduction - 0.70) <= 0.03
    detail = (
        f"non_audio={fitted}, max ratio err={max(errs.values()):.4f}, "
        f"PR0.8 reduction={reduction:.3f}"
    )
    report("cost ratio reproduction (fitted scalar)", ok, detail)


def test_overhead_bound():
    """Conservative phase-2 FLOPs stay under 1% of modeled prefill."""
    config = CostModelConfig()
    fitted, _ = fit_non_audio_tokens(config)
    config = CostModelConfig(non_audio_tokens=fitted)
    overhead = phase2_overhead_flops(750, config.hidden_dim, config.hidden_dim)
    ratio = overhead / prefill_flops(config, 750)
    report("phase-2 overhead < 1% of prefill", ratio < 0.01, f"ratio={ratio:.4%}")


def test_cli_determinism(tmp_path):
    """Every subcommand produces byte-identical outputs across two runs."""
    def run_twice(args, out_name):
        payloads = []
        for tag in ("a", "b"):
            out = str(tmp_path / f"{tag}-{out_name}")
            code = cli_main([*args, "--output", out])
            assert code == 0
            with open(out, "rb") as fh:
                payloads.append(fh.read())
        return payloads[0] == payloads[1]

    synth_args = ["synth", "--n-tokens", "400", "--embed-dim", "32",
                  "--proj-dim", "16", "--seed", "77"]
    ok_synth = run_twice(synth_args, "s.spb")
    spb = str(tmp_path / "a-s.spb")
    ok_prune = run_twice(["prune", spb, "--rate", "0.4", "--trace"], "p.json")
    ok_eval = run_twice(
        ["eval", "--n-tokens", "400", "--embed-dim", "32", "--proj-dim", "16",
         "--seed", "77", "--trials", "3", "--rates", "0.2,0.8",
         "--methods", "speechprune,rap,rac", "--intermediate-target", "150"],
        "e.csv",
    )
    ok_cost = run_twice(["cost"], "c.json")
    ok = ok_synth and ok_prune and ok_eval and ok_cost
    report(
        "CLI determinism (fixed seeds, two runs per subcommand)",
        ok,
        f"synth={ok_synth} prune={ok_prune} eval={ok_eval} cost={ok_cost}",
    )


def test_format_robustness():
    """10000 fuzzed SPB1 inputs produce structured errors, never crashes."""
    rng = np.random.default_rng(90_010)
    template = io.BytesIO()
    write_bundle(
        EmbeddingBundle(
            speech=rng.standard_normal((40, 8)).astype(np.float32),
            text=rng.standard_normal((3, 8)).astype(np.float32),
            wq=rng.standard_normal((8, 4)).astype(np.float32),
            wk=rng.standard_normal((8, 4)).astype(np.float32),
            tokens_per_second=25,
            needle=NeedleSpan(5, 4),
        ),
        template,
    )
    template = template.getvalue()
    crashes = 0
    for i in range(10_000):
        if i % 3 == 0:
            size = int(rng.integers(0, 300))
            data = bytes(rng.integers(0, 256, size=size, dtype=np.uint8))
        elif i % 3 == 1:
            data = bytearray(template)
            for _ in range(int(rng.integers(1, 12))):
                data[int(rng.integers(0, len(data)))] = int(rng.integers(0, 256))
            data = bytes(data)
        else:
            cut = int(rng.integers(0, len(template)))
            data = template[:cut]
        try:
            bundle = read_bundle(data)
            bundle.validate()  # parsed bundles must already satisfy invariants
        except BundleError:
            pass
        except Exception:
            crashes += 1
    report("format robustness (10000 fuzzed inputs)", crashes == 0,
           f"{crashes} crashes")
