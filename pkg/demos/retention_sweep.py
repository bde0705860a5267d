#!/usr/bin/env python3
"""Compare needle retention across methods, rates, and ablation modes.

Reproduces the harness experiment behind the acceptance gates: the
two-phase method against random pruning (RAP) and random cropping (RAC),
plus the single-phase ablations, averaged over paired trials.
"""

from speechprune import SyntheticSpec, run_experiment

spec = SyntheticSpec(seed=0)
TRIALS = 40  # bump for tighter statistics

report = run_experiment(
    spec,
    rates=[0.2, 0.4, 0.6, 0.8],
    methods=["speechprune", "rap", "rac"],
    modes=["both"],
    trials=TRIALS,
)
print(f"methods vs rates ({TRIALS} paired trials):")
print(f"{'method':<12} {'rate':>5} {'retention':>10} {'std':>7} {'kept':>6}")
for row in report.rows:
    print(f"{row.method:<12} {row.pruning_rate:>5.1f} {row.retention_mean:>10.3f} "
          f"{row.retention_std:>7.3f} {row.kept_mean:>6.0f}")

# Ablation: each phase alone vs the combined pipeline at one rate.
ablation = run_experiment(
    spec,
    rates=[0.2],
    methods=["speechprune"],
    modes=["both", "phase1_only", "phase2_only"],
    trials=TRIALS,
)
print(f"\nablation at rate 0.2:")
for row in ablation.rows:
    print(f"  {row.mode:<12} retention {row.retention_mean:.3f}")

# Reports serialize to plot-ready CSV and to JSON with the full config.
with open("retention_sweep.csv", "w") as fh:
    fh.write(report.to_csv())
print("\nwrote retention_sweep.csv")
