import json
import os

import numpy as np
import pytest

from speechprune import read_bundle
from speechprune.cli import main


def run_cli(args):
    return main(args)


def synth_file(tmp_path, name="b.spb", extra=()):
    path = str(tmp_path / name)
    assert run_cli(["synth", "--output", path, "--n-tokens", "300",
                    "--embed-dim", "32", "--proj-dim", "16", "--seed", "4",
                    *extra]) == 0
    return path


class TestSynthCommand:
    def test_deterministic_files(self, tmp_path):
        a = synth_file(tmp_path, "a.spb")
        b = synth_file(tmp_path, "b.spb")
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_default_flags_shape(self, tmp_path):
        path = str(tmp_path / "default.spb")
        assert run_cli(["synth", "--output", path]) == 0
        bundle = read_bundle(path)
        assert bundle.speech.shape == (2250, 128)
        assert bundle.tokens_per_second == 25

    def test_snr_zero_labelled_unseparated(self, tmp_path):
        path = synth_file(tmp_path, "flat.spb", extra=["--needle-snr", "0"])
        assert read_bundle(path).label == "unseparated"


class TestPruneCommand:
    def test_rate_zero_keeps_everything(self, tmp_path, capsys):
        path = synth_file(tmp_path)
        assert run_cli(["prune", path, "--rate", "0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["kept"] == list(range(300))
        assert payload["kept_count"] == 300

    def test_paper_scale_counts(self, tmp_path, capsys):
        path = str(tmp_path / "big.spb")
        run_cli(["synth", "--output", path, "--n-tokens", "2000",
                 "--embed-dim", "32", "--proj-dim", "16", "--seed", "1"])
        assert run_cli(["prune", path, "--rate", "0.2", "--mode", "both"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["phase1_kept"] == 750
        assert payload["kept_count"] == 600

    def test_trace_included_on_request(self, tmp_path, capsys):
        path = synth_file(tmp_path)
        assert run_cli(["prune", path, "--rate", "0.5", "--trace"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert "phase1" in payload["traces"] and "phase2" in payload["traces"]
        assert len(payload["traces"]["phase1"]["frame_probs"]) == 12

    def test_emit_bundle_rate_zero_equals_input_rows(self, tmp_path):
        path = synth_file(tmp_path)
        out = str(tmp_path / "pruned.spb")
        assert run_cli(["prune", path, "--rate", "0",
                        "--emit-bundle", "--output", out]) == 0
        original, pruned = read_bundle(path), read_bundle(out)
        assert np.array_equal(original.speech, pruned.speech)
        assert pruned.needle == original.needle

    def test_emit_bundle_remaps_needle(self, tmp_path):
        path = synth_file(tmp_path)
        out = str(tmp_path / "pruned.spb")
        assert run_cli(["prune", path, "--rate", "0.5",
                        "--emit-bundle", "--output", out]) == 0
        original, pruned = read_bundle(path), read_bundle(out)
        assert pruned.speech.shape[0] == 150
        if pruned.needle is not None:
            start, length = pruned.needle
            span = pruned.speech[start : start + length]
            needle_vec = original.speech[original.needle.start]
            assert np.all(span == needle_vec)

    def test_emit_bundle_requires_output(self, tmp_path):
        path = synth_file(tmp_path)
        with pytest.raises(SystemExit) as err:
            run_cli(["prune", path, "--rate", "0", "--emit-bundle"])
        assert err.value.code == 2

    def test_unreadable_bundle_exit_code_and_stderr(self, tmp_path, capsys):
        bad = tmp_path / "bad.spb"
        bad.write_bytes(b"SPB2" + b"\x00" * 16)
        assert run_cli(["prune", str(bad), "--rate", "0"]) == 3
        assert "bad-magic" in capsys.readouterr().err

    def test_missing_file_is_data_error(self, tmp_path):
        assert run_cli(["prune", str(tmp_path / "nope.spb"), "--rate", "0"]) == 3

    def test_invalid_rate_is_data_error(self, tmp_path):
        path = synth_file(tmp_path)
        assert run_cli(["prune", path, "--rate", "1.5"]) == 3


class TestEvalCommand:
    COMMON = ["--n-tokens", "200", "--embed-dim", "16", "--proj-dim", "8",
              "--intermediate-target", "80", "--trials", "2", "--seed", "11"]

    def test_cardinality_csv(self, tmp_path):
        out = str(tmp_path / "report.csv")
        assert run_cli(["eval", *self.COMMON,
                        "--rates", "0.2,0.4,0.6,0.8",
                        "--methods", "speechprune,rap,rac",
                        "--output", out]) == 0
        lines = open(out).read().strip().split("\n")
        assert len(lines) == 13  # header + 12 aggregate rows

    def test_json_mirrors_csv_plus_config(self, tmp_path):
        out = str(tmp_path / "report.json")
        assert run_cli(["eval", *self.COMMON, "--rates", "0.5",
                        "--methods", "rap", "--format", "json",
                        "--output", out]) == 0
        payload = json.loads(open(out).read())
        assert payload["schema_version"] == "retention-report-v1"
        assert payload["spec"]["n_tokens"] == 200
        assert payload["run"]["trials"] == 2
        assert len(payload["rows"]) == 1

    def test_ablation_modes_sweep(self, tmp_path):
        out = str(tmp_path / "modes.csv")
        assert run_cli(["eval", *self.COMMON, "--rates", "0.2",
                        "--methods", "speechprune",
                        "--modes", "both,phase1_only,phase2_only",
                        "--output", out]) == 0
        lines = open(out).read().strip().split("\n")
        assert len(lines) == 4
        modes = [line.split(",")[1] for line in lines[1:]]
        assert modes == ["both", "phase1_only", "phase2_only"]


class TestCostCommand:
    def test_default_report(self, capsys):
        assert run_cli(["cost"]) == 0
        payload = json.loads(capsys.readouterr().out)
        sweep = {e["audio_tokens"]: e["ratio_vs_baseline"] for e in payload["audio_sweep"]}
        assert sweep[600] == pytest.approx(10.06 / 12.2, abs=0.03)
        assert sweep[450] == pytest.approx(7.93 / 12.2, abs=0.03)
        assert sweep[300] == pytest.approx(5.79 / 12.2, abs=0.03)
        assert sweep[150] == pytest.approx(3.66 / 12.2, abs=0.03)
        assert payload["phase2_overhead_ratio"] < 0.01

    def test_audio_tokens_zero(self, capsys):
        assert run_cli(["cost", "--audio-tokens", "750,0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        entry = [e for e in payload["audio_sweep"] if e["audio_tokens"] == 0][0]
        assert entry["flops"] > 0

    def test_explicit_non_audio_skips_fit(self, capsys):
        assert run_cli(["cost", "--non-audio-tokens", "200"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["fitted"] is False
        assert payload["config"]["non_audio_tokens"] == 200


class TestConfigFile:
    def test_flags_win_over_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"rate": 0.5, "intermediate_target": 100}))
        path = synth_file(tmp_path)
        assert run_cli(["prune", path, "--config", str(cfg), "--rate", "0.2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["config"]["pruning_rate"] == 0.2
        assert payload["config"]["intermediate_target"] == 100

    def test_config_file_supplies_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"rate": 0.5}))
        path = synth_file(tmp_path)
        assert run_cli(["prune", path, "--config", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["config"]["pruning_rate"] == 0.5


class TestDeterminism:
    def test_every_subcommand_byte_identical_across_runs(self, tmp_path):
        spb1, spb2 = str(tmp_path / "s1.spb"), str(tmp_path / "s2.spb")
        synth_args = ["synth", "--n-tokens", "250", "--embed-dim", "16",
                      "--proj-dim", "8", "--seed", "21"]
        run_cli([*synth_args, "--output", spb1])
        run_cli([*synth_args, "--output", spb2])
        assert open(spb1, "rb").read() == open(spb2, "rb").read()

        outs = []
        for name in ("p1.json", "p2.json"):
            out = str(tmp_path / name)
            assert run_cli(["prune", spb1, "--rate", "0.4", "--trace",
                            "--output", out]) == 0
            outs.append(open(out).read())
        assert outs[0] == outs[1]

        outs = []
        for name in ("e1.csv", "e2.csv"):
            out = str(tmp_path / name)
            assert run_cli(["eval", "--n-tokens", "250", "--embed-dim", "16",
                            "--proj-dim", "8", "--seed", "21", "--trials", "2",
                            "--rates", "0.2,0.6", "--methods", "speechprune,rap",
                            "--intermediate-target", "100", "--output", out]) == 0
            outs.append(open(out).read())
        assert outs[0] == outs[1]

        outs = []
        for name in ("c1.json", "c2.json"):
            out = str(tmp_path / name)
            assert run_cli(["cost", "--output", out]) == 0
            outs.append(open(out).read())
        assert outs[0] == outs[1]

    def test_output_files_written_atomically(self, tmp_path):
        out = str(tmp_path / "x.json")
        assert run_cli(["cost", "--output", out]) == 0
        leftovers = [f for f in os.listdir(tmp_path) if f.startswith(".")]
        assert leftovers == []
