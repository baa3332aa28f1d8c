import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from hrvaffect.cli import main
from hrvaffect.pipeline import (
    ConfigInvalidError,
    config_from_dict,
    config_to_dict,
    run_hash,
    validate_schema,
)

SYNTH_SPEC = {
    "duration_s": 360.0,
    "ecg_rate_hz": 350.0,
    "ppg_rate_hz": 64.0,
    "states": [
        {"label": "baseline", "mean_bpm": 65.0, "bpm_jitter_ms": 25.0, "duration_s": 120.0},
        {"label": "stress", "mean_bpm": 92.0, "bpm_jitter_ms": 25.0, "duration_s": 120.0},
        {"label": "amusement", "mean_bpm": 75.0, "bpm_jitter_ms": 25.0, "duration_s": 120.0},
    ],
    "respiratory_rate_hz": 0.25,
    "respiratory_rr_modulation_ms": 30.0,
    "noise_std": 0.02,
    "seed": 11,
}


def write_config(tmp_path: Path, out_name="run", **overrides) -> Path:
    spec_path = tmp_path / "synth_spec.json"
    spec_path.write_text(json.dumps(SYNTH_SPEC))
    doc = {
        "synthetic_spec_path": str(spec_path),
        "out_dir": str(tmp_path / out_name),
        "seed": 5,
        "learn": {"n_trees": 15, "cv_folds": 4},
        "explain": {"background_size": 8, "max_instances": 3},
    }
    doc.update(overrides)
    config_path = tmp_path / f"config_{out_name}.json"
    config_path.write_text(json.dumps(doc))
    return config_path


def run_cli(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("cli")
    config_path = write_config(tmp_path)
    for command in ("extract", "variance", "train-eval", "importance", "report"):
        result = run_cli(command, "--config", str(config_path))
        assert result.exit_code == 0, result.output
    return tmp_path / "run"


class TestStages:
    def test_outputs_exist(self, full_run):
        expected = [
            "config.json", "features.csv", "extract_stats.json",
            "variance.csv", "variance_summary.csv", "state_stats.csv",
            "variance_series.svg", "state_box_bpm.svg",
            "metrics.json", "model.json", "roc_points.csv", "roc_ECG.svg", "roc_PPG.svg",
            "importance.csv", "shap_points.csv", "importance_ECG.svg", "importance_PPG.svg",
            "report.json",
        ]
        for name in expected:
            assert (full_run / name).exists(), name

    def test_config_hash_stamped_everywhere(self, full_run):
        config_hash = json.loads((full_run / "config.json").read_text())["config_hash"]
        for name in ("features.csv", "variance.csv", "roc_points.csv"):
            first = (full_run / name).read_text().splitlines()[0]
            assert first == f"# config_hash={config_hash}"
        for name in ("metrics.json", "model.json", "report.json"):
            assert json.loads((full_run / name).read_text())["config_hash"] == config_hash
        for name in ("roc_ECG.svg", "importance_PPG.svg"):
            assert f"<!-- config_hash={config_hash} -->" in (full_run / name).read_text()

    def test_metrics_shape(self, full_run):
        metrics = json.loads((full_run / "metrics.json").read_text())
        for modality in ("ECG", "PPG"):
            entry = metrics["modalities"][modality]
            assert entry["folds"] == 4
            assert set(entry["families"]) == {"extra_trees", "knn", "gaussian_nb"}
            assert 0.0 <= entry["holdout_accuracy"] <= 1.0

    def test_separable_states_classified_accurately(self, full_run):
        # Three states 10+ BPM apart with modest jitter are easy: the pipeline
        # must deliver near-perfect holdout accuracy on both signals.
        metrics = json.loads((full_run / "metrics.json").read_text())
        for modality in ("ECG", "PPG"):
            assert metrics["modalities"][modality]["holdout_accuracy"] >= 0.95

    def test_importance_rankings_cover_all_features(self, full_run):
        doc = json.loads((full_run / "report.json").read_text())
        for modality in ("ECG", "PPG"):
            ranking = doc["importance"]["rankings"][modality]
            assert len(ranking) == 13
            assert sorted(ranking) == sorted(
                ["bpm", "ibi", "sdnn", "sdsd", "rmssd", "pnn20", "pnn50", "mad",
                 "br", "sd1", "sd2", "s", "sd1_sd2"]
            )

    def test_state_overlaps_emitted(self, full_run):
        doc = json.loads((full_run / "state_overlaps.json").read_text())
        assert doc["feature"] == "bpm"
        assert set(doc["flagged_pairs"]) == {"ECG", "PPG"}

    def test_report_matches_shipped_schema(self, full_run):
        from hrvaffect.pipeline import report_schema

        doc = json.loads((full_run / "report.json").read_text())
        assert validate_schema(doc, report_schema()) == []

    def test_features_csv_schema(self, full_run):
        header = (full_run / "features.csv").read_text().splitlines()[1]
        assert header.startswith("window_id,subject_id,modality,label,bpm,ibi,")


class TestErrorPaths:
    def test_variance_without_extract(self, tmp_path):
        config_path = write_config(tmp_path, out_name="fresh")
        result = run_cli("variance", "--config", str(config_path))
        assert result.exit_code == 1
        payload = json.loads(result.output.strip().splitlines()[-1])
        assert payload["error"] == "MissingInput"
        assert payload["input"] == "features.csv"

    def test_importance_without_model(self, tmp_path):
        config_path = write_config(tmp_path, out_name="partial")
        assert run_cli("extract", "--config", str(config_path)).exit_code == 0
        result = run_cli("importance", "--config", str(config_path))
        assert result.exit_code == 1
        assert json.loads(result.output.strip().splitlines()[-1])["error"] == "MissingInput"

    def test_config_invalid_field(self, tmp_path):
        config_path = write_config(tmp_path, out_name="bad", box_feature="nope")
        result = run_cli("extract", "--config", str(config_path))
        assert result.exit_code == 1
        payload = json.loads(result.output.strip().splitlines()[-1])
        assert payload["error"] == "ConfigInvalid"
        assert payload["field"] == "box_feature"

    def test_unknown_config_key(self, tmp_path):
        config_path = write_config(tmp_path, out_name="odd", extra_key=1)
        result = run_cli("extract", "--config", str(config_path))
        assert result.exit_code == 1
        assert json.loads(result.output.strip().splitlines()[-1])["error"] == "ConfigInvalid"

    def test_hash_guard_requires_force(self, tmp_path):
        config_path = write_config(tmp_path, out_name="guarded")
        assert run_cli("extract", "--config", str(config_path)).exit_code == 0
        changed = run_cli("extract", "--config", str(config_path), "--seed", "99")
        assert changed.exit_code == 1
        assert json.loads(changed.output.strip().splitlines()[-1])["error"] == "ConfigHashMismatch"
        forced = run_cli("extract", "--config", str(config_path), "--seed", "99", "--force")
        assert forced.exit_code == 0

    def test_missing_dataset_input(self, tmp_path):
        config_path = tmp_path / "c.json"
        config_path.write_text(json.dumps({
            "synthetic_spec_path": str(tmp_path / "absent.json"),
            "out_dir": str(tmp_path / "o"),
        }))
        result = run_cli("extract", "--config", str(config_path))
        assert result.exit_code == 1
        assert json.loads(result.output.strip().splitlines()[-1])["error"] == "MissingInput"


class TestSynthCommand:
    def test_synth_writes_canonical_dataset(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(dict(SYNTH_SPEC, duration_s=30.0, states=[
            {"label": "baseline", "mean_bpm": 65.0, "bpm_jitter_ms": 10.0, "duration_s": 30.0}
        ])))
        result = run_cli("synth", "--spec", str(spec_path), "--out", str(tmp_path / "data"))
        assert result.exit_code == 0
        assert (tmp_path / "data" / "manifest.json").exists()
        assert (tmp_path / "data" / "ground_truth.json").exists()
        config_path = tmp_path / "c.json"
        config_path.write_text(json.dumps({
            "manifest_path": str(tmp_path / "data" / "manifest.json"),
            "out_dir": str(tmp_path / "run"),
            "learn": {"n_trees": 5},
        }))
        assert run_cli("extract", "--config", str(config_path)).exit_code == 0
        assert (tmp_path / "run" / "features.csv").exists()

    def test_synth_invalid_spec(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(dict(SYNTH_SPEC, duration_s=-1.0)))
        result = run_cli("synth", "--spec", str(spec_path), "--out", str(tmp_path / "d"))
        assert result.exit_code == 1
        assert json.loads(result.output.strip().splitlines()[-1])["error"] == "InvalidSpec"


class TestConfigRoundTrip:
    def test_dict_round_trip(self, tmp_path):
        config = config_from_dict({
            "synthetic_spec_path": "spec.json",
            "out_dir": "somewhere",
            "seed": 3,
            "window": {"window_len_s": 8.0, "overlap_s": 2.0},
            "learn": {"families": ["extra_trees"]},
        })
        again = config_from_dict(config_to_dict(config))
        assert again == config
        assert run_hash(again) == run_hash(config)

    def test_out_dir_not_in_hash(self):
        a = config_from_dict({"synthetic_spec_path": "s.json", "out_dir": "a"})
        b = config_from_dict({"synthetic_spec_path": "s.json", "out_dir": "b"})
        assert run_hash(a) == run_hash(b)

    def test_mutually_exclusive_inputs(self):
        with pytest.raises(ConfigInvalidError):
            config_from_dict({
                "synthetic_spec_path": "s.json",
                "manifest_path": "m.json",
                "out_dir": "x",
            })

    def test_flag_override_beats_file(self, tmp_path):
        config_path = write_config(tmp_path, out_name="override")
        result = run_cli("extract", "--config", str(config_path),
                         "--out", str(tmp_path / "elsewhere"), "--n-trees", "7")
        assert result.exit_code == 0
        stamped = json.loads((tmp_path / "elsewhere" / "config.json").read_text())
        assert stamped["config"]["learn"]["n_trees"] == 7


def test_cli_help_lists_subcommands():
    result = run_cli("--help")
    for command in ("synth", "adapt-wesad", "adapt-case", "extract", "variance",
                    "train-eval", "importance", "report"):
        assert command in result.output
