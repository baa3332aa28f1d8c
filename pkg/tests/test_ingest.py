import json
import math

import numpy as np
import pytest

from hrvaffect.core import LabelScheme
from hrvaffect.dsp import WindowSpec
from hrvaffect.ingest import (
    DatasetManifest,
    InvalidSpecError,
    MissingFileError,
    ParseError,
    RateMismatchError,
    StateSpec,
    SubjectFiles,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    load_manifest,
    load_synthetic_spec,
    true_window_features,
    validate_synthetic_spec,
    write_canonical,
    write_manifest,
)


def simple_spec(**overrides):
    base = dict(
        duration_s=60.0,
        ecg_rate_hz=700.0,
        ppg_rate_hz=64.0,
        states=(StateSpec("baseline", 60.0, 0.0, 60.0),),
        respiratory_rate_hz=0.25,
        respiratory_rr_modulation_ms=0.0,
        noise_std=0.0,
        seed=7,
    )
    base.update(overrides)
    return SyntheticSpec(**base)


class TestSyntheticSpecValidation:
    def test_valid(self):
        assert validate_synthetic_spec(simple_spec()) is not None

    def test_bpm_out_of_range(self):
        with pytest.raises(InvalidSpecError):
            validate_synthetic_spec(
                simple_spec(states=(StateSpec("baseline", 20.0, 0.0, 60.0),))
            )

    def test_durations_must_sum(self):
        with pytest.raises(InvalidSpecError):
            validate_synthetic_spec(
                simple_spec(states=(StateSpec("baseline", 60.0, 0.0, 30.0),))
            )

    def test_mixed_label_schemes_rejected(self):
        with pytest.raises(InvalidSpecError):
            validate_synthetic_spec(
                simple_spec(
                    states=(
                        StateSpec("baseline", 60.0, 0.0, 30.0),
                        StateSpec("LAHV", 60.0, 0.0, 30.0),
                    )
                )
            )


class TestGenerateSynthetic:
    def test_degenerate_beats_exactly_one_second_apart(self):
        subject, truth = generate_synthetic(simple_spec())
        assert np.allclose(np.diff(truth.beat_times_s), 1.0)
        assert np.allclose(truth.rr_ms, 1000.0)
        # ECG spike maxima land on the beat samples
        for bt in truth.beat_times_s[:5]:
            idx = int(round(bt * 700))
            window = subject.ecg.samples[idx - 10 : idx + 11]
            assert np.argmax(window) == 10

    def test_respiratory_modulation_in_rr_series(self):
        spec = simple_spec(
            states=(StateSpec("baseline", 75.0, 0.0, 60.0),),
            respiratory_rate_hz=0.25,
            respiratory_rr_modulation_ms=40.0,
        )
        _, truth = generate_synthetic(spec)
        rr = truth.rr_ms - truth.rr_ms.mean()
        t = truth.beat_times_s[:-1]
        # Correlate against the generating sinusoid: strong match at 0.25 Hz.
        ref = np.sin(2 * np.pi * 0.25 * t)
        corr = float(np.dot(rr, ref) / (np.linalg.norm(rr) * np.linalg.norm(ref)))
        assert corr > 0.95

    def test_same_seed_bit_identical(self):
        spec = simple_spec(
            states=(StateSpec("baseline", 70.0, 20.0, 60.0),), noise_std=0.05
        )
        a_subject, a_truth = generate_synthetic(spec)
        b_subject, b_truth = generate_synthetic(spec)
        assert a_subject.ecg == b_subject.ecg
        assert a_subject.ppg == b_subject.ppg
        assert np.array_equal(a_truth.beat_times_s, b_truth.beat_times_s)

    def test_noise_does_not_move_ground_truth(self):
        quiet = simple_spec(states=(StateSpec("baseline", 70.0, 20.0, 60.0),), noise_std=0.0)
        noisy = simple_spec(states=(StateSpec("baseline", 70.0, 20.0, 60.0),), noise_std=0.05)
        _, t_quiet = generate_synthetic(quiet)
        s_noisy, t_noisy = generate_synthetic(noisy)
        assert np.array_equal(t_quiet.beat_times_s, t_noisy.beat_times_s)
        assert s_noisy.ecg.samples.std() > 0.0

    def test_ppg_delay_constant(self):
        _, truth = generate_synthetic(simple_spec())
        assert np.allclose(truth.ppg_pulse_times_s - truth.beat_times_s, 0.25)

    def test_state_annotation_codes(self):
        spec = simple_spec(
            states=(
                StateSpec("baseline", 60.0, 0.0, 30.0),
                StateSpec("stress", 90.0, 0.0, 30.0),
            )
        )
        subject, truth = generate_synthetic(spec)
        ann = subject.annotations
        assert ann.scheme is LabelScheme.DISCRETE_STATE
        assert ann.values[0] == 1
        assert ann.values[-1] == 2
        assert truth.state_spans == (("baseline", 0.0, 30.0), ("stress", 30.0, 60.0))

    def test_av_scheme_annotations(self):
        spec = simple_spec(
            states=(
                StateSpec("LALV", 60.0, 0.0, 30.0),
                StateSpec("HAHV", 80.0, 0.0, 30.0),
            )
        )
        subject, _ = generate_synthetic(spec)
        ann = subject.annotations
        assert ann.scheme is LabelScheme.AROUSAL_VALENCE
        assert tuple(ann.values[0]) == (2.75, 2.75)
        assert tuple(ann.values[-1]) == (7.25, 7.25)

    def test_true_window_features_constant_rr(self):
        _, truth = generate_synthetic(simple_spec())
        per_window = true_window_features(truth, WindowSpec(10.0, 1.0), 60.0)
        assert per_window
        for features in per_window.values():
            assert features["bpm"] == pytest.approx(60.0, rel=1e-12)
            assert features["sdnn"] == 0.0
            assert math.isnan(features["br"])


class TestCanonicalRoundTrip:
    def test_write_then_load_preserves_samples_exactly(self, tmp_path):
        spec = simple_spec(
            duration_s=20.0,
            states=(StateSpec("baseline", 70.0, 15.0, 20.0),),
            noise_std=0.01,
        )
        subject, _ = generate_synthetic(spec)
        manifest_path = write_canonical([subject], "roundtrip", tmp_path)
        manifest = load_manifest(manifest_path)
        assert manifest.dataset_name == "roundtrip"
        (loaded,) = load_dataset(manifest, tmp_path)
        assert loaded.ecg == subject.ecg
        assert loaded.ppg == subject.ppg
        assert np.array_equal(loaded.annotations.values, subject.annotations.values)

    def test_av_round_trip(self, tmp_path):
        spec = simple_spec(
            duration_s=20.0, states=(StateSpec("LAHV", 70.0, 5.0, 20.0),)
        )
        subject, _ = generate_synthetic(spec)
        manifest = load_manifest(write_canonical([subject], "avtrip", tmp_path))
        (loaded,) = load_dataset(manifest, tmp_path)
        assert np.array_equal(loaded.annotations.values, subject.annotations.values)

    def test_missing_file(self, tmp_path):
        spec = simple_spec(duration_s=20.0, states=(StateSpec("baseline", 70.0, 0.0, 20.0),))
        subject, _ = generate_synthetic(spec)
        manifest_path = write_canonical([subject], "broken", tmp_path)
        (tmp_path / "synthetic_ppg.csv").unlink()
        with pytest.raises(MissingFileError):
            load_dataset(load_manifest(manifest_path), tmp_path)

    def test_parse_error_reports_row(self, tmp_path):
        spec = simple_spec(duration_s=20.0, states=(StateSpec("baseline", 70.0, 0.0, 20.0),))
        subject, _ = generate_synthetic(spec)
        manifest_path = write_canonical([subject], "corrupt", tmp_path)
        path = tmp_path / "synthetic_ecg.csv"
        lines = path.read_text().splitlines()
        lines[5] = "4,not_a_number"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as err:
            load_dataset(load_manifest(manifest_path), tmp_path)
        assert err.value.line == 6

    def test_rate_mismatch(self, tmp_path):
        spec = simple_spec(duration_s=20.0, states=(StateSpec("baseline", 70.0, 0.0, 20.0),))
        subject, _ = generate_synthetic(spec)
        manifest_path = write_canonical([subject], "ratebad", tmp_path)
        doc = json.loads(manifest_path.read_text())
        doc["subjects"][0]["ppg_rate_hz"] = 80.0  # declared vs inferred now differ
        manifest_path.write_text(json.dumps(doc))
        with pytest.raises(RateMismatchError):
            load_dataset(load_manifest(manifest_path), tmp_path)

    def test_two_subject_manifest(self, tmp_path):
        spec = simple_spec(duration_s=20.0, states=(StateSpec("baseline", 70.0, 10.0, 20.0),))
        a, _ = generate_synthetic(spec, subject_id="s01")
        b, _ = generate_synthetic(simple_spec(
            duration_s=20.0, states=(StateSpec("baseline", 72.0, 10.0, 20.0),), seed=9
        ), subject_id="s02")
        manifest_path = write_canonical([a, b], "duo", tmp_path)
        loaded = load_dataset(load_manifest(manifest_path), tmp_path)
        assert [s.subject_id for s in loaded] == ["s01", "s02"]

    def test_manifest_missing(self, tmp_path):
        with pytest.raises(MissingFileError):
            load_manifest(tmp_path / "nope.json")

    def test_manifest_bad_field(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"dataset_name": "x", "label_scheme": "discrete_state"}))
        with pytest.raises(ParseError):
            load_manifest(path)

    def test_manifest_rate_positive(self, tmp_path):
        manifest = DatasetManifest(
            "x",
            LabelScheme.DISCRETE_STATE,
            (SubjectFiles("s", "a.csv", "b.csv", "c.csv", 700.0, 0.0, 700.0),),
        )
        path = tmp_path / "manifest.json"
        write_manifest(manifest, path)
        with pytest.raises(ParseError):
            load_manifest(path)


def test_load_synthetic_spec_round_trip(tmp_path):
    doc = {
        "duration_s": 30.0,
        "ecg_rate_hz": 700.0,
        "ppg_rate_hz": 64.0,
        "states": [
            {"label": "baseline", "mean_bpm": 65.0, "bpm_jitter_ms": 10.0, "duration_s": 30.0}
        ],
        "respiratory_rate_hz": 0.2,
        "respiratory_rr_modulation_ms": 25.0,
        "noise_std": 0.01,
        "seed": 3,
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    spec = load_synthetic_spec(path)
    assert spec.states[0].label == "baseline"
    assert spec.respiratory_rate_hz == 0.2
    bad = dict(doc, states=[])
    path.write_text(json.dumps(bad))
    with pytest.raises(InvalidSpecError):
        load_synthetic_spec(path)
