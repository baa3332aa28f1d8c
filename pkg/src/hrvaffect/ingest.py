"""Dataset loading, canonical on-disk format, and synthetic ground-truth data.

The canonical format keeps rates out of the data path: per-signal CSV files
(``index,value``), annotation CSVs (``index,label`` or
``index,arousal,valence``) and a JSON manifest carrying names and rates.

The synthetic generator stands in for access-restricted recordings: beats are
an inhomogeneous point process with optional Gaussian RR jitter and sinusoidal
respiratory modulation, rendered through an ECG spike template and a smoother
delayed PPG pulse template, with exact beat times kept as ground truth.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    AV_QUADRANTS,
    DISCRETE_LABEL_CODES,
    STREAM_BEATS,
    STREAM_NOISE,
    AnnotationTrack,
    LabelScheme,
    Modality,
    SignalRecord,
    derive_rng,
    validate_record,
    validate_track,
)
from .dsp import WindowSpec

PPG_TRANSIT_DELAY_S = 0.25
# Representative normalized arousal/valence values for each bin.
AV_LOW_VALUE = 2.75
AV_HIGH_VALUE = 7.25
# Beats are kept clear of the recording edges so templates render completely.
_EDGE_PAD_S = 0.5
# Floor keeps adversarial jitter from producing non-positive intervals.
_MIN_RR_MS = 250.0

BPM_RANGE = (30.0, 220.0)
RESPIRATORY_RANGE_HZ = (0.1, 0.4)


class MissingFileError(OSError):
    pass


class ParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = int(line)
        super().__init__(f"{path}:{line}: {message}")


class RateMismatchError(ValueError):
    pass


class InvalidSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SubjectFiles:
    subject_id: str
    ecg_file: str
    ppg_file: str
    annotation_file: str
    ecg_rate_hz: float
    ppg_rate_hz: float
    annotation_rate_hz: float


@dataclass(frozen=True)
class DatasetManifest:
    dataset_name: str
    label_scheme: LabelScheme
    subjects: tuple[SubjectFiles, ...]


@dataclass(frozen=True)
class SubjectData:
    """One subject's aligned streams, validated."""

    subject_id: str
    ecg: SignalRecord
    ppg: SignalRecord
    annotations: AnnotationTrack


@dataclass(frozen=True)
class StateSpec:
    label: str
    mean_bpm: float
    bpm_jitter_ms: float
    duration_s: float


@dataclass(frozen=True)
class SyntheticSpec:
    duration_s: float
    ecg_rate_hz: float
    ppg_rate_hz: float
    states: tuple[StateSpec, ...]
    respiratory_rate_hz: float = 0.25
    respiratory_rr_modulation_ms: float = 0.0
    noise_std: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class SyntheticGroundTruth:
    """Exact beat times and the generating parameters needed for oracles."""

    beat_times_s: np.ndarray
    ppg_pulse_times_s: np.ndarray
    rr_ms: np.ndarray
    state_spans: tuple[tuple[str, float, float], ...]  # (label, start_s, end_s)
    respiratory_rate_hz: float
    respiratory_rr_modulation_ms: float


def validate_synthetic_spec(spec: SyntheticSpec) -> SyntheticSpec:
    if spec.duration_s <= 0:
        raise InvalidSpecError("duration_s must be positive")
    if spec.ecg_rate_hz <= 0 or spec.ppg_rate_hz <= 0:
        raise InvalidSpecError("sample rates must be positive")
    if not spec.states:
        raise InvalidSpecError("at least one state is required")
    for state in spec.states:
        if not BPM_RANGE[0] <= state.mean_bpm <= BPM_RANGE[1]:
            raise InvalidSpecError(f"mean_bpm {state.mean_bpm} outside {BPM_RANGE}")
        if state.bpm_jitter_ms < 0:
            raise InvalidSpecError("bpm_jitter_ms must be >= 0")
        if state.duration_s <= 0:
            raise InvalidSpecError("state duration_s must be positive")
    total = sum(state.duration_s for state in spec.states)
    if abs(total - spec.duration_s) > 1e-6:
        raise InvalidSpecError(
            f"state durations sum to {total}, expected duration_s {spec.duration_s}"
        )
    lo, hi = RESPIRATORY_RANGE_HZ
    if not lo <= spec.respiratory_rate_hz <= hi:
        raise InvalidSpecError(f"respiratory_rate_hz outside [{lo}, {hi}]")
    if spec.respiratory_rr_modulation_ms < 0:
        raise InvalidSpecError("respiratory_rr_modulation_ms must be >= 0")
    if spec.noise_std < 0:
        raise InvalidSpecError("noise_std must be >= 0")
    labels = [state.label for state in spec.states]
    if not (
        all(l in DISCRETE_LABEL_CODES for l in labels)
        or all(l in AV_QUADRANTS for l in labels)
    ):
        raise InvalidSpecError(
            f"state labels must all be discrete states {sorted(DISCRETE_LABEL_CODES)} "
            f"or all quadrants {list(AV_QUADRANTS)}"
        )
    return spec


def synthetic_label_scheme(spec: SyntheticSpec) -> LabelScheme:
    if all(state.label in DISCRETE_LABEL_CODES for state in spec.states):
        return LabelScheme.DISCRETE_STATE
    return LabelScheme.AROUSAL_VALENCE


def _state_spans(spec: SyntheticSpec) -> tuple[tuple[str, float, float], ...]:
    spans = []
    t = 0.0
    for state in spec.states:
        spans.append((state.label, t, t + state.duration_s))
        t += state.duration_s
    return tuple(spans)


def _state_at(spans, spec: SyntheticSpec, t: float) -> StateSpec:
    for state, (_, t0, t1) in zip(spec.states, spans):
        if t0 <= t < t1:
            return state
    return spec.states[-1]


def _add_gaussian(samples: np.ndarray, rate: float, center_s: float, amp: float, sigma_s: float):
    half = 4.0 * sigma_s
    i0 = max(0, int(math.ceil((center_s - half) * rate)))
    i1 = min(samples.size, int(math.floor((center_s + half) * rate)) + 1)
    if i0 >= i1:
        return
    t = np.arange(i0, i1) / rate
    samples[i0:i1] += amp * np.exp(-0.5 * ((t - center_s) / sigma_s) ** 2)


def _add_ppg_pulse(samples: np.ndarray, rate: float, peak_s: float, rise_s=0.15, decay_s=0.35):
    # Half-cosine rise and decay meet smoothly at the peak and vanish outside
    # [peak - rise, peak + decay], so pulses at short RR do not shift peaks.
    i0 = max(0, int(math.ceil((peak_s - rise_s) * rate)))
    i1 = min(samples.size, int(math.floor((peak_s + decay_s) * rate)) + 1)
    if i0 >= i1:
        return
    t = np.arange(i0, i1) / rate - peak_s
    shape = np.where(
        t < 0,
        0.5 * (1.0 + np.cos(np.pi * np.clip(t / rise_s, -1.0, 0.0))),
        0.5 * (1.0 + np.cos(np.pi * np.clip(t / decay_s, 0.0, 1.0))),
    )
    samples[i0:i1] += shape


def generate_synthetic(
    spec: SyntheticSpec, subject_id: str = "synthetic"
) -> tuple[SubjectData, SyntheticGroundTruth]:
    """Generate one subject's ECG, PPG and annotations, plus exact ground truth.

    RR_n = 60000/mean_bpm + jitter_n + modulation * sin(2*pi*f_resp*t_n), with
    jitter drawn zero-mean Gaussian per beat.  Beat jitter and additive sample
    noise use independent streams of the seed, so turning noise on or off
    never moves the ground-truth beat times.  Deterministic given the seed.
    """
    validate_synthetic_spec(spec)
    rng_beats = derive_rng(spec.seed, STREAM_BEATS)
    rng_noise = derive_rng(spec.seed, STREAM_NOISE)
    spans = _state_spans(spec)

    beat_times = []
    t = _EDGE_PAD_S
    limit = spec.duration_s - _EDGE_PAD_S
    while t <= limit:
        beat_times.append(t)
        state = _state_at(spans, spec, t)
        jitter = rng_beats.normal(0.0, state.bpm_jitter_ms)
        rr_ms = (
            60000.0 / state.mean_bpm
            + jitter
            + spec.respiratory_rr_modulation_ms
            * math.sin(2.0 * math.pi * spec.respiratory_rate_hz * t)
        )
        t += max(_MIN_RR_MS, rr_ms) / 1000.0
    beat_times = np.array(beat_times, dtype=np.float64)
    if beat_times.size < 2:
        raise InvalidSpecError("duration too short to place at least two beats")

    n_ecg = int(round(spec.duration_s * spec.ecg_rate_hz))
    n_ppg = int(round(spec.duration_s * spec.ppg_rate_hz))
    ecg = np.zeros(n_ecg)
    ppg = np.zeros(n_ppg)
    for bt in beat_times:
        # Sharp R-spike flanked by Q/S dips and smaller P/T bumps; the S dip
        # keeps the shifted baseline high enough that adaptive thresholding
        # separates R from T, as it does on real band-passed ECG.
        _add_gaussian(ecg, spec.ecg_rate_hz, bt, 1.0, 0.010)
        _add_gaussian(ecg, spec.ecg_rate_hz, bt - 0.030, -0.15, 0.010)
        _add_gaussian(ecg, spec.ecg_rate_hz, bt + 0.030, -0.25, 0.012)
        _add_gaussian(ecg, spec.ecg_rate_hz, bt - 0.18, 0.12, 0.025)
        _add_gaussian(ecg, spec.ecg_rate_hz, bt + 0.22, 0.25, 0.050)
        _add_ppg_pulse(ppg, spec.ppg_rate_hz, bt + PPG_TRANSIT_DELAY_S)
    ecg += rng_noise.normal(0.0, spec.noise_std, n_ecg)
    ppg += rng_noise.normal(0.0, spec.noise_std, n_ppg)

    scheme = synthetic_label_scheme(spec)
    ann_rate = spec.ecg_rate_hz
    n_ann = int(round(spec.duration_s * ann_rate))
    if scheme is LabelScheme.DISCRETE_STATE:
        values = np.zeros(n_ann, dtype=np.int64)
        for label, t0, t1 in spans:
            values[int(round(t0 * ann_rate)) : int(round(t1 * ann_rate))] = (
                DISCRETE_LABEL_CODES[label]
            )
    else:
        values = np.zeros((n_ann, 2), dtype=np.float64)
        for label, t0, t1 in spans:
            arousal = AV_LOW_VALUE if label[0] == "L" else AV_HIGH_VALUE
            valence = AV_LOW_VALUE if label[2] == "L" else AV_HIGH_VALUE
            values[int(round(t0 * ann_rate)) : int(round(t1 * ann_rate))] = (arousal, valence)

    subject = SubjectData(
        subject_id=subject_id,
        ecg=validate_record(
            SignalRecord(subject_id, Modality.ECG, spec.ecg_rate_hz, ecg, 0.0)
        ),
        ppg=validate_record(
            SignalRecord(subject_id, Modality.PPG, spec.ppg_rate_hz, ppg, 0.0)
        ),
        annotations=validate_track(AnnotationTrack(scheme, ann_rate, values, 0.0)),
    )
    truth = SyntheticGroundTruth(
        beat_times_s=beat_times,
        ppg_pulse_times_s=beat_times + PPG_TRANSIT_DELAY_S,
        rr_ms=np.diff(beat_times) * 1000.0,
        state_spans=spans,
        respiratory_rate_hz=spec.respiratory_rate_hz,
        respiratory_rr_modulation_ms=spec.respiratory_rr_modulation_ms,
    )
    return subject, truth


def true_window_features(
    truth: SyntheticGroundTruth, wspec: WindowSpec, covered_s: float
) -> dict[int, dict[str, float]]:
    """Per-window feature values computed directly from the exact beat times.

    Coded from the plain defining formulas (no array shortcuts) so it can act
    as an oracle for the detection-based pipeline.  Breathing rate is the
    generating respiratory frequency when modulation is present, NaN if not.
    """
    wspec.validate()
    if covered_s < wspec.window_len_s:
        return {}
    n_windows = int(math.floor((covered_s - wspec.window_len_s) / wspec.stride_s + 1e-9)) + 1
    beats = list(truth.beat_times_s)
    true_br = (
        truth.respiratory_rate_hz if truth.respiratory_rr_modulation_ms > 0 else math.nan
    )

    out: dict[int, dict[str, float]] = {}
    for k in range(n_windows):
        t0 = k * wspec.stride_s
        t1 = t0 + wspec.window_len_s
        in_window = [b for b in beats if t0 <= b < t1]
        if len(in_window) < 5:
            continue
        r = [(b2 - b1) * 1000.0 for b1, b2 in zip(in_window, in_window[1:])]
        d = [r2 - r1 for r1, r2 in zip(r, r[1:])]
        ibi = sum(r) / len(r)
        sdnn = math.sqrt(sum((v - ibi) ** 2 for v in r) / len(r))
        dmean = sum(d) / len(d)
        sdsd = math.sqrt(sum((v - dmean) ** 2 for v in d) / len(d))
        rmssd = math.sqrt(sum(v * v for v in d) / len(d))
        med = statistics.median(r)
        sd1 = rmssd / math.sqrt(2.0)
        sd2 = math.sqrt(max(0.0, 2.0 * sdnn**2 - 0.5 * rmssd**2))
        out[k] = {
            "bpm": 60000.0 / ibi,
            "ibi": ibi,
            "sdnn": sdnn,
            "sdsd": sdsd,
            "rmssd": rmssd,
            "pnn20": sum(1 for v in d if abs(v) > 20.0) / len(d),
            "pnn50": sum(1 for v in d if abs(v) > 50.0) / len(d),
            "mad": statistics.median([abs(v - med) for v in r]),
            "br": true_br,
            "sd1": sd1,
            "sd2": sd2,
            "s": math.pi * sd1 * sd2,
            "sd1_sd2": sd1 / sd2 if sd2 > 0 else math.nan,
        }
    return out


# ---------------------------------------------------------------------------
# Canonical on-disk format
# ---------------------------------------------------------------------------

def _write_signal_csv(path: Path, samples: np.ndarray):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(samples):
            fh.write(f"{i},{float(v)!r}\n")


def _write_annotation_csv(path: Path, track: AnnotationTrack):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if track.scheme is LabelScheme.DISCRETE_STATE:
            fh.write("index,label\n")
            for i, v in enumerate(track.values):
                fh.write(f"{i},{int(v)}\n")
        else:
            fh.write("index,arousal,valence\n")
            for i, (a, v) in enumerate(track.values):
                fh.write(f"{i},{float(a)!r},{float(v)!r}\n")


def write_canonical(
    subjects: list[SubjectData], dataset_name: str, out_dir: str | Path
) -> Path:
    """Write subjects in the canonical format; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scheme = subjects[0].annotations.scheme
    entries = []
    for subject in subjects:
        sid = subject.subject_id
        ecg_file = f"{sid}_ecg.csv"
        ppg_file = f"{sid}_ppg.csv"
        ann_file = f"{sid}_annotations.csv"
        _write_signal_csv(out_dir / ecg_file, subject.ecg.samples)
        _write_signal_csv(out_dir / ppg_file, subject.ppg.samples)
        _write_annotation_csv(out_dir / ann_file, subject.annotations)
        entries.append(
            SubjectFiles(
                subject_id=sid,
                ecg_file=ecg_file,
                ppg_file=ppg_file,
                annotation_file=ann_file,
                ecg_rate_hz=subject.ecg.sample_rate_hz,
                ppg_rate_hz=subject.ppg.sample_rate_hz,
                annotation_rate_hz=subject.annotations.sample_rate_hz,
            )
        )
    manifest = DatasetManifest(dataset_name, scheme, tuple(entries))
    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


def write_manifest(manifest: DatasetManifest, path: str | Path):
    doc = {
        "dataset_name": manifest.dataset_name,
        "label_scheme": manifest.label_scheme.value,
        "subjects": [
            {
                "subject_id": s.subject_id,
                "ecg_file": s.ecg_file,
                "ppg_file": s.ppg_file,
                "annotation_file": s.annotation_file,
                "ecg_rate_hz": s.ecg_rate_hz,
                "ppg_rate_hz": s.ppg_rate_hz,
                "annotation_rate_hz": s.annotation_rate_hz,
            }
            for s in manifest.subjects
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    try:
        subjects = tuple(
            SubjectFiles(
                subject_id=str(s["subject_id"]),
                ecg_file=str(s["ecg_file"]),
                ppg_file=str(s["ppg_file"]),
                annotation_file=str(s["annotation_file"]),
                ecg_rate_hz=float(s["ecg_rate_hz"]),
                ppg_rate_hz=float(s["ppg_rate_hz"]),
                annotation_rate_hz=float(s["annotation_rate_hz"]),
            )
            for s in doc["subjects"]
        )
        manifest = DatasetManifest(
            dataset_name=str(doc["dataset_name"]),
            label_scheme=LabelScheme(doc["label_scheme"]),
            subjects=subjects,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(path, 1, f"manifest field error: {exc}") from exc
    for s in manifest.subjects:
        if min(s.ecg_rate_hz, s.ppg_rate_hz, s.annotation_rate_hz) <= 0:
            raise ParseError(path, 1, f"non-positive rate for subject {s.subject_id}")
    return manifest


def _read_signal_csv(path: Path) -> np.ndarray:
    if not path.exists():
        raise MissingFileError(f"signal file not found: {path}")
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if header.strip() != "index,value":
            raise ParseError(path, 1, f"expected header 'index,value', got {header.strip()!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(path, lineno, f"expected 2 fields, got {len(parts)}")
            try:
                values.append(float(parts[1]))
            except ValueError:
                raise ParseError(path, lineno, f"non-numeric value {parts[1]!r}") from None
    return np.array(values, dtype=np.float64)


def _read_annotation_csv(path: Path, scheme: LabelScheme) -> np.ndarray:
    if not path.exists():
        raise MissingFileError(f"annotation file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        discrete = scheme is LabelScheme.DISCRETE_STATE
        expected = "index,label" if discrete else "index,arousal,valence"
        if header != expected:
            raise ParseError(path, 1, f"expected header {expected!r}, got {header!r}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if discrete:
                    rows.append(int(parts[1]))
                else:
                    rows.append((float(parts[1]), float(parts[2])))
            except (ValueError, IndexError):
                raise ParseError(path, lineno, f"malformed annotation row {line!r}") from None
    return np.array(rows, dtype=np.int64 if discrete else np.float64)


def load_dataset(
    manifest: DatasetManifest, base_dir: str | Path
) -> list[SubjectData]:
    """Load every subject of a canonical dataset, fully validated.

    Raises RateMismatchError when the streams' implied durations (sample count
    over declared rate) disagree by more than 1%.
    """
    base_dir = Path(base_dir)
    subjects = []
    for entry in manifest.subjects:
        ecg_samples = _read_signal_csv(base_dir / entry.ecg_file)
        ppg_samples = _read_signal_csv(base_dir / entry.ppg_file)
        ann_values = _read_annotation_csv(
            base_dir / entry.annotation_file, manifest.label_scheme
        )
        durations = {
            "ecg": ecg_samples.size / entry.ecg_rate_hz,
            "ppg": ppg_samples.size / entry.ppg_rate_hz,
            "annotations": ann_values.shape[0] / entry.annotation_rate_hz,
        }
        longest = max(durations.values())
        shortest = min(durations.values())
        if shortest <= 0 or (longest - shortest) / longest > 0.01:
            raise RateMismatchError(
                f"subject {entry.subject_id}: stream durations disagree > 1%: "
                + ", ".join(f"{k}={v:.2f}s" for k, v in sorted(durations.items()))
            )
        subjects.append(
            SubjectData(
                subject_id=entry.subject_id,
                ecg=validate_record(
                    SignalRecord(entry.subject_id, Modality.ECG, entry.ecg_rate_hz, ecg_samples)
                ),
                ppg=validate_record(
                    SignalRecord(entry.subject_id, Modality.PPG, entry.ppg_rate_hz, ppg_samples)
                ),
                annotations=validate_track(
                    AnnotationTrack(manifest.label_scheme, entry.annotation_rate_hz, ann_values)
                ),
            )
        )
    return subjects


def load_synthetic_spec(path: str | Path) -> SyntheticSpec:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"synthetic spec not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from exc
    try:
        spec = SyntheticSpec(
            duration_s=float(doc["duration_s"]),
            ecg_rate_hz=float(doc["ecg_rate_hz"]),
            ppg_rate_hz=float(doc["ppg_rate_hz"]),
            states=tuple(
                StateSpec(
                    label=str(s["label"]),
                    mean_bpm=float(s["mean_bpm"]),
                    bpm_jitter_ms=float(s["bpm_jitter_ms"]),
                    duration_s=float(s["duration_s"]),
                )
                for s in doc["states"]
            ),
            respiratory_rate_hz=float(doc.get("respiratory_rate_hz", 0.25)),
            respiratory_rr_modulation_ms=float(doc.get("respiratory_rr_modulation_ms", 0.0)),
            noise_std=float(doc.get("noise_std", 0.0)),
            seed=int(doc.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpecError(f"synthetic spec field error: {exc}") from exc
    return validate_synthetic_spec(spec)


def write_ground_truth(truth: SyntheticGroundTruth, path: str | Path):
    doc = {
        "beat_times_s": [float(t) for t in truth.beat_times_s],
        "ppg_pulse_times_s": [float(t) for t in truth.ppg_pulse_times_s],
        "rr_ms": [float(v) for v in truth.rr_ms],
        "state_spans": [[label, t0, t1] for label, t0, t1 in truth.state_spans],
        "respiratory_rate_hz": truth.respiratory_rate_hz,
        "respiratory_rr_modulation_ms": truth.respiratory_rr_modulation_ms,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
