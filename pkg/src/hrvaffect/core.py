"""Core domain types shared by every stage of the ECG/PPG affect pipeline.

All types live on a per-subject shared clock: sample ``i`` of a stream sits at
``start_time_s + i / sample_rate_hz`` seconds.  Everything is immutable after
construction, so records, tracks and windows can be handed to parallel workers
without synchronization.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Modality(str, enum.Enum):
    ECG = "ECG"
    PPG = "PPG"


class LabelScheme(str, enum.Enum):
    DISCRETE_STATE = "discrete_state"
    AROUSAL_VALENCE = "arousal_valence"


# Discrete protocol codes: 0 is transient, 1-4 carry affect labels, 5-7 are
# auxiliary stages.  Codes 0 and 5-7 never survive label resolution.
DISCRETE_CODE_LABELS = {1: "baseline", 2: "stress", 3: "amusement", 4: "meditation"}
DISCRETE_LABEL_CODES = {label: code for code, label in DISCRETE_CODE_LABELS.items()}
DISCRETE_LABELS = tuple(DISCRETE_CODE_LABELS[c] for c in sorted(DISCRETE_CODE_LABELS))
DISCARDED_CODES = frozenset({0, 5, 6, 7})
KNOWN_CODES = frozenset(range(8))

# Arousal/valence axes after normalization; means <= AV_LOW_MAX bin as "low".
AV_RANGE = (0.5, 9.5)
AV_LOW_MAX = 5.0
AV_QUADRANTS = ("LALV", "LAHV", "HALV", "HAHV")


def av_quadrant(arousal_low: bool, valence_low: bool) -> str:
    """Quadrant label for binned arousal/valence, e.g. (low, high) -> 'LAHV'."""
    return ("L" if arousal_low else "H") + "A" + ("L" if valence_low else "H") + "V"


class ValidationError(ValueError):
    """A record or annotation track violates a structural invariant."""


class EmptySignalError(ValidationError):
    pass


class NonPositiveRateError(ValidationError):
    pass


class NonFiniteSampleError(ValidationError):
    def __init__(self, index: int, message: str | None = None):
        self.index = int(index)
        super().__init__(message or f"non-finite sample at index {index}")


class ValueOutOfRangeError(ValidationError):
    def __init__(self, index: int, value: float, message: str | None = None):
        self.index = int(index)
        self.value = float(value)
        super().__init__(message or f"value {value} at index {index} outside {AV_RANGE}")


def _frozen_float_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SignalRecord:
    """One uniformly sampled waveform of one modality for one subject."""

    subject_id: str
    modality: Modality
    sample_rate_hz: float
    samples: np.ndarray
    start_time_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        object.__setattr__(self, "samples", _frozen_float_array(self.samples))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignalRecord):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.modality == other.modality
            and self.sample_rate_hz == other.sample_rate_hz
            and self.start_time_s == other.start_time_s
            and self.samples.shape == other.samples.shape
            and bool(np.array_equal(self.samples, other.samples))
        )

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def time_at(self, index: int) -> float:
        return self.start_time_s + index / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class AnnotationTrack:
    """Time-indexed affect labels: integer codes or (arousal, valence) pairs."""

    scheme: LabelScheme
    sample_rate_hz: float
    values: np.ndarray  # (n,) int64 codes, or (n, 2) float64 arousal/valence
    start_time_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scheme", LabelScheme(self.scheme))
        if self.scheme is LabelScheme.DISCRETE_STATE:
            arr = np.array(self.values, dtype=np.int64, copy=True)
            if arr.ndim != 1:
                raise ValidationError("discrete annotation values must be 1-D codes")
        else:
            arr = np.array(self.values, dtype=np.float64, copy=True)
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValidationError("arousal/valence values must have shape (n, 2)")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_samples(self) -> int:
        return int(self.values.shape[0])

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class WindowedSegment:
    """A fixed-length slice of one signal with its resolved affect label.

    Aligned ECG/PPG segments share window_id, subject_id and window_start_s;
    each carries samples at its own rate.
    """

    window_id: int
    subject_id: str
    modality: Modality
    sample_rate_hz: float
    samples: np.ndarray
    label: str
    window_start_s: float

    def __post_init__(self):
        object.__setattr__(self, "modality", Modality(self.modality))
        object.__setattr__(self, "samples", _frozen_float_array(self.samples))


def validate_record(record: SignalRecord) -> SignalRecord:
    """Return record unchanged if well formed, else raise naming the defect.

    Checks run in order: positive rate, non-empty, all samples finite.  The
    finite check reports the first offending index.  Idempotent by design.
    """
    if not record.sample_rate_hz > 0:
        raise NonPositiveRateError(
            f"sample_rate_hz must be positive, got {record.sample_rate_hz}"
        )
    if record.samples.size == 0:
        raise EmptySignalError(f"record {record.subject_id}/{record.modality} has no samples")
    finite = np.isfinite(record.samples)
    if not finite.all():
        raise NonFiniteSampleError(int(np.argmin(finite)))
    return record


def validate_track(track: AnnotationTrack) -> AnnotationTrack:
    """Validate an annotation track against its scheme's invariants."""
    if not track.sample_rate_hz > 0:
        raise NonPositiveRateError(
            f"annotation rate must be positive, got {track.sample_rate_hz}"
        )
    if track.n_samples == 0:
        raise EmptySignalError("annotation track has no samples")
    if track.scheme is LabelScheme.DISCRETE_STATE:
        known = np.isin(track.values, sorted(KNOWN_CODES))
        if not known.all():
            idx = int(np.argmin(known))
            raise ValidationError(f"unknown annotation code {track.values[idx]} at index {idx}")
    else:
        finite = np.isfinite(track.values)
        if not finite.all():
            raise NonFiniteSampleError(int(np.argwhere(~finite)[0][0]))
        lo, hi = AV_RANGE
        in_range = (track.values >= lo) & (track.values <= hi)
        if not in_range.all():
            row = int(np.argwhere(~in_range)[0][0])
            col = int(np.argwhere(~in_range)[0][1])
            raise ValueOutOfRangeError(row, float(track.values[row, col]))
    return track


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic child generator for (seed, stream key).

    Every stochastic operation draws from its own stream so that changing one
    knob (e.g. noise level) never perturbs the draws of another (e.g. beat
    jitter).  Seeds are treated as 64-bit unsigned.
    """
    entropy = int(seed) & 0xFFFFFFFFFFFFFFFF
    seq = np.random.SeedSequence(entropy=entropy, spawn_key=tuple(int(s) for s in stream))
    return np.random.default_rng(seq)


# Stream keys for derive_rng, one per stochastic subsystem.
STREAM_BEATS = 0
STREAM_NOISE = 1
STREAM_SPLIT = 2
STREAM_FOLDS = 3
STREAM_TREES = 4
STREAM_EXPLAIN = 5
STREAM_BACKGROUND = 6
