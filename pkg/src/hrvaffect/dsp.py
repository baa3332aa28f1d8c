"""Band-pass filtering, sliding-window segmentation and label resolution.

The processing order is filter first, then window.  Defaults follow the
conventional HRV-preserving bands: ECG 0.67-40 Hz, PPG 0.5-8 Hz, third order,
zero-phase so beat timing survives filtering.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

from .core import (
    AV_LOW_MAX,
    AV_RANGE,
    DISCARDED_CODES,
    DISCRETE_CODE_LABELS,
    AnnotationTrack,
    LabelScheme,
    SignalRecord,
    ValueOutOfRangeError,
    WindowedSegment,
    av_quadrant,
)


class CutoffAboveNyquistError(ValueError):
    pass


class NoCompleteWindowError(ValueError):
    pass


@dataclass(frozen=True)
class FilterSpec:
    """Butterworth band-pass parameters; zero_phase doubles the effective order."""

    order: int = 3
    low_cut_hz: float = 0.67
    high_cut_hz: float = 40.0
    zero_phase: bool = True


DEFAULT_ECG_FILTER = FilterSpec(order=3, low_cut_hz=0.67, high_cut_hz=40.0)
DEFAULT_PPG_FILTER = FilterSpec(order=3, low_cut_hz=0.5, high_cut_hz=8.0)


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry: consecutive windows share overlap_s seconds."""

    window_len_s: float = 10.0
    overlap_s: float = 1.0

    @property
    def stride_s(self) -> float:
        return self.window_len_s - self.overlap_s

    def validate(self) -> "WindowSpec":
        if self.window_len_s <= 0:
            raise ValueError("window_len_s must be positive")
        if not 0 <= self.overlap_s < self.window_len_s:
            raise ValueError("overlap_s must lie in [0, window_len_s)")
        return self


def design_butterworth_bandpass(spec: FilterSpec, sample_rate_hz: float) -> np.ndarray:
    """Second-order-section cascade for the requested band at this rate.

    Designed via the bilinear transform with frequency pre-warping; raises if
    the band does not fit under Nyquist.
    """
    nyquist = sample_rate_hz / 2.0
    if spec.order < 1:
        raise ValueError("filter order must be >= 1")
    if not 0 < spec.low_cut_hz < spec.high_cut_hz:
        raise ValueError(
            f"need 0 < low_cut < high_cut, got [{spec.low_cut_hz}, {spec.high_cut_hz}]"
        )
    if spec.high_cut_hz >= nyquist:
        raise CutoffAboveNyquistError(
            f"high cutoff {spec.high_cut_hz} Hz >= Nyquist {nyquist} Hz"
        )
    return sps.butter(
        spec.order,
        [spec.low_cut_hz, spec.high_cut_hz],
        btype="bandpass",
        fs=sample_rate_hz,
        output="sos",
    )


def filter_signal(record: SignalRecord, spec: FilterSpec) -> SignalRecord:
    """Apply the band-pass to a record, preserving length and metadata.

    Zero-phase mode runs the cascade forward and backward (squared magnitude
    response, no phase shift) over an even-reflection padding of 3 x order
    samples per end, with step-matched initial conditions.
    """
    sos = design_butterworth_bandpass(spec, record.sample_rate_hz)
    x = record.samples
    if spec.zero_phase:
        padlen = min(3 * spec.order, x.size - 1)
        y = sps.sosfiltfilt(sos, x, padtype="even", padlen=padlen)
    else:
        zi = sps.sosfilt_zi(sos) * x[0]
        y, _ = sps.sosfilt(sos, x, zi=zi)
    return replace(record, samples=y)


def resolve_label_discrete(codes: np.ndarray) -> str | None:
    """Resolve a window of discrete codes to one label, or None to drop.

    Codes 0 and 5-7 are discarded; if less than half the window survives the
    window is dropped.  Otherwise the mean of the retained codes rounds to the
    nearest code in 1-4, ties resolving to the larger code.
    """
    codes = np.asarray(codes)
    if codes.size == 0:
        return None
    retained = codes[~np.isin(codes, sorted(DISCARDED_CODES))]
    if retained.size / codes.size < 0.5:
        return None
    mean = float(retained.mean())
    best_code, best_dist = None, None
    for code in sorted(DISCRETE_CODE_LABELS):
        dist = abs(mean - code)
        if best_dist is None or dist <= best_dist:
            best_code, best_dist = code, dist
    return DISCRETE_CODE_LABELS[best_code]


def resolve_label_av(values: np.ndarray) -> str:
    """Resolve a window of normalized (arousal, valence) pairs to a quadrant.

    Per-axis means bin low when <= 5.0, high otherwise.  Raises if any sample
    falls outside the normalized range.
    """
    values = np.asarray(values, dtype=np.float64)
    lo, hi = AV_RANGE
    in_range = (values >= lo) & (values <= hi)
    if not in_range.all():
        row = int(np.argwhere(~in_range)[0][0])
        col = int(np.argwhere(~in_range)[0][1])
        raise ValueOutOfRangeError(row, float(values[row, col]))
    arousal_mean = float(values[:, 0].mean())
    valence_mean = float(values[:, 1].mean())
    return av_quadrant(arousal_mean <= AV_LOW_MAX, valence_mean <= AV_LOW_MAX)


def _slice_bounds(offset_s: float, length_s: float, rate_hz: float, n_total: int):
    start = int(round(offset_s * rate_hz))
    count = int(np.floor(length_s * rate_hz + 1e-9))
    if start < 0 or start + count > n_total:
        return None
    return start, start + count


def segment_windows(
    ecg: SignalRecord,
    ppg: SignalRecord,
    annotations: AnnotationTrack,
    wspec: WindowSpec = WindowSpec(),
) -> list[tuple[WindowedSegment, WindowedSegment]]:
    """Cut aligned ECG/PPG windows and attach one resolved label per window.

    Windows start every stride_s seconds on the shared clock; each signal is
    sliced at its own rate.  Windows whose label resolution drops them are
    skipped; window_id keeps the grid index so aligned segments always agree.
    """
    wspec.validate()
    if not (ecg.start_time_s == ppg.start_time_s == annotations.start_time_s):
        raise ValueError("ECG, PPG and annotations must share a start time")
    covered_s = min(ecg.duration_s, ppg.duration_s, annotations.duration_s)
    if covered_s < wspec.window_len_s:
        raise NoCompleteWindowError(
            f"recording covers {covered_s:.3f} s < window {wspec.window_len_s} s"
        )
    n_windows = int(np.floor((covered_s - wspec.window_len_s) / wspec.stride_s + 1e-9)) + 1

    pairs: list[tuple[WindowedSegment, WindowedSegment]] = []
    for k in range(n_windows):
        offset_s = k * wspec.stride_s
        bounds = [
            _slice_bounds(offset_s, wspec.window_len_s, stream.sample_rate_hz, stream.n_samples)
            for stream in (ecg, ppg, annotations)
        ]
        if any(b is None for b in bounds):
            continue
        (e0, e1), (p0, p1), (a0, a1) = bounds

        if annotations.scheme is LabelScheme.DISCRETE_STATE:
            label = resolve_label_discrete(annotations.values[a0:a1])
        else:
            label = resolve_label_av(annotations.values[a0:a1])
        if label is None:
            continue

        start_s = ecg.start_time_s + offset_s
        pairs.append(
            (
                WindowedSegment(
                    window_id=k,
                    subject_id=ecg.subject_id,
                    modality=ecg.modality,
                    sample_rate_hz=ecg.sample_rate_hz,
                    samples=ecg.samples[e0:e1],
                    label=label,
                    window_start_s=start_s,
                ),
                WindowedSegment(
                    window_id=k,
                    subject_id=ppg.subject_id,
                    modality=ppg.modality,
                    sample_rate_hz=ppg.sample_rate_hz,
                    samples=ppg.samples[p0:p1],
                    label=label,
                    window_start_s=start_s,
                ),
            )
        )
    return pairs
