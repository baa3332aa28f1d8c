#!/usr/bin/env python3
"""Fidelity-twin experiment: does inter-signal feature variance predict the
ECG/PPG classification gap?

Builds two synthetic recordings with identical affect structure (four states,
mean BPM 65/67/69/90, the first three deliberately overlapping):

  high fidelity: ECG and PPG both 1000 Hz, low additive noise
  low fidelity:  ECG 700 Hz, PPG 64 Hz, much higher additive noise

and prints the normalized inter-signal variance, the per-modality holdout
accuracy, and the per-class one-versus-rest AUCs for each twin.

Usage: python scripts/run_twin_experiment.py [--seed N] [--duration S]
"""

import argparse
import sys
import time

import numpy as np

from hrvaffect.dsp import (
    DEFAULT_ECG_FILTER,
    DEFAULT_PPG_FILTER,
    WindowSpec,
    filter_signal,
    segment_windows,
)
from hrvaffect.hrv import (
    FEATURE_NAMES,
    NoPlausiblePeaksError,
    TooFewBeatsError,
    compute_features,
    detect_beats,
)
from hrvaffect.ingest import StateSpec, SyntheticSpec, generate_synthetic
from hrvaffect.learn import ExtraTreesParams, evaluate
from hrvaffect.variance import inter_signal_variance

STATES = (("baseline", 65.0), ("amusement", 67.0), ("meditation", 69.0), ("stress", 90.0))


def twin_spec(ecg_rate, ppg_rate, noise_std, seed, duration_s, jitter_ms):
    return SyntheticSpec(
        duration_s=duration_s,
        ecg_rate_hz=ecg_rate,
        ppg_rate_hz=ppg_rate,
        states=tuple(
            StateSpec(label, bpm, jitter_ms, duration_s / len(STATES))
            for label, bpm in STATES
        ),
        respiratory_rate_hz=0.25,
        respiratory_rr_modulation_ms=30.0,
        noise_std=noise_std,
        seed=seed,
    )


def run_twin(spec, n_trees, eval_seed):
    subject, _ = generate_synthetic(spec)
    ecg = filter_signal(subject.ecg, DEFAULT_ECG_FILTER)
    ppg = filter_signal(subject.ppg, DEFAULT_PPG_FILTER)
    pairs = segment_windows(ecg, ppg, subject.annotations, WindowSpec())

    features = {"ECG": {}, "PPG": {}}
    labels = {}
    for pair in pairs:
        for segment in pair:
            try:
                fv = compute_features(detect_beats(segment), segment.sample_rate_hz)
            except (NoPlausiblePeaksError, TooFewBeatsError):
                continue
            features[segment.modality.value][segment.window_id] = fv
            labels[segment.window_id] = segment.label

    variance = inter_signal_variance(features["ECG"], features["PPG"])
    reports = {}
    for modality in ("ECG", "PPG"):
        X, y = [], []
        for window_id, fv in sorted(features[modality].items()):
            row = fv.as_array()
            if np.isfinite(row).all():
                X.append(row)
                y.append(labels[window_id])
        reports[modality], _ = evaluate(
            np.array(X), np.array(y), FEATURE_NAMES,
            families=("extra_trees",),
            params=ExtraTreesParams(n_trees=n_trees),
            seed=eval_seed,
        )
    return variance, reports


def describe(name, variance, reports):
    print(f"\n{name}")
    print(f"  mean normalized inter-signal variance: {variance.mean_normalized():.4f}")
    for modality in ("ECG", "PPG"):
        rep = reports[modality]
        aucs = ", ".join(f"{label}={curve.auc:.3f}" for label, curve in sorted(rep.roc.items()))
        print(f"  {modality}: holdout accuracy {rep.holdout_accuracy:.3f}   OVR AUC: {aucs}")
    gap = reports["ECG"].holdout_accuracy - reports["PPG"].holdout_accuracy
    print(f"  ECG-minus-PPG holdout gap: {gap:+.3f}")
    return gap


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=22)
    parser.add_argument("--duration", type=float, default=2400.0)
    parser.add_argument("--jitter-ms", type=float, default=50.0)
    parser.add_argument("--n-trees", type=int, default=100)
    parser.add_argument("--low-noise", type=float, default=0.01)
    parser.add_argument("--high-noise", type=float, default=0.3)
    args = parser.parse_args(argv)

    start = time.perf_counter()
    high_var, high = run_twin(
        twin_spec(1000.0, 1000.0, args.low_noise, args.seed, args.duration, args.jitter_ms),
        args.n_trees, eval_seed=7,
    )
    low_var, low = run_twin(
        twin_spec(700.0, 64.0, args.high_noise, args.seed, args.duration, args.jitter_ms),
        args.n_trees, eval_seed=7,
    )

    high_gap = describe("high-fidelity twin (1000/1000 Hz, low noise)", high_var, high)
    low_gap = describe("low-fidelity twin (700/64 Hz, high noise)", low_var, low)

    print("\nsummary")
    print(f"  variance rises with degraded acquisition: "
          f"{high_var.mean_normalized():.4f} -> {low_var.mean_normalized():.4f}")
    print(f"  accuracy gap widens with it: {high_gap:+.3f} -> {low_gap:+.3f}")
    print(f"  elapsed {time.perf_counter() - start:.0f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
