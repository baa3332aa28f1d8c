import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hrvaffect.dsp import DEFAULT_ECG_FILTER, DEFAULT_PPG_FILTER, WindowSpec, filter_signal, segment_windows
from hrvaffect.ingest import StateSpec, SyntheticSpec, generate_synthetic

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def clean_recording():
    """120 s at 60 BPM, no jitter/noise: the simplest deterministic subject."""
    spec = SyntheticSpec(
        duration_s=120.0,
        ecg_rate_hz=700.0,
        ppg_rate_hz=64.0,
        states=(StateSpec("baseline", 60.0, 0.0, 120.0),),
        respiratory_rate_hz=0.25,
        respiratory_rr_modulation_ms=0.0,
        noise_std=0.0,
        seed=1,
    )
    return generate_synthetic(spec)


@pytest.fixture(scope="session")
def clean_windows(clean_recording):
    subject, truth = clean_recording
    ecg = filter_signal(subject.ecg, DEFAULT_ECG_FILTER)
    ppg = filter_signal(subject.ppg, DEFAULT_PPG_FILTER)
    return segment_windows(ecg, ppg, subject.annotations, WindowSpec()), truth


@pytest.fixture(scope="session")
def rr_series_pool():
    """100 seeded random RR series, lengths 5-100, values 300-2000 ms."""
    rng = np.random.default_rng(20240817)
    series = []
    for _ in range(100):
        n = int(rng.integers(5, 101))
        series.append(rng.uniform(300.0, 2000.0, size=n))
    return series
