"""Normalization, zero-phase filtering, windowing and window labels."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, DataError
from .signal_io import AnnotationSet, EcgRecord


@dataclass(frozen=True)
class SegmentationConfig:
    window_seconds: float = 20.0
    overlap_fraction: float = 0.5
    noisy_threshold: float = 0.5

    def __post_init__(self):
        if not self.window_seconds > 0:
            raise ConfigError("window_seconds must be positive")
        if not 0 <= self.overlap_fraction < 1:
            raise ConfigError("overlap_fraction must lie in [0, 1)")
        if not 0 < self.noisy_threshold <= 1:
            raise ConfigError("noisy_threshold must lie in (0, 1]")

    def window_len(self, fs):
        return int(round(self.window_seconds * fs))

    def stride(self, fs):
        return max(1, int(round(self.window_len(fs) * (1.0 - self.overlap_fraction))))


@dataclass(frozen=True)
class FilterConfig:
    low_hz: float = 3.0
    high_hz: float = 45.0
    # order 4 leaves 50 Hz at about -12 dB after forward-backward filtering;
    # 10 is the lowest order reaching -20 dB there for every fs >= 360 Hz
    order: int = 10
    ma_window_seconds: float = 0.05

    def __post_init__(self):
        if not 0 < self.low_hz < self.high_hz:
            raise ConfigError("filter band must satisfy 0 < low_hz < high_hz")
        if self.order < 1:
            raise ConfigError("filter order must be >= 1")
        if not self.ma_window_seconds > 0:
            raise ConfigError("ma_window_seconds must be positive")


@dataclass
class Segment:
    record_id: str
    start_index: int
    samples: np.ndarray
    label: int
    fs: float


def _samples(x):
    return x.samples if isinstance(x, EcgRecord) else np.asarray(x, dtype=float)


def _wrap(template, samples):
    return template.replace(samples) if isinstance(template, EcgRecord) else samples


def normalize(record):
    """Z-score with the population standard deviation."""
    x = _samples(record)
    if x.size < 2:
        raise DataError("degenerate signal: need at least 2 samples")
    sd = x.std()
    if not sd > 0:
        raise DataError("degenerate signal: zero variance")
    return _wrap(record, (x - x.mean()) / sd)


def butter_bandpass(low_hz, high_hz, fs, order=10):
    """Second-order sections of a Butterworth bandpass."""
    nyq = fs / 2.0
    if not high_hz < nyq:
        raise DataError(f"sampling rate {fs} Hz too low for a {high_hz} Hz passband edge")
    return sps.butter(order, [low_hz / nyq, high_hz / nyq], btype="bandpass", output="sos")


def zero_phase(sos, x):
    """Forward-backward filtering with reflect padding of 3x the system order."""
    system_order = 2 * sos.shape[0]
    padlen = min(3 * system_order, x.size - 1)
    return sps.sosfiltfilt(sos, x, padtype="even", padlen=padlen)


def bandpass_filter(record, config: FilterConfig = FilterConfig(), fs=None):
    """Zero-phase Butterworth bandpass; length preserved."""
    fs = record.fs if isinstance(record, EcgRecord) else fs
    if fs is None:
        raise ConfigError("fs is required for bare sample arrays")
    sos = butter_bandpass(config.low_hz, config.high_hz, fs, config.order)
    return _wrap(record, zero_phase(sos, _samples(record)))


def analytic_gain(freq_hz, low_hz, high_hz, fs, order=10):
    """Forward-backward magnitude response ``|H(f)|**2`` of :func:`butter_bandpass`."""
    sos = butter_bandpass(low_hz, high_hz, fs, order)
    _, h = sps.sosfreqz(sos, worN=np.atleast_1d(freq_hz), fs=fs)
    return np.abs(h) ** 2


def centered_moving_average(x, width):
    """Centered running mean; near the edges the window is truncated."""
    x = np.asarray(x, dtype=float)
    width = int(width)
    if width < 1:
        raise ConfigError("moving-average window must be at least one sample")
    half_left = (width - 1) // 2
    half_right = width - 1 - half_left
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(x.size)
    lo = np.maximum(idx - half_left, 0)
    hi = np.minimum(idx + half_right + 1, x.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


def moving_average(record, ma_window_seconds=0.05, fs=None):
    fs = record.fs if isinstance(record, EcgRecord) else fs
    width = int(round(ma_window_seconds * fs)) if fs is not None else int(ma_window_seconds)
    return _wrap(record, centered_moving_average(_samples(record), width))


def preprocess(record: EcgRecord, config: FilterConfig = FilterConfig()) -> EcgRecord:
    """normalize -> bandpass -> moving average on the full record."""
    out = normalize(record)
    out = bandpass_filter(out, config)
    return moving_average(out, config.ma_window_seconds)


def window_starts(n_samples, window_len, stride):
    if n_samples < window_len:
        return np.zeros(0, dtype=np.int64)
    return np.arange(0, n_samples - window_len + 1, stride, dtype=np.int64)


def label_window(annotations: AnnotationSet, start_index, window_len, noisy_threshold=0.5):
    """1 if the noisy fraction of ``[start, start + window_len)`` reaches the threshold."""
    stop = start_index + window_len
    noisy = 0
    for s in annotations.spans:
        if s.label == 1:
            noisy += max(0, min(s.end_index, stop) - max(s.start_index, start_index))
    return int(noisy >= noisy_threshold * window_len)


def segment(record: EcgRecord, annotations: AnnotationSet,
            config: SegmentationConfig = SegmentationConfig(), source=None):
    """Cut fixed-length windows and label them from ``annotations``.

    ``source`` (default ``record``) supplies the window samples, so labels can
    be taken from the raw record while samples come from its filtered copy.
    A record shorter than one window yields ``[]`` and a ``RuntimeWarning``.
    """
    source = record if source is None else source
    wlen = config.window_len(record.fs)
    starts = window_starts(len(record), wlen, config.stride(record.fs))
    if starts.size == 0:
        warnings.warn(f"{record.record_id}: shorter than one window", RuntimeWarning, stacklevel=2)
        return []
    out = []
    for s in starts:
        s = int(s)
        out.append(
            Segment(
                record.record_id,
                s,
                source.samples[s:s + wlen],
                label_window(annotations, s, wlen, config.noisy_threshold),
                record.fs,
            )
        )
    return out
