"""Hamilton-style QRS detection and R-peak position correction.

Peak lists are plain ``int64`` arrays of strictly increasing sample indices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, DataError
from .preprocess import centered_moving_average, zero_phase


@dataclass(frozen=True)
class DetectorConfig:
    band_low_hz: float = 8.0
    band_high_hz: float = 16.0
    smoothing_window: float = 0.08
    threshold_coefficient: float = 0.3125
    refractory: float = 0.2
    twave_window: float = 0.36
    searchback_factor: float = 1.5
    buffer_len: int = 8
    correction_tolerance: float = 0.05
    init_seconds: float = 2.0

    def __post_init__(self):
        for name in ("smoothing_window", "refractory", "twave_window",
                     "correction_tolerance", "init_seconds"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 < self.threshold_coefficient < 1:
            raise ConfigError("threshold_coefficient must lie in (0, 1)")
        if not 0 < self.band_low_hz < self.band_high_hz:
            raise ConfigError("detection band must satisfy 0 < low < high")
        if self.buffer_len < 1:
            raise ConfigError("buffer_len must be >= 1")


def detection_signal(x, fs, config: DetectorConfig = DetectorConfig()):
    """Band-limited, differentiated, rectified and smoothed signal.

    Also returns the rectified derivative, used as the slope measure.
    """
    nyq = fs / 2.0
    sos = sps.butter(2, [config.band_low_hz / nyq, config.band_high_hz / nyq],
                     btype="bandpass", output="sos")
    band = zero_phase(sos, np.asarray(x, dtype=float))
    slope = np.abs(np.diff(band, prepend=band[0]))
    width = max(1, int(round(config.smoothing_window * fs)))
    return centered_moving_average(slope, width), slope


def dominant_peaks(idx, values, radius):
    """Drop peaks that have a larger peak within ``radius`` samples.

    Equal neighbours keep the earlier one.
    """
    keep = np.ones(idx.size, dtype=bool)
    lo = np.searchsorted(idx, idx - radius, side="left")
    hi = np.searchsorted(idx, idx + radius, side="right")
    for k in range(idx.size):
        v = values[k]
        for j in range(lo[k], hi[k]):
            if j == k:
                continue
            if values[j] > v or (values[j] == v and j < k):
                keep[k] = False
                break
    return idx[keep]


class _Ring:
    def __init__(self, size, fill):
        self.buf = deque([float(fill)] * size, maxlen=size)

    def push(self, value):
        self.buf.append(float(value))

    def mean(self):
        return sum(self.buf) / len(self.buf)


def detect_rpeaks(samples, fs, config: DetectorConfig = DetectorConfig()):
    """Detect QRS complexes; returns indices of detection-signal peaks.

    Rules, applied to local maxima of the detection signal in time order:
    maxima with a larger maximum within the refractory period are ignored;
    a peak is QRS when above ``noise + c * (qrs - noise)`` (buffer means);
    a peak within the T-wave window of the last QRS whose slope is below half
    of that QRS's slope is a T wave; when the gap since the last QRS exceeds
    ``searchback_factor`` times the mean RR, the largest skipped peak above
    half the threshold is promoted to QRS.
    """
    x = np.asarray(samples, dtype=float)
    if fs < 100:
        raise DataError(f"sampling rate {fs} Hz too low for QRS detection (need >= 100)")
    if x.size < 2 * fs:
        raise DataError("signal too short for QRS detection (need >= 2 s)")
    if not np.ptp(x) > 0:
        return np.zeros(0, dtype=np.int64)

    det, slope = detection_signal(x, fs, config)
    refractory = int(round(config.refractory * fs))
    twave = int(round(config.twave_window * fs))
    half_slope_win = max(1, int(round(0.5 * config.smoothing_window * fs)))

    cands = sps.find_peaks(det)[0].astype(np.int64)
    cands = dominant_peaks(cands, det[cands], refractory)
    if cands.size == 0:
        return np.zeros(0, dtype=np.int64)

    init = det[: int(round(config.init_seconds * fs))]
    qrs_buf = _Ring(config.buffer_len, init.max())
    noise_buf = _Ring(config.buffer_len, np.percentile(init, 10))
    rr_buf = _Ring(config.buffer_len, fs)

    def threshold():
        nm = noise_buf.mean()
        return nm + config.threshold_coefficient * (qrs_buf.mean() - nm)

    def max_slope(i):
        return slope[max(0, i - half_slope_win): i + half_slope_win + 1].max()

    beats = []
    pending = []  # sub-threshold peaks since the last QRS

    def accept(i):
        if beats:
            rr_buf.push(i - beats[-1])
        beats.append(i)
        qrs_buf.push(det[i])
        pending[:] = [p for p in pending if p > i]

    def search_back(now):
        while True:
            ref = beats[-1] if beats else 0
            if now - ref <= config.searchback_factor * rr_buf.mean():
                return
            lo = ref + twave if beats else 0
            pool = [p for p in pending if lo <= p < now and det[p] > 0.5 * threshold()]
            if not pool:
                return
            best = max(pool, key=lambda p: (det[p], -p))
            accept(best)

    for c in cands:
        c = int(c)
        search_back(c)
        if beats and c - beats[-1] < refractory:
            continue
        if det[c] > threshold():
            if beats and c - beats[-1] < twave and max_slope(c) < 0.5 * max_slope(beats[-1]):
                noise_buf.push(det[c])
                continue
            accept(c)
        else:
            noise_buf.push(det[c])
            pending.append(c)
    search_back(x.size)
    return np.array(beats, dtype=np.int64)


def correct_rpeaks(samples, peaks, fs, correction_tolerance=0.05):
    """Move each peak to the signal maximum within +-tolerance seconds.

    Ties go to the earliest index; peaks landing on the same sample merge.
    """
    x = np.asarray(samples, dtype=float)
    peaks = np.asarray(peaks, dtype=np.int64)
    if peaks.size == 0:
        return peaks.copy()
    if peaks.min() < 0 or peaks.max() >= x.size:
        raise DataError("peak index out of signal bounds")
    w = int(round(correction_tolerance * fs))
    out = np.empty_like(peaks)
    for k, p in enumerate(peaks):
        lo = max(0, p - w)
        out[k] = lo + int(np.argmax(x[lo: p + w + 1]))
    return np.unique(out)


def match_peaks(detected, truth, tolerance):
    """Greedy one-to-one matching within ``tolerance`` samples.

    Returns ``(true_positives, false_positives, false_negatives)``.
    """
    detected = np.sort(np.asarray(detected))
    truth = np.sort(np.asarray(truth))
    used = np.zeros(detected.size, dtype=bool)
    tp = 0
    for t in truth:
        lo = np.searchsorted(detected, t - tolerance, side="left")
        hi = np.searchsorted(detected, t + tolerance, side="right")
        best, best_d = -1, None
        for j in range(lo, hi):
            if not used[j] and (best_d is None or abs(detected[j] - t) < best_d):
                best, best_d = j, abs(detected[j] - t)
        if best >= 0:
            used[best] = True
            tp += 1
    return tp, int(detected.size - tp), int(truth.size - tp)
