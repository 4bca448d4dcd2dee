"""Record -> windows -> R peaks -> HRV feature rows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .hrv import FEATURE_NAMES, UndetectableWindow, compute_features, rr_intervals
from .preprocess import FilterConfig, SegmentationConfig, preprocess, segment
from .rpeak import DetectorConfig, correct_rpeaks, detect_rpeaks
from .signal_io import FeatureTable


@dataclass(frozen=True)
class PipelineConfig:
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    filtering: FilterConfig = field(default_factory=FilterConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)


def window_peaks(samples, fs, detector: DetectorConfig = DetectorConfig()):
    """Detected and corrected R peaks of one preprocessed window."""
    raw = detect_rpeaks(samples, fs, detector)
    return correct_rpeaks(samples, raw, fs, detector.correction_tolerance)


def window_features(samples, fs, detector: DetectorConfig = DetectorConfig()):
    """``(features or None, peaks)``; ``None`` marks an undetectable window."""
    peaks = window_peaks(samples, fs, detector)
    try:
        return compute_features(rr_intervals(peaks, fs)), peaks
    except UndetectableWindow:
        return None, peaks


def extract_record(record, annotations, config: PipelineConfig = PipelineConfig(),
                   peak_sink=None):
    """Feature rows for one record.

    The full record is preprocessed once; windows are labelled from the raw
    annotation indices. ``peak_sink(record_id, start, peaks)`` is called for
    every window when given.
    """
    try:
        filtered = preprocess(record, config.filtering)
        segments = segment(record, annotations, config.segmentation, source=filtered)
    except DataError as exc:
        raise DataError(f"{record.record_id}: {exc}") from None
    n = len(segments)
    feats = np.full((n, len(FEATURE_NAMES)), np.nan)
    valid = np.zeros(n, dtype=bool)
    for i, seg in enumerate(segments):
        try:
            vec, peaks = window_features(seg.samples, record.fs, config.detector)
        except DataError as exc:
            raise DataError(f"{record.record_id} @ window {seg.start_index}: {exc}") from None
        if vec is not None:
            feats[i] = vec
            valid[i] = True
        if peak_sink is not None:
            peak_sink(record.record_id, seg.start_index, seg.start_index + peaks)
    return FeatureTable(
        [record.record_id] * n,
        [s.start_index for s in segments],
        feats,
        [s.label for s in segments],
        valid,
    )


def extract_dataset(pairs, config: PipelineConfig = PipelineConfig(), dataset_id="",
                    peak_sink=None):
    """Feature table over ``[(record, annotations), ...]`` in input order."""
    tables = [extract_record(r, a, config, peak_sink) for r, a in pairs]
    return FeatureTable.concat(tables, dataset_id=dataset_id)


def count_summary(tables):
    """Lines in the style of a clean/noisy segment-count table."""
    lines = [f"{'Dataset':<12}{'Clean (#)':>12}{'Noisy (#)':>12}{'Total (#)':>12}"]
    for t in tables:
        clean, noisy = t.counts()
        lines.append(f"{t.dataset_id:<12}{clean:>12}{noisy:>12}{len(t):>12}")
    return "\n".join(lines) + "\n"
