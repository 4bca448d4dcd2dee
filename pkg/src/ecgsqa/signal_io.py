"""Reading and writing records, annotations, feature tables, models and reports.

On-disk formats
---------------
``<id>.ecg``   one ASCII decimal sample per line
``<id>.meta``  ``key=value`` lines: fs, units, record_id, channel
``<id>.ann``   one span per line, ``start end label`` (sample indices, end exclusive)
feature table  CSV, ``record_id,window_start,<19 features>,label,valid``
model/report   JSON carrying a ``format_version`` field

Floats are written with ``repr`` so every value survives a round trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError
from .hrv import FEATURE_NAMES

FORMAT_VERSION = 1
MODEL_KINDS = ("logreg", "dtree", "rforest")

CLEAN = 0
NOISY = 1


@dataclass
class EcgRecord:
    samples: np.ndarray
    fs: float
    record_id: str = "record"
    channel: str = "ECG"
    units: str = "mV"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise DataError(f"{self.record_id}: samples must be one-dimensional")
        if not (self.fs > 0):
            raise DataError(f"{self.record_id}: invalid sampling rate {self.fs!r}")
        if self.samples.size == 0:
            raise DataError(f"{self.record_id}: empty record")
        if not np.all(np.isfinite(self.samples)):
            raise DataError(f"{self.record_id}: non-finite sample values")

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.fs

    def replace(self, samples):
        """Copy of this record carrying new samples."""
        return EcgRecord(samples, self.fs, self.record_id, self.channel, self.units)


@dataclass(frozen=True)
class AnnotationSpan:
    start_index: int
    end_index: int
    label: int = NOISY

    def __post_init__(self):
        if self.end_index <= self.start_index:
            raise DataError(f"span end {self.end_index} <= start {self.start_index}")
        if self.start_index < 0:
            raise DataError(f"span start {self.start_index} is negative")
        if self.label not in (CLEAN, NOISY):
            raise DataError(f"span label must be 0 or 1, got {self.label!r}")


@dataclass
class AnnotationSet:
    """Index spans over one record. Indices outside every span are clean."""

    record_id: str
    spans: list = field(default_factory=list)

    def __post_init__(self):
        self.spans = sorted(self.spans, key=lambda s: (s.start_index, s.end_index))
        for a, b in zip(self.spans, self.spans[1:]):
            if b.start_index < a.end_index:
                raise DataError(
                    f"{self.record_id}: overlapping spans "
                    f"[{a.start_index},{a.end_index}) and [{b.start_index},{b.end_index})"
                )

    def validate_length(self, n_samples):
        for s in self.spans:
            if s.end_index > n_samples:
                raise DataError(
                    f"{self.record_id}: span [{s.start_index},{s.end_index}) "
                    f"out of range for record of {n_samples} samples"
                )

    def noisy_mask(self, n_samples):
        """Boolean per-sample noisy mask of length ``n_samples``."""
        mask = np.zeros(n_samples, dtype=bool)
        for s in self.spans:
            if s.label == NOISY:
                mask[s.start_index:min(s.end_index, n_samples)] = True
        return mask

    def noisy_prefix(self, n_samples):
        """Cumulative noisy-sample counts, ``prefix[i]`` = noisy count in ``[0, i)``."""
        prefix = np.zeros(n_samples + 1, dtype=np.int64)
        np.cumsum(self.noisy_mask(n_samples), out=prefix[1:])
        return prefix


# ---------------------------------------------------------------- records

def _read_meta(path):
    meta = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(path, f"expected key=value, got {line!r}", lineno)
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def _record_paths(path):
    path = Path(path)
    if path.suffix in (".ecg", ".meta", ".ann"):
        path = path.with_suffix("")
    return path.with_suffix(".ecg"), path.with_suffix(".meta")


def load_record(path) -> EcgRecord:
    """Load ``<id>.ecg`` plus its ``<id>.meta`` sidecar.

    ``path`` may name either file or the common stem.
    """
    ecg_path, meta_path = _record_paths(path)
    if not meta_path.exists():
        raise FormatError(meta_path, "missing sidecar metadata file")
    if not ecg_path.exists():
        raise FormatError(ecg_path, "missing sample file")
    meta = _read_meta(meta_path)
    if "fs" not in meta:
        raise FormatError(meta_path, "missing required key 'fs'")
    try:
        fs = float(meta["fs"])
    except ValueError:
        raise FormatError(meta_path, f"invalid sampling rate {meta['fs']!r}") from None
    if not (fs > 0) or not math.isfinite(fs):
        raise FormatError(meta_path, f"invalid sampling rate {meta['fs']!r}")

    samples = []
    with open(ecg_path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.strip()
            if not text:
                continue
            try:
                value = float(text)
            except ValueError:
                raise FormatError(ecg_path, f"non-numeric sample {text!r}", lineno) from None
            if not math.isfinite(value):
                raise FormatError(ecg_path, f"non-finite sample {text!r}", lineno)
            samples.append(value)
    if not samples:
        raise FormatError(ecg_path, "empty file")
    return EcgRecord(
        np.array(samples, dtype=float),
        fs,
        record_id=meta.get("record_id", ecg_path.stem),
        channel=meta.get("channel", "ECG"),
        units=meta.get("units", "mV"),
    )


def save_record(record: EcgRecord, path):
    """Write ``record`` as ``<path>.ecg`` + ``<path>.meta``."""
    ecg_path, meta_path = _record_paths(path)
    ecg_path.parent.mkdir(parents=True, exist_ok=True)
    with open(ecg_path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{float(v)!r}\n" for v in record.samples)
    with open(meta_path, "w", encoding="utf-8") as fh:
        fh.write(f"fs={float(record.fs)!r}\n")
        fh.write(f"units={record.units}\n")
        fh.write(f"record_id={record.record_id}\n")
        fh.write(f"channel={record.channel}\n")


# ------------------------------------------------------------ annotations

def load_annotations(path, record_id=None) -> AnnotationSet:
    path = Path(path)
    spans = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(path, f"expected 'start end label', got {line!r}", lineno)
            try:
                start, end, label = (int(p) for p in parts)
            except ValueError:
                raise FormatError(path, f"non-integer field in {line!r}", lineno) from None
            try:
                spans.append((lineno, AnnotationSpan(start, end, label)))
            except DataError as exc:
                raise FormatError(path, str(exc), lineno) from None
    spans.sort(key=lambda t: (t[1].start_index, t[1].end_index))
    for (_, a), (lineno, b) in zip(spans, spans[1:]):
        if b.start_index < a.end_index:
            raise FormatError(
                path,
                f"overlapping spans [{a.start_index},{a.end_index}) and "
                f"[{b.start_index},{b.end_index})",
                lineno,
            )
    return AnnotationSet(record_id or path.stem, [s for _, s in spans])


def save_annotations(annotations: AnnotationSet, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for s in annotations.spans:
            fh.write(f"{s.start_index} {s.end_index} {s.label}\n")


def load_dataset(directory):
    """Load every ``*.ecg`` record in ``directory`` with its annotations.

    Records without an ``.ann`` file are treated as all clean. Returns a list
    of ``(EcgRecord, AnnotationSet)`` sorted by file name.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"{directory}: dataset directory not found")
    out = []
    for ecg_path in sorted(directory.glob("*.ecg")):
        record = load_record(ecg_path)
        ann_path = ecg_path.with_suffix(".ann")
        if ann_path.exists():
            ann = load_annotations(ann_path, record.record_id)
        else:
            ann = AnnotationSet(record.record_id, [])
        try:
            ann.validate_length(len(record))
        except DataError as exc:
            raise FormatError(ann_path, str(exc)) from None
        out.append((record, ann))
    if not out:
        raise DataError(f"{directory}: no .ecg records found")
    return out


def save_peaks(indices, path):
    """One peak index per line (debugging aid)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(i)}\n" for i in indices)


def load_peaks(path):
    path = Path(path)
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.strip()
            if not text:
                continue
            try:
                values.append(int(text))
            except ValueError:
                raise FormatError(path, f"non-integer peak index {text!r}", lineno) from None
    return np.array(values, dtype=np.int64)


# --------------------------------------------------------- feature tables

@dataclass
class FeatureTable:
    """Column-oriented feature table.

    ``features`` is ``(n_rows, 19)`` in :data:`FEATURE_NAMES` order. Rows whose
    window was undetectable have ``valid`` False and NaN features.
    """

    record_ids: list
    window_starts: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    valid: np.ndarray
    dataset_id: str = ""

    def __post_init__(self):
        self.record_ids = [str(r) for r in self.record_ids]
        self.window_starts = np.asarray(self.window_starts, dtype=np.int64).reshape(-1)
        n = len(self.record_ids)
        self.features = np.asarray(self.features, dtype=float).reshape(n, len(FEATURE_NAMES))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        self.valid = np.asarray(self.valid, dtype=bool).reshape(-1)
        if not (self.window_starts.size == self.labels.size == self.valid.size == n):
            raise DataError("feature table columns have unequal lengths")
        if np.any((self.labels != 0) & (self.labels != 1)):
            raise DataError("feature table labels must be 0 or 1")

    def __len__(self):
        return len(self.record_ids)

    @classmethod
    def empty(cls, dataset_id=""):
        return cls([], [], np.zeros((0, len(FEATURE_NAMES))), [], [], dataset_id)

    @classmethod
    def concat(cls, tables, dataset_id=None):
        tables = list(tables)
        if not tables:
            return cls.empty(dataset_id or "")
        if dataset_id is None:
            dataset_id = "+".join(t.dataset_id for t in tables)
        return cls(
            [r for t in tables for r in t.record_ids],
            np.concatenate([t.window_starts for t in tables]),
            np.concatenate([t.features for t in tables]),
            np.concatenate([t.labels for t in tables]),
            np.concatenate([t.valid for t in tables]),
            dataset_id,
        )

    def subset(self, index):
        index = np.asarray(index)
        return FeatureTable(
            [self.record_ids[i] for i in np.arange(len(self))[index]],
            self.window_starts[index],
            self.features[index],
            self.labels[index],
            self.valid[index],
            self.dataset_id,
        )

    def counts(self):
        """``(clean, noisy)`` window counts."""
        noisy = int(self.labels.sum())
        return len(self) - noisy, noisy

    def equals(self, other):
        return (
            self.record_ids == other.record_ids
            and np.array_equal(self.window_starts, other.window_starts)
            and np.array_equal(self.features, other.features, equal_nan=True)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.valid, other.valid)
        )


TABLE_HEADER = ["record_id", "window_start", *FEATURE_NAMES, "label", "valid"]


def save_feature_table(table: FeatureTable, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TABLE_HEADER)
        for i in range(len(table)):
            writer.writerow(
                [
                    table.record_ids[i],
                    int(table.window_starts[i]),
                    *(repr(float(v)) for v in table.features[i]),
                    int(table.labels[i]),
                    int(table.valid[i]),
                ]
            )


def load_feature_table(path, dataset_id=None) -> FeatureTable:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(path, "empty file") from None
        unknown = [c for c in header if c not in TABLE_HEADER]
        if unknown:
            raise FormatError(path, f"unknown column(s): {', '.join(unknown)}", 1)
        missing = [c for c in TABLE_HEADER if c not in header]
        if missing:
            raise FormatError(path, f"missing column(s): {', '.join(missing)}", 1)
        if header != TABLE_HEADER:
            raise FormatError(path, "columns out of order", 1)

        ids, starts, feats, labels, valid = [], [], [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(TABLE_HEADER):
                raise FormatError(
                    path, f"expected {len(TABLE_HEADER)} columns, got {len(row)}", lineno
                )
            try:
                ids.append(row[0])
                starts.append(int(row[1]))
                feats.append([float(v) for v in row[2:-2]])
                labels.append(int(row[-2]))
                valid.append(int(row[-1]))
            except ValueError as exc:
                raise FormatError(path, f"bad value ({exc})", lineno) from None
            if labels[-1] not in (0, 1) or valid[-1] not in (0, 1):
                raise FormatError(path, "label and valid must be 0 or 1", lineno)
    return FeatureTable(
        ids,
        starts,
        np.array(feats, dtype=float).reshape(len(ids), len(FEATURE_NAMES)),
        labels,
        valid,
        dataset_id if dataset_id is not None else path.stem,
    )


# ---------------------------------------------------------------- models

@dataclass
class ModelArtifact:
    model_kind: str
    parameters: dict
    feature_order: list = field(default_factory=lambda: list(FEATURE_NAMES))
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise DataError(f"unsupported model kind {self.model_kind!r}")


def _check_model_dict(path, doc):
    if not isinstance(doc, dict):
        raise FormatError(path, "model file is not a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(path, f"unsupported format_version {version!r}")
    kind = doc.get("model_kind")
    if kind not in MODEL_KINDS:
        raise FormatError(path, f"unsupported model kind {kind!r}")
    for key in ("parameters", "feature_order", "training_meta"):
        if key not in doc:
            raise FormatError(path, f"missing key {key!r}")
    if list(doc["feature_order"]) != list(FEATURE_NAMES):
        raise FormatError(path, "feature_order does not match the HRV feature list")


def save_model(artifact: ModelArtifact, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "format_version": FORMAT_VERSION,
        "model_kind": artifact.model_kind,
        "feature_order": list(artifact.feature_order),
        "training_meta": artifact.training_meta,
        "parameters": artifact.parameters,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, allow_nan=False)
        fh.write("\n")


def load_model(path) -> ModelArtifact:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(path, f"truncated or malformed model file ({exc.msg})", exc.lineno) from None
    _check_model_dict(path, doc)
    return ModelArtifact(
        doc["model_kind"], doc["parameters"], list(doc["feature_order"]), doc["training_meta"]
    )


# --------------------------------------------------------------- reports

def dumps_json(doc):
    """Canonical JSON text used for every report (stable key order)."""
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def save_report(report, path):
    """Write a :class:`~ecgsqa.ml.metrics.MetricsReport` as versioned JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"format_version": FORMAT_VERSION, **report.to_dict()}
    path.write_text(dumps_json(doc), encoding="utf-8")


def load_report(path):
    from .ml.metrics import MetricsReport

    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(path, f"truncated or malformed report ({exc.msg})", exc.lineno) from None
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(path, "missing or unsupported format_version")
    doc.pop("format_version")
    try:
        return MetricsReport.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, f"bad report structure ({exc})") from None
