"""Synthetic ECG, artifact noise and noise-stress-test style mixing.

The generator is a template-beat model: every beat is a sum of five Gaussian
bumps (P, Q, R, S, T). It exists to give the detector and the experiment
harness signals with exact ground truth; it is not a physiological model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, DataError
from .signal_io import (
    AnnotationSet,
    AnnotationSpan,
    EcgRecord,
    save_annotations,
    save_peaks,
    save_record,
)

# (offset_s, amplitude, width_s) for a 1 s beat; P and T offsets/widths
# stretch with sqrt(RR), QRS stays fixed.
_WAVES = {
    "P": (-0.20, 0.15, 0.025),
    "Q": (-0.030, -0.12, 0.008),
    "R": (0.0, 1.0, 0.010),
    "S": (0.030, -0.25, 0.009),
    "T": (0.30, 0.30, 0.050),
}
_STRETCH = {"P", "T"}

SNR_OFF_DB = 200.0


class NoiseKind(str, Enum):
    muscle_artifact = "muscle_artifact"
    electrode_motion = "electrode_motion"
    baseline_wander = "baseline_wander"


def noise_kind(name):
    try:
        return NoiseKind(name)
    except ValueError:
        choices = ", ".join(k.value for k in NoiseKind)
        raise ConfigError(f"unknown noise kind {name!r} (choose from {choices})") from None


@dataclass(frozen=True)
class EcgSynthParams:
    duration_s: float = 60.0
    fs: float = 360.0
    mean_hr_bpm: float = 60.0
    rr_jitter_pct: float = 0.0
    qrs_amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be positive")
        if not self.fs > 0:
            raise ConfigError("fs must be positive")
        if not 30 <= self.mean_hr_bpm <= 220:
            raise ConfigError("mean_hr_bpm must lie in [30, 220]")
        if self.rr_jitter_pct < 0:
            raise ConfigError("rr_jitter_pct must be >= 0")


@dataclass(frozen=True)
class NstSchedule:
    lead_in_s: float = 300.0
    block_s: float = 120.0
    snr_db: float = 0.0

    def __post_init__(self):
        if self.lead_in_s < 0:
            raise ConfigError("lead_in_s must be >= 0")
        if not self.block_s > 0:
            raise ConfigError("block_s must be positive")


def draw_rr(params: EcgSynthParams, rng):
    """RR intervals (s) covering the record, jitter clamped to +-3 sigma."""
    mean_rr = 60.0 / params.mean_hr_bpm
    sigma = params.rr_jitter_pct / 100.0
    n = int(math.ceil(params.duration_s / (mean_rr * max(0.1, 1.0 - 3 * sigma)))) + 2
    jitter = rng.normal(0.0, sigma, n) if sigma > 0 else np.zeros(n)
    jitter = np.clip(jitter, -3 * sigma, 3 * sigma)
    return mean_rr * (1.0 + jitter)


def synth_ecg(params: EcgSynthParams):
    """Return ``(EcgRecord, r_peak_indices)``.

    The first R wave sits half a mean RR after t=0; R centres are placed on
    exact sample indices, which are the ground truth.
    """
    rng = np.random.default_rng(params.seed)
    fs = params.fs
    n = int(round(params.duration_s * fs))
    t = np.arange(n) / fs
    rr = draw_rr(params, rng)

    r_times = [0.5 * 60.0 / params.mean_hr_bpm]
    for gap in rr:
        nxt = r_times[-1] + gap
        if nxt >= params.duration_s + 1.0:
            break
        r_times.append(nxt)
    beat_rr = np.append(rr[: len(r_times)], rr[len(r_times) - 1])

    x = np.zeros(n)
    peaks = []
    for i, tr in enumerate(r_times):
        idx = int(round(tr * fs))
        tr = idx / fs
        if 0 <= idx < n:
            peaks.append(idx)
        stretch = math.sqrt(beat_rr[i])
        for name, (offset, amp, width) in _WAVES.items():
            if name in _STRETCH:
                offset, width = offset * stretch, width * stretch
            if name == "R":
                amp = amp * params.qrs_amplitude
            centre = tr + offset
            lo = max(0, int((centre - 5 * width) * fs))
            hi = min(n, int((centre + 5 * width) * fs) + 2)
            if lo >= hi:
                continue
            seg = t[lo:hi]
            x[lo:hi] += amp * np.exp(-0.5 * ((seg - centre) / width) ** 2)
    record = EcgRecord(x, fs, record_id=f"synth{params.seed}", units="mV")
    return record, np.array(peaks, dtype=np.int64)


def _unit(x):
    x = x - x.mean()
    return x / x.std()


def _muscle(n, fs, rng):
    white = rng.standard_normal(n)
    nyq = fs / 2.0
    sos = sps.butter(4, [20.0 / nyq, 0.9], btype="bandpass", output="sos")
    return sps.sosfiltfilt(sos, white)


def _lowpass(x, cutoff, fs, order=2):
    sos = sps.butter(order, cutoff / (fs / 2.0), btype="lowpass", output="sos")
    return sps.sosfiltfilt(sos, x)


def electrode_motion(n, fs, rng, step_rate_hz=0.5, burst_rate_hz=1.5):
    """Electrode-motion artifact and its event log.

    Abrupt baseline jumps arrive as a Poisson process (mean one per 2 s) and
    move a mean-reverting random-walk level. Every jump, plus further
    Poisson-arriving motion events, launches a damped 4-15 Hz oscillation
    that resembles a QRS deflection; these bursts carry most of the power.
    A sub-1 Hz drift is added on top. Returns ``(samples, step_indices)``
    before normalization.
    """
    duration = n / fs
    n_steps = rng.poisson(step_rate_hz * duration)
    steps = np.sort(rng.integers(1, n, n_steps)) if n_steps else np.zeros(0, np.int64)

    level = np.zeros(n)
    value = 0.0
    for idx in steps:
        value = 0.3 * value + rng.normal(0.0, 1.0) + math.copysign(1.0, rng.normal())
        level[idx:] = value
    drift = _lowpass(np.cumsum(rng.standard_normal(n)), 0.8, fs)
    drift = 0.3 * (drift - drift.mean()) / (drift.std() + 1e-12)

    bursts = np.zeros(n)
    extra = rng.integers(0, n, rng.poisson(burst_rate_hz * duration))
    for idx in np.concatenate([steps, extra]):
        f0 = rng.uniform(4.0, 15.0)
        tau = rng.uniform(0.03, 0.10)
        length = int(5 * tau * fs)
        tt = np.arange(length) / fs
        wave = rng.normal(0.0, 10.0) * np.exp(-tt / tau) * np.sin(2 * np.pi * f0 * tt)
        hi = min(n, idx + length)
        bursts[idx:hi] += wave[: hi - idx]
    return level + drift + bursts, steps


def synth_noise(kind, duration_s, fs, seed, return_events=False):
    """Zero-mean, unit-variance artifact noise.

    ``muscle_artifact``: white noise band-limited to 20 Hz .. 0.9 * Nyquist.
    ``electrode_motion``: see :func:`electrode_motion`.
    ``baseline_wander``: mixture of sub-1 Hz sinusoids.
    With ``return_events`` an ``(samples, events)`` pair is returned, where
    ``events`` holds electrode-motion step indices (empty for other kinds).
    """
    kind = noise_kind(kind)
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    if n < 2:
        raise ConfigError("noise duration too short")
    events = np.zeros(0, dtype=np.int64)
    if kind is NoiseKind.muscle_artifact:
        x = _muscle(n, fs, rng)
    elif kind is NoiseKind.electrode_motion:
        x, events = electrode_motion(n, fs, rng)
    else:
        t = np.arange(n) / fs
        x = np.zeros(n)
        for _ in range(4):
            x += rng.uniform(0.3, 1.0) * np.sin(
                2 * np.pi * rng.uniform(0.05, 0.9) * t + rng.uniform(0, 2 * np.pi)
            )
    x = _unit(x)
    return (x, events) if return_events else x


def noisy_blocks(n_samples, fs, schedule: NstSchedule):
    """``(start, end)`` sample ranges that receive noise.

    Blocks follow the lead-in back to back; the first, third, fifth ... are
    noisy. A trailing partial block is kept.
    """
    lead = int(round(schedule.lead_in_s * fs))
    block = int(round(schedule.block_s * fs))
    if block < 1:
        raise ConfigError("block shorter than one sample")
    if lead + block > n_samples:
        raise DataError("record too short for lead-in plus one block")
    out = []
    for k, start in enumerate(range(lead, n_samples, block)):
        if k % 2 == 0:
            out.append((start, min(start + block, n_samples)))
    return out


def mix_gain(clean_block, noise_block, snr_db):
    """Noise gain reaching ``snr_db`` over one block (variance-based powers)."""
    if snr_db >= SNR_OFF_DB:
        return 0.0
    ps = float(np.var(clean_block))
    pn = float(np.var(noise_block))
    if ps <= 0 or pn <= 0:
        raise DataError("block with zero clean or noise variance")
    return math.sqrt(ps / pn) * 10.0 ** (-snr_db / 20.0)


def nst_mix(clean: EcgRecord, noise, schedule: NstSchedule):
    """Add ``noise`` to alternate blocks of ``clean`` at ``schedule.snr_db``.

    Returns the mixed record and an :class:`AnnotationSet` marking the noisy
    blocks. Samples outside noisy blocks are copied unchanged.
    """
    noise = np.asarray(noise, dtype=float)
    n = len(clean)
    if noise.size < n:
        raise DataError("noise shorter than the clean record")
    out = clean.samples.copy()
    spans = []
    for start, end in noisy_blocks(n, clean.fs, schedule):
        g = mix_gain(clean.samples[start:end], noise[start:end], schedule.snr_db)
        out[start:end] = clean.samples[start:end] + g * noise[start:end]
        spans.append(AnnotationSpan(start, end, 1))
    mixed = clean.replace(out)
    return mixed, AnnotationSet(clean.record_id, spans)


@dataclass
class CorpusSpec:
    """Recipe for a synthetic noise-stress corpus.

    ``noise_weights`` maps noise kinds to weights. With ``mode="joint"`` every
    record gets the weighted sum of all kinds (each unit variance, weights on
    the amplitude scale); with ``mode="single"`` each record gets one kind
    drawn with probability proportional to its weight.
    """

    name: str = "corpus"
    n_records: int = 10
    duration_s: float = 300.0
    fs: float = 360.0
    hr_range: tuple = (50.0, 120.0)
    jitter_range: tuple = (0.0, 5.0)
    noise_weights: dict = field(default_factory=lambda: {"muscle_artifact": 1.0,
                                                         "electrode_motion": 1.0})
    mode: str = "joint"
    snr_db: tuple = (0.0, -6.0)
    lead_in_s: float = 30.0
    block_s: float | tuple = 20.0  # a (lo, hi) pair draws one length per record
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("joint", "single"):
            raise ConfigError(f"unknown corpus mode {self.mode!r}")
        if self.n_records < 1:
            raise ConfigError("n_records must be >= 1")
        for k in self.noise_weights:
            noise_kind(k)


def build_corpus(spec: CorpusSpec):
    """Generate ``[(mixed_record, annotations, true_peaks), ...]``.

    Deterministic in ``spec``; records are seeded independently so any
    subset can be regenerated on its own.
    """
    children = np.random.SeedSequence(spec.seed).spawn(spec.n_records)
    kinds = list(spec.noise_weights)
    weights = np.array([spec.noise_weights[k] for k in kinds], dtype=float)
    out = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        params = EcgSynthParams(
            duration_s=spec.duration_s,
            fs=spec.fs,
            mean_hr_bpm=float(rng.uniform(*spec.hr_range)),
            rr_jitter_pct=float(rng.uniform(*spec.jitter_range)),
            qrs_amplitude=float(rng.uniform(0.7, 1.5)),
            seed=int(rng.integers(2**31)),
        )
        clean, peaks = synth_ecg(params)
        if spec.mode == "joint":
            noise = np.zeros(len(clean))
            for kind, w in zip(kinds, weights):
                noise += w * synth_noise(kind, spec.duration_s, spec.fs, int(rng.integers(2**31)))
        else:
            kind = kinds[int(rng.choice(len(kinds), p=weights / weights.sum()))]
            noise = synth_noise(kind, spec.duration_s, spec.fs, int(rng.integers(2**31)))
        block_s = spec.block_s
        if isinstance(block_s, (tuple, list)):
            block_s = float(rng.uniform(*block_s))
        schedule = NstSchedule(spec.lead_in_s, block_s, spec.snr_db[i % len(spec.snr_db)])
        record_id = f"{spec.name}_{i:03d}"
        clean = EcgRecord(clean.samples, clean.fs, record_id=record_id, units="mV")
        mixed, ann = nst_mix(clean, noise, schedule)
        out.append((mixed, ann, peaks))
    return out


def save_corpus(corpus, directory):
    """Write each record as ``.ecg``/``.meta``/``.ann`` plus reference ``.peaks``."""
    directory = Path(directory)
    for record, ann, peaks in corpus:
        stem = directory / record.record_id
        save_record(record, stem)
        save_annotations(ann, stem.with_suffix(".ann"))
        save_peaks(peaks, stem.with_suffix(".peaks"))
