import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal as sps

from ecgsqa.errors import ConfigError, DataError
from ecgsqa.preprocess import label_window, window_starts
from ecgsqa.signal_io import EcgRecord
from ecgsqa.synth import (
    SNR_OFF_DB,
    CorpusSpec,
    EcgSynthParams,
    NstSchedule,
    build_corpus,
    draw_rr,
    mix_gain,
    noisy_blocks,
    nst_mix,
    synth_ecg,
    synth_noise,
)

KINDS = ["muscle_artifact", "electrode_motion", "baseline_wander"]


def block_snr(clean, mixed, start, end):
    noise = mixed[start:end] - clean[start:end]
    return 10 * np.log10(np.var(clean[start:end]) / np.var(noise))


def test_exact_regular_rhythm():
    rec, peaks = synth_ecg(EcgSynthParams(duration_s=60, fs=360, mean_hr_bpm=60))
    assert peaks.size == 60
    assert np.all(np.diff(peaks) == 360)
    assert len(rec) == 60 * 360


def test_synth_deterministic():
    p = EcgSynthParams(duration_s=20, rr_jitter_pct=4, seed=12)
    (a, pa), (b, pb) = synth_ecg(p), synth_ecg(p)
    assert np.array_equal(a.samples, b.samples) and np.array_equal(pa, pb)


def test_rr_jitter_statistics():
    params = EcgSynthParams(duration_s=300, mean_hr_bpm=80, rr_jitter_pct=5, seed=2)
    rr = draw_rr(params, np.random.default_rng(params.seed))
    assert rr.std() / rr.mean() == pytest.approx(0.05, abs=0.005)


def test_r_wave_is_the_sample_maximum():
    rec, peaks = synth_ecg(EcgSynthParams(duration_s=30, fs=500, mean_hr_bpm=70, seed=5))
    for p in peaks[1:-1]:
        lo, hi = p - 50, p + 51
        assert lo + int(np.argmax(rec.samples[lo:hi])) == p


def test_synth_param_validation():
    with pytest.raises(ConfigError):
        EcgSynthParams(mean_hr_bpm=10)
    with pytest.raises(ConfigError):
        EcgSynthParams(duration_s=0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_muscle_artifact_is_high_frequency(seed):
    x = synth_noise("muscle_artifact", 60, 360, seed)
    f, pxx = sps.periodogram(x, fs=360)
    assert pxx[f < 10].sum() / pxx.sum() < 0.05


@pytest.mark.parametrize("seed", range(5))
def test_electrode_motion_has_steps(seed):
    x, events = synth_noise("electrode_motion", 10, 360, seed, return_events=True)
    thr = 3 * np.median(np.abs(np.diff(x)))
    jumps = [abs(x[e] - x[e - 1]) for e in events if e > 0]
    assert any(j > thr for j in jumps)


@pytest.mark.parametrize("kind", KINDS)
def test_unit_variance(kind):
    for seed in range(3):
        assert np.var(synth_noise(kind, 60, 360, seed)) == pytest.approx(1.0, abs=0.05)


def test_unknown_noise_kind():
    with pytest.raises(ConfigError, match="unknown noise kind"):
        synth_noise("powerline", 10, 360, 0)


def test_gain_closed_forms():
    x = np.random.default_rng(0).normal(size=1000)
    assert mix_gain(x, x, 0.0) == pytest.approx(1.0)
    assert mix_gain(x, x, -6.0) == pytest.approx(10**0.3)
    assert mix_gain(x, x, SNR_OFF_DB) == 0.0


@pytest.mark.parametrize("snr", [0.0, -6.0, 12.0])
def test_nst_block_snr_and_clean_copy(snr):
    rec, _ = synth_ecg(EcgSynthParams(duration_s=150, fs=360, mean_hr_bpm=75, seed=1))
    noise = synth_noise("electrode_motion", 150, 360, 7)
    mixed, ann = nst_mix(rec, noise, NstSchedule(30, 20, snr))
    noisy = np.zeros(len(rec), dtype=bool)
    for s in ann.spans:
        assert block_snr(rec.samples, mixed.samples, s.start_index, s.end_index) == pytest.approx(snr, abs=0.1)
        noisy[s.start_index:s.end_index] = True
    assert np.array_equal(mixed.samples[~noisy], rec.samples[~noisy])


def test_nst_infinite_snr_is_identity():
    rec, _ = synth_ecg(EcgSynthParams(duration_s=80, seed=2))
    noise = synth_noise("muscle_artifact", 80, 360, 3)
    mixed, ann = nst_mix(rec, noise, NstSchedule(20, 20, SNR_OFF_DB))
    assert np.array_equal(mixed.samples, rec.samples)
    assert len(ann.spans) == 2


def test_noisy_blocks_alternate_and_keep_tail():
    # 30 s lead-in, 20 s blocks, 125 s: blocks at 30, 70, 110 (partial)
    blocks = noisy_blocks(125, 1.0, NstSchedule(30, 20))
    assert blocks == [(30, 50), (70, 90), (110, 125)]


def test_noisy_blocks_too_short():
    with pytest.raises(DataError):
        noisy_blocks(40, 1.0, NstSchedule(30, 20))


def test_nst_deterministic():
    rec, _ = synth_ecg(EcgSynthParams(duration_s=60, seed=1))
    n1 = synth_noise("electrode_motion", 60, 360, 5)
    n2 = synth_noise("electrode_motion", 60, 360, 5)
    a, _ = nst_mix(rec, n1, NstSchedule(10, 10, -6))
    b, _ = nst_mix(rec, n2, NstSchedule(10, 10, -6))
    assert np.array_equal(a.samples, b.samples)


@settings(max_examples=40, deadline=None)
@given(st.floats(5, 30), st.floats(0.2, 0.8), st.floats(5, 40), st.floats(5, 40))
def test_annotations_reproduce_intended_labels(window_s, overlap, lead_in, block):
    fs = 50.0
    n = int(200 * fs)
    clean = EcgRecord(np.sin(np.arange(n) / 7.0), fs)
    noise = np.random.default_rng(0).normal(size=n)
    schedule = NstSchedule(lead_in, block, 0.0)
    _, ann = nst_mix(clean, noise, schedule)
    intended = np.zeros(n, dtype=bool)
    for a, b in noisy_blocks(n, fs, schedule):
        intended[a:b] = True
    wlen = int(round(window_s * fs))
    stride = max(1, int(round(wlen * (1 - overlap))))
    for s in window_starts(n, wlen, stride):
        want = int(intended[s:s + wlen].sum() >= 0.5 * wlen)
        assert label_window(ann, int(s), wlen) == want


def test_corpus_deterministic_and_ids():
    spec = CorpusSpec(name="c", n_records=3, duration_s=90, seed=4)
    a, b = build_corpus(spec), build_corpus(spec)
    assert [r.record_id for r, _, _ in a] == ["c_000", "c_001", "c_002"]
    for (ra, aa, pa), (rb, ab, pb) in zip(a, b):
        assert np.array_equal(ra.samples, rb.samples)
        assert aa.spans == ab.spans and np.array_equal(pa, pb)


def test_corpus_snr_cycles_per_record():
    spec = CorpusSpec(n_records=2, duration_s=90, snr_db=(0.0, -6.0), seed=1,
                      noise_weights={"electrode_motion": 1.0})
    corpus = build_corpus(spec)
    clean = [synth_ecg_for(spec, i) for i in range(2)]
    for (mixed, ann, _), c, target in zip(corpus, clean, spec.snr_db):
        s = ann.spans[0]
        assert block_snr(c, mixed.samples, s.start_index, s.end_index) == pytest.approx(target, abs=0.1)


def synth_ecg_for(spec, i):
    """Clean signal of corpus record ``i``: identical outside noisy blocks, so
    rebuild it at infinite SNR."""
    quiet = CorpusSpec(**{**spec.__dict__, "snr_db": (SNR_OFF_DB,)})
    return build_corpus(quiet)[i][0].samples


def test_corpus_block_range():
    spec = CorpusSpec(n_records=4, duration_s=120, block_s=(15.0, 25.0), seed=3)
    lengths = set()
    for rec, ann, _ in build_corpus(spec):
        first = ann.spans[0]
        lengths.add(first.end_index - first.start_index)
        assert 15 * rec.fs <= first.end_index - first.start_index <= 25 * rec.fs
    assert len(lengths) > 1


def test_corpus_validation():
    with pytest.raises(ConfigError):
        CorpusSpec(mode="both")
    with pytest.raises(ConfigError):
        CorpusSpec(noise_weights={"hum": 1.0})
