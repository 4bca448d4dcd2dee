"""RR intervals and the 19 time-domain HRV features.

Durations are in milliseconds, pNN values in percent.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError

FEATURE_NAMES = (
    "MeanNN",
    "SDNN",
    "RMSSD",
    "SDSD",
    "CVNN",
    "CVSD",
    "MedianNN",
    "MadNN",
    "MCVNN",
    "IQRNN",
    "SDRMSSD",
    "Prc20NN",
    "Prc80NN",
    "pNN50",
    "pNN20",
    "MinNN",
    "MaxNN",
    "HTI",
    "TINN",
)

MIN_INTERVALS = 4
HIST_BIN_MS = 1000.0 / 128.0
MAD_SCALE = 1.4826
# relative slack under which two triangle-fit errors count as equal
_TIE_RTOL = 1e-9


class UndetectableWindow(DataError):
    """Too few RR intervals to compute features."""


def rr_intervals(peaks, fs) -> np.ndarray:
    """Successive R-peak gaps in milliseconds."""
    peaks = np.asarray(peaks, dtype=np.int64)
    if peaks.size < 2:
        raise UndetectableWindow("insufficient peaks: need at least 2")
    rr = np.diff(peaks) / float(fs) * 1000.0
    if np.any(rr <= 0):
        raise DataError("peak indices must be strictly increasing")
    return rr


def triangle_fit_errors(counts, mode_bin):
    """Squared-error contributions of every admissible triangle base.

    Bin ``k`` of ``counts`` sits at position ``k`` (in bin units). For a
    triangle rising from 0 at ``n`` to ``counts[mode_bin]`` at ``mode_bin``
    and falling to 0 at ``m``, the total error against the histogram splits
    into a left part depending only on ``n`` and a right part depending only
    on ``m``; bins left of ``n`` and right of ``m`` contribute ``counts**2``
    to the side they lie on.

    Returns ``(left_pos, left_err, right_pos, right_err)``. Candidate bases
    range over the occupied support widened by one empty bin on each side.
    """
    # one empty bin of padding on each side; positions below are padded coords
    c = np.concatenate(([0.0], np.asarray(counts, dtype=float), [0.0]))
    mode = mode_bin + 1
    peak = c[mode]
    occupied = np.flatnonzero(c)
    lo, hi = occupied[0] - 1, occupied[-1] + 1

    left_pos = np.arange(lo, mode)
    ks = np.arange(lo, mode)
    # q[n, k] = peak * (k - n) / (mode - n) for k >= n, else 0
    num = ks[None, :] - left_pos[:, None]
    q = np.where(num >= 0, peak * num / (mode - left_pos)[:, None], 0.0)
    left_err = ((c[ks][None, :] - q) ** 2).sum(axis=1)

    right_pos = np.arange(mode + 1, hi + 1)
    ks = np.arange(mode + 1, hi + 1)
    num = right_pos[:, None] - ks[None, :]
    q = np.where(num >= 0, peak * num / (right_pos - mode)[:, None], 0.0)
    right_err = ((c[ks][None, :] - q) ** 2).sum(axis=1)
    left_pos, right_pos = left_pos - 1, right_pos - 1
    return left_pos, left_err, right_pos, right_err


def _argmin_first(err):
    best = err.min()
    return int(np.flatnonzero(err <= best + _TIE_RTOL * max(abs(best), 1.0))[0])


def nn_histogram(rr_ms):
    """Counts of the NN histogram with 1/128 s bins left-aligned at 0 ms."""
    idx = np.floor(np.asarray(rr_ms, dtype=float) / HIST_BIN_MS).astype(np.int64)
    return np.bincount(idx)


def tinn(rr_ms):
    """``(TINN_ms, HTI)`` from a least-squares triangle fit to the NN histogram.

    The triangle apex sits on the histogram mode (earliest bin on ties); the
    base end points are searched exhaustively over bin positions. A histogram
    with a single occupied bin gives ``(0.0, 1.0)``.
    """
    rr_ms = np.asarray(rr_ms, dtype=float)
    if rr_ms.size < MIN_INTERVALS:
        raise UndetectableWindow(f"need at least {MIN_INTERVALS} intervals")
    counts = nn_histogram(rr_ms)
    mode_bin = int(np.argmax(counts))
    hti = rr_ms.size / counts[mode_bin]
    if np.count_nonzero(counts) == 1:
        return 0.0, 1.0
    left_pos, left_err, right_pos, right_err = triangle_fit_errors(counts, mode_bin)
    n = left_pos[_argmin_first(left_err)]
    m = right_pos[_argmin_first(right_err)]
    return float((m - n) * HIST_BIN_MS), float(hti)


def compute_features(rr_ms) -> np.ndarray:
    """Feature vector in :data:`FEATURE_NAMES` order.

    Raises :class:`UndetectableWindow` for fewer than four intervals.
    """
    nn = np.asarray(rr_ms, dtype=float)
    if nn.size < MIN_INTERVALS:
        raise UndetectableWindow(f"need at least {MIN_INTERVALS} intervals, got {nn.size}")
    diff = np.diff(nn)

    mean_nn = nn.mean()
    sdnn = nn.std(ddof=1)
    rmssd = np.sqrt(np.mean(diff**2))
    sdsd = diff.std(ddof=1)
    median_nn = np.median(nn)
    mad_nn = MAD_SCALE * np.median(np.abs(nn - median_nn))
    q20, q25, q75, q80 = np.percentile(nn, [20, 25, 75, 80])
    abs_diff = np.abs(diff)
    tinn_ms, hti = tinn(nn)

    return np.array(
        [
            mean_nn,
            sdnn,
            rmssd,
            sdsd,
            sdnn / mean_nn,
            rmssd / mean_nn,
            median_nn,
            mad_nn,
            mad_nn / median_nn,
            q75 - q25,
            sdnn / rmssd if rmssd > 0 else 0.0,
            q20,
            q80,
            100.0 * np.count_nonzero(abs_diff > 50) / diff.size,
            100.0 * np.count_nonzero(abs_diff > 20) / diff.size,
            nn.min(),
            nn.max(),
            hti,
            tinn_ms,
        ]
    )


def features_dict(rr_ms):
    return dict(zip(FEATURE_NAMES, compute_features(rr_ms).tolist()))
