from __future__ import annotations

from typing import Optional

import math
import logging
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks
from scipy.ndimage import uniform_filter1d

from ecgauth import config
from ecgauth.utils.errors import CorpusError, SegmentationError
from ecgauth.utils.models import (
    EcgTrace,
    PeakList,
    TraceKey,
    SessionId,
    BeatMatrix,
    FloatArray,
    SessionBeats,
    SegmentationConfig,
)
from ecgauth.library.utils import read_labeled, write_labeled, format_float
from ecgauth.library.dataset import chronological_split
from ecgauth.library.validation import validate_fraction

logger = logging.getLogger(__name__)


def ricker(points: int, width: float) -> FloatArray:
    """
    Ricker (Mexican hat) wavelet, the negated second derivative of a Gaussian.

    Args:
        points (int): Number of samples, centred on the middle one.
        width (float): Gaussian width parameter in samples.

    Returns:
        FloatArray: The sampled wavelet.
    """
    amplitude = 2 / (math.sqrt(3 * width) * math.pi**0.25)
    t = np.arange(points) - (points - 1) / 2.0
    t2 = (t / width) ** 2
    return np.asarray(amplitude * (1 - t2) * np.exp(-t2 / 2))


def accentuate_qrs(trace: EcgTrace, scale_s: float = config.WAVELET_SCALE_S) -> FloatArray:
    """
    Rectified single-scale wavelet response that peaks on QRS complexes.

    Args:
        trace (EcgTrace): A conditioned trace.
        scale_s (float): Wavelet width in seconds, matched to the QRS width.

    Returns:
        FloatArray: ``|trace * ricker(scale)|``, same length as the trace; the
            ends are handled by reflect padding.

    Raises:
        SegmentationError: If the scale is not shorter than the trace.
    """
    if scale_s <= 0 or scale_s >= trace.duration_s:
        raise SegmentationError(
            f"wavelet scale {scale_s} s must be positive and shorter than the "
            f"{trace.duration_s} s trace"
        )

    width = scale_s * trace.sample_rate_hz
    half = min(math.ceil(5 * width), trace.n_samples - 1)
    kernel = ricker(2 * half + 1, width)

    padded = np.pad(trace.samples, half, mode="reflect")
    return np.abs(np.convolve(padded, kernel, mode="valid"))


def running_mean_threshold(
    accentuated: FloatArray, seg_config: SegmentationConfig, sample_rate_hz: float
) -> FloatArray:
    """``threshold_factor`` times the centred running mean over the threshold window."""
    window = max(1, round(seg_config.threshold_window_s * sample_rate_hz))
    if window % 2 == 0:
        window += 1

    mean = uniform_filter1d(
        np.asarray(accentuated, dtype=np.float64), size=window, mode="reflect"
    )
    return np.asarray(seg_config.threshold_factor * mean)


def detect_r_peaks(
    accentuated: FloatArray,
    seg_config: SegmentationConfig,
    sample_rate_hz: float,
    trace_ref: TraceKey = ("", SessionId.S1, 0),
) -> PeakList:
    """
    Find R peaks as local maxima above a running-mean threshold.

    Args:
        accentuated (FloatArray): Non-negative output of :func:`accentuate_qrs`.
        seg_config (SegmentationConfig): Threshold and refractory settings.
        sample_rate_hz (float): Sampling rate of the source trace.
        trace_ref (TraceKey): Trace the peaks belong to.

    Returns:
        PeakList: Strictly increasing indices at least one refractory period
            apart. Empty, with a logged warning, when nothing crosses the
            threshold.

    Raises:
        SegmentationError: If the signal is empty or has negative values.
    """
    signal = np.asarray(accentuated, dtype=np.float64)

    if signal.size == 0:
        raise SegmentationError("cannot detect peaks in an empty signal")
    if np.any(signal < 0):
        raise SegmentationError("accentuated signal must be non-negative")

    threshold = running_mean_threshold(signal, seg_config, sample_rate_hz)
    distance = max(1, math.ceil(seg_config.refractory_s * sample_rate_hz))

    # find_peaks accepts heights >= the bound; peaks must strictly exceed it
    indices, _ = find_peaks(
        signal, height=np.nextafter(threshold, np.inf), distance=distance
    )

    if indices.size == 0:
        logger.warning("No R peaks found in %s/%s", trace_ref[0] or "<signal>", trace_ref[1])

    return PeakList(indices.astype(np.int64), trace_ref)


def refine_r_peaks(
    samples: FloatArray,
    peaks: PeakList,
    sample_rate_hz: float,
    tolerance_s: float = config.REFINE_S,
    refractory_s: float = config.REFRACTORY_S,
) -> PeakList:
    """
    Move every detection onto the largest sample within ``tolerance_s``.

    Detections that end up closer than the refractory period keep only the
    larger of the two.
    """
    tolerance = round(tolerance_s * sample_rate_hz)
    if tolerance <= 0 or len(peaks) == 0:
        return peaks

    n = samples.size
    moved = []
    for peak in peaks.indices:
        lo, hi = max(0, peak - tolerance), min(n, peak + tolerance + 1)
        moved.append(lo + int(np.argmax(samples[lo:hi])))

    gap = math.ceil(refractory_s * sample_rate_hz)
    kept: list[int] = []
    for index in sorted(set(moved)):
        if kept and index - kept[-1] < max(gap, 1):
            if samples[index] > samples[kept[-1]]:
                kept[-1] = index
            continue
        kept.append(index)

    return PeakList(np.asarray(kept, dtype=np.int64), peaks.trace_ref)


def locate_r_peaks(
    trace: EcgTrace, seg_config: Optional[SegmentationConfig] = None
) -> PeakList:
    """Accentuate, threshold and refine R peaks of a conditioned trace."""
    seg_config = seg_config or SegmentationConfig()

    accentuated = accentuate_qrs(trace, seg_config.wavelet_scale_s)
    peaks = detect_r_peaks(accentuated, seg_config, trace.sample_rate_hz, trace.key)

    return refine_r_peaks(
        trace.samples,
        peaks,
        trace.sample_rate_hz,
        seg_config.refine_s,
        seg_config.refractory_s,
    )


def window_samples(seg_config: SegmentationConfig, sample_rate_hz: float) -> tuple[int, int]:
    """Samples before R and total window width ``round((pre + post) * fs)``."""
    pre = round(seg_config.pre_r_s * sample_rate_hz)
    width = round((seg_config.pre_r_s + seg_config.post_r_s) * sample_rate_hz)
    return pre, width


def extract_beats(
    trace: EcgTrace,
    peaks: PeakList,
    seg_config: Optional[SegmentationConfig] = None,
) -> BeatMatrix:
    """
    Cut the window ``[R - pre, R + post)`` around every peak.

    Peaks whose window leaves the trace are skipped.

    Args:
        trace (EcgTrace): The conditioned trace.
        peaks (PeakList): R indices inside the trace.
        seg_config (Optional[SegmentationConfig]): Window settings.

    Returns:
        BeatMatrix: One row per usable peak, in peak order.

    Raises:
        SegmentationError: If a peak lies outside the trace or no peak has a
            full window.
    """
    seg_config = seg_config or SegmentationConfig()
    pre, width = window_samples(seg_config, trace.sample_rate_hz)

    indices = peaks.indices
    if indices.size and (indices[0] < 0 or indices[-1] >= trace.n_samples):
        raise SegmentationError("peak index outside of the trace")

    starts = indices - pre
    usable = (starts >= 0) & (starts + width <= trace.n_samples)

    if not usable.any():
        raise SegmentationError(
            f"no peak of {trace.subject}/{trace.session} has a full "
            f"{width}-sample window"
        )

    rows = starts[usable][:, None] + np.arange(width)

    return BeatMatrix(
        trace.samples[rows],
        trace.subject,
        trace.session,
        PeakList(indices[usable], peaks.trace_ref),
        trace.sample_rate_hz,
        pre,
    )


def reject_outlier_beats(
    beats: BeatMatrix, reject_fraction: float = config.REJECT_FRACTION
) -> BeatMatrix:
    """
    Drop the beats farthest from the per-sample median waveform.

    Args:
        beats (BeatMatrix): At least two beats.
        reject_fraction (float): Share to drop, in ``[0, 1)``.

    Returns:
        BeatMatrix: ``N - ceil(f * N)`` beats in their original order. Equal
            distances rank the earlier row as less dissimilar.

    Raises:
        SegmentationError: If fewer than two beats are given or nothing would
            survive.
    """
    validate_fraction(reject_fraction, "reject_fraction", allow_zero=True)

    n = beats.n_beats
    if n < 2:
        raise SegmentationError(
            f"outlier rejection needs at least 2 beats, {beats.subject}/"
            f"{beats.session} has {n}"
        )
    if reject_fraction == 0:
        return beats

    median = np.median(beats.beats, axis=0)
    distances = np.linalg.norm(beats.beats - median, axis=1)

    n_drop = math.ceil(round(reject_fraction * n, 9))
    if n_drop >= n:
        raise SegmentationError(f"rejecting {n_drop} of {n} beats leaves none")

    ranking = np.lexsort((np.arange(n), distances))
    keep = np.sort(ranking[: n - n_drop])

    return beats.take(keep)


def split_beats(beats: BeatMatrix, split_index: int) -> tuple[BeatMatrix, BeatMatrix]:
    """
    Partition beats around a chronological split point.

    Windows ending at or before ``split_index`` go to the first part, windows
    starting at or after it to the second; straddling windows are dropped.
    """
    onsets = beats.onsets
    train = np.flatnonzero(onsets + beats.width <= split_index)
    test = np.flatnonzero(onsets >= split_index)
    return beats.take(train), beats.take(test)


def segment_session(
    trace: EcgTrace,
    seg_config: Optional[SegmentationConfig] = None,
    train_fraction: float = config.TRAIN_FRACTION,
) -> SessionBeats:
    """
    Segment one conditioned (subject, session) trace into train and test beats.

    Outlier rejection runs on all beats of the session before the split.
    """
    seg_config = seg_config or SegmentationConfig()

    peaks = locate_r_peaks(trace, seg_config)
    if len(peaks) == 0:
        raise SegmentationError(f"no R peaks found in {trace.subject}/{trace.session}")

    beats = extract_beats(trace, peaks, seg_config)
    cleaned = reject_outlier_beats(beats, seg_config.reject_fraction)

    train_part, _ = chronological_split(trace, train_fraction)
    train, test = split_beats(cleaned, train_part.n_samples)

    logger.debug(
        "%s/%s: %d peaks, %d beats, %d kept (%d train, %d test)",
        trace.subject,
        trace.session,
        len(peaks),
        beats.n_beats,
        cleaned.n_beats,
        train.n_beats,
        test.n_beats,
    )

    return SessionBeats(train, test, peaks, train_part.n_samples)


def write_session_beats(path: Path, session: SessionBeats) -> None:
    """Store both partitions of a session as labelled text matrices."""
    train = session.train
    write_labeled(
        path,
        {
            "subject": train.subject,
            "session": train.session,
            "sample_rate_hz": format_float(train.sample_rate_hz),
            "offset": train.offset,
            "split_index": session.split_index,
        },
        {
            "train_peaks": train.origin_peaks.indices,
            "train": train.beats,
            "test_peaks": session.test.origin_peaks.indices,
            "test": session.test.beats,
            "peaks": session.peaks.indices,
        },
    )


def read_session_beats(path: Path) -> SessionBeats:
    """
    Load a file written by :func:`write_session_beats`.

    Raises:
        CorpusError: If metadata or blocks are missing.
    """
    meta, blocks = read_labeled(path)

    try:
        subject = meta["subject"]
        session = SessionId(meta["session"])
        sample_rate = float(meta["sample_rate_hz"])
        offset = int(meta["offset"])
        split = int(meta["split_index"])
        ref: TraceKey = (subject, session, 0)

        def part(name: str) -> BeatMatrix:
            peaks = PeakList(blocks[f"{name}_peaks"].reshape(-1).astype(np.int64), ref)
            values = blocks[name].reshape(len(peaks), -1) if len(peaks) else blocks[name]
            return BeatMatrix(values, subject, session, peaks, sample_rate, offset)

        peaks = PeakList(blocks["peaks"].reshape(-1).astype(np.int64), ref)
        return SessionBeats(part("train"), part("test"), peaks, split)

    except (KeyError, ValueError) as error:
        raise CorpusError(f"malformed beat file ({error})", path) from None
