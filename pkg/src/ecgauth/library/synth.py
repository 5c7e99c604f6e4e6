from __future__ import annotations

from typing import Dict

import math
import logging
from pathlib import Path

import numpy as np

from ecgauth import config
from ecgauth.utils.models import (
    Wave,
    EcgTrace,
    IntArray,
    PeakList,
    TraceKey,
    SessionId,
    FloatArray,
    SynthConfig,
    CorpusManifest,
    SubjectTemplate,
)
from ecgauth.library.utils import progress
from ecgauth.library.dataset import save_corpus

logger = logging.getLogger(__name__)

# Uniform ranges per wave: amplitude (mV), center relative to R (s), width (s)
WAVE_RANGES: tuple[tuple[tuple[float, float], ...], ...] = (
    ((0.08, 0.25), (-0.22, -0.15), (0.018, 0.035)),  # P
    ((-0.25, -0.05), (-0.045, -0.025), (0.008, 0.014)),  # Q
    ((0.9, 1.6), (0.0, 0.0), (0.009, 0.014)),  # R
    ((-0.4, -0.08), (0.025, 0.05), (0.008, 0.016)),  # S
    ((0.12, 0.35), (0.2, 0.3), (0.055, 0.085)),  # T
)
MEAN_RR_RANGE = (0.75, 1.15)
RR_JITTER_RANGE = (0.01, 0.04)

# Gaussians are evaluated within this many widths of their center
SUPPORT_WIDTHS = 6.0


def sample_subject(rng: np.random.Generator) -> SubjectTemplate:
    """
    Draw one subject's beat morphology and rhythm.

    Every wave parameter is uniform over :data:`WAVE_RANGES`; the ranges keep
    the R wave dominant, so every draw is a valid template.

    Args:
        rng (np.random.Generator): The subject's template stream.

    Returns:
        SubjectTemplate: The sampled template with its S2 drift directions.
    """
    waves = tuple(
        Wave(*(float(rng.uniform(lo, hi)) for lo, hi in ranges))
        for ranges in WAVE_RANGES
    )
    mean_rr = float(rng.uniform(*MEAN_RR_RANGE))
    jitter = float(rng.uniform(*RR_JITTER_RANGE))
    drift = rng.uniform(-1.0, 1.0, size=3 * len(WAVE_RANGES))

    return SubjectTemplate(waves, mean_rr, jitter, drift)


def draw_r_times(
    template: SubjectTemplate, duration_s: float, rng: np.random.Generator
) -> FloatArray:
    """
    R-wave times of one session.

    RR intervals are Gaussian around the template's mean, floored at
    ``RR_FLOOR_S``; the first R falls half an interval into the recording.
    """
    n_draws = math.ceil(duration_s / config.RR_FLOOR_S) + 2
    rr = rng.normal(template.mean_rr_s, template.rr_jitter_s, size=n_draws)
    rr = np.maximum(rr, config.RR_FLOOR_S)

    times = 0.5 * rr[0] + np.concatenate(([0.0], np.cumsum(rr[1:])))
    return times[times < duration_s]


def render_waves(
    waves: FloatArray, r_times: FloatArray, n_samples: int, sample_rate_hz: float
) -> FloatArray:
    """
    Sum of Gaussian waves placed around every R time.

    Args:
        waves (FloatArray): One ``(amplitude, center, width)`` row per wave.
        r_times (FloatArray): R-wave times in seconds.
        n_samples (int): Length of the rendered signal.
        sample_rate_hz (float): Sampling rate.

    Returns:
        FloatArray: The clean signal in millivolts.
    """
    signal = np.zeros(n_samples)

    for r_time in r_times:
        for amplitude, center, width in waves:
            mu = r_time + center
            lo = max(0, math.floor((mu - SUPPORT_WIDTHS * width) * sample_rate_hz))
            hi = min(n_samples, math.ceil((mu + SUPPORT_WIDTHS * width) * sample_rate_hz) + 1)
            if lo >= hi:
                continue
            t = np.arange(lo, hi) / sample_rate_hz
            signal[lo:hi] += amplitude * np.exp(-0.5 * ((t - mu) / width) ** 2)

    return signal


def render_noise(
    synth_config: SynthConfig, n_samples: int, rng: np.random.Generator
) -> FloatArray:
    """Baseline wander, mains hum and white noise; zero-amplitude terms draw nothing."""
    t = np.arange(n_samples) / synth_config.sample_rate_hz
    noise = np.zeros(n_samples)

    if synth_config.baseline_mv:
        phase = rng.uniform(0.0, 2 * np.pi)
        noise += synth_config.baseline_mv * np.sin(
            2 * np.pi * synth_config.baseline_hz * t + phase
        )
    if synth_config.mains_mv:
        phase = rng.uniform(0.0, 2 * np.pi)
        noise += synth_config.mains_mv * np.sin(
            2 * np.pi * synth_config.mains_hz * t + phase
        )
    if synth_config.white_mv:
        noise += rng.normal(0.0, synth_config.white_mv, size=n_samples)

    return noise


def render_trace(
    template: SubjectTemplate,
    synth_config: SynthConfig,
    session: SessionId,
    rng: np.random.Generator,
    subject: str = "synthetic",
) -> tuple[EcgTrace, PeakList]:
    """
    Render one session of a subject.

    Args:
        template (SubjectTemplate): Morphology and rhythm of the subject.
        synth_config (SynthConfig): Duration, rate, noise and drift.
        session (SessionId): S2 applies the template's drift.
        rng (np.random.Generator): The session's stream; rhythm is drawn
            before noise, so a noiseless config renders the same beats.
        subject (str): Subject id written into the trace.

    Returns:
        tuple[EcgTrace, PeakList]: The trace and its ground-truth R indices.
    """
    fs = synth_config.sample_rate_hz
    n_samples = int(round(synth_config.duration_s * fs))

    waves = template.session_waves(session, synth_config.session_drift)
    r_times = draw_r_times(template, n_samples / fs, rng)

    samples = render_waves(waves, r_times, n_samples, fs)
    samples += render_noise(synth_config, n_samples, rng)

    trace = EcgTrace(subject, session, fs, samples)

    peaks = np.round(r_times * fs).astype(np.int64)
    peaks = peaks[peaks < n_samples]

    return trace, PeakList(peaks, trace.key)


def split_recordings(
    trace: EcgTrace, peaks: PeakList, recordings: int
) -> list[tuple[EcgTrace, IntArray]]:
    """Cut a session into ``recordings`` contiguous pieces with local peak indices."""
    bounds = [trace.n_samples * i // recordings for i in range(recordings + 1)]
    pieces: list[tuple[EcgTrace, IntArray]] = []

    for index, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
        piece = EcgTrace(
            trace.subject, trace.session, trace.sample_rate_hz, trace.samples[lo:hi], index
        )
        inside = peaks.indices[(peaks.indices >= lo) & (peaks.indices < hi)]
        pieces.append((piece, inside - lo))

    return pieces


def subject_id(index: int, n_subjects: int) -> str:
    return f"s{index + 1:0{max(2, len(str(n_subjects)))}d}"


def emit_corpus(synth_config: SynthConfig, out: Path) -> CorpusManifest:
    """
    Generate a two-session corpus with ground-truth peak sidecars.

    One ``SeedSequence`` drives everything: it is spawned once per subject and
    each subject's sequence once more for the template, S1 and S2, so the
    output depends on the seed alone.

    Args:
        synth_config (SynthConfig): Corpus size, signal and noise settings.
        out (Path): Corpus directory, created if needed.

    Returns:
        CorpusManifest: The written manifest.
    """
    root = np.random.SeedSequence(synth_config.seed)
    traces: list[EcgTrace] = []
    peaks: Dict[TraceKey, IntArray] = {}

    subject_streams = root.spawn(synth_config.n_subjects)
    for index, stream in enumerate(
        progress(subject_streams, total=synth_config.n_subjects, desc="synth")
    ):
        subject = subject_id(index, synth_config.n_subjects)
        template_seq, *session_seqs = stream.spawn(3)
        template = sample_subject(np.random.default_rng(template_seq))

        for session, seq in zip((SessionId.S1, SessionId.S2), session_seqs):
            trace, truth = render_trace(
                template, synth_config, session, np.random.default_rng(seq), subject
            )
            for piece, piece_peaks in split_recordings(
                trace, truth, synth_config.recordings
            ):
                traces.append(piece)
                peaks[piece.key] = piece_peaks

    manifest = save_corpus(traces, Path(out), peaks)
    logger.info(
        "Wrote %d subjects, %d recordings to %s",
        len(manifest.subjects),
        len(manifest.rows),
        out,
    )

    return manifest
