from __future__ import annotations

from typing import Optional, Sequence

import logging
from pathlib import Path

import numpy as np
import matplotlib
from matplotlib.figure import Figure

from ecgauth import config
from ecgauth.utils.models import EcgTrace, SessionBeats, SegmentationConfig
from ecgauth.library.segmentation import (
    accentuate_qrs,
    detect_r_peaks,
    running_mean_threshold,
)

logger = logging.getLogger(__name__)

STYLES = ("beats", "peaks")


def _save_svg(figure: Figure, out: Path) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)

    with matplotlib.rc_context(
        {"svg.hashsalt": config.SVG_HASH_SALT, "svg.fonttype": "path"}
    ):
        figure.savefig(out, format="svg", metadata={"Date": None})

    logger.info("Wrote %s", out)
    return out


def mean_beat(session: SessionBeats) -> np.ndarray:
    """Average of every beat kept for a session, both partitions together."""
    parts = [m.beats for m in (session.train, session.test) if m.n_beats]
    if not parts:
        raise ValueError(f"{session.train.subject}/{session.train.session} has no beats")
    return np.vstack(parts).mean(axis=0)


def plot_mean_beats(
    sessions: Sequence[SessionBeats],
    out: Path,
    labels: Optional[Sequence[str]] = None,
) -> Path:
    """
    Overlay the mean beat of every session, one labelled line each.

    Args:
        sessions (Sequence[SessionBeats]): Segmented sessions, usually one per
            subject.
        out (Path): SVG destination.
        labels (Optional[Sequence[str]]): Legend entries; default
            ``subject/session``.

    Returns:
        Path: The written file.
    """
    if not sessions:
        raise ValueError("at least one beat file is required")

    labels = labels or [f"{s.train.subject}/{s.train.session}" for s in sessions]

    figure = Figure(figsize=config.FIGURE_SIZE)
    ax = figure.add_subplot()

    for session, label in zip(sessions, labels):
        beat = mean_beat(session)
        fs = session.train.sample_rate_hz
        t = (np.arange(beat.size) - session.train.offset) / fs
        ax.plot(t, beat, linewidth=1.2, label=label, gid=f"beat-{label}")

    ax.axvline(0.0, color="grey", linestyle=":", linewidth=0.8)
    ax.set_xlabel("Time relative to R peak (s)")
    ax.set_ylabel("Amplitude (mV)")
    ax.set_title("Mean heartbeat per user")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", fontsize=8)
    figure.tight_layout()

    return _save_svg(figure, out)


def plot_peaks(
    trace: EcgTrace,
    out: Path,
    seg_config: Optional[SegmentationConfig] = None,
    span_s: Optional[float] = None,
) -> Path:
    """
    Draw the accentuated signal, its running-mean threshold and the peaks found.

    The peak markers are left out when no peak crosses the threshold.

    Args:
        trace (EcgTrace): A conditioned trace.
        out (Path): SVG destination.
        seg_config (Optional[SegmentationConfig]): Detector settings.
        span_s (Optional[float]): Only draw the first ``span_s`` seconds.

    Returns:
        Path: The written file.
    """
    seg_config = seg_config or SegmentationConfig()
    fs = trace.sample_rate_hz

    accentuated = accentuate_qrs(trace, seg_config.wavelet_scale_s)
    threshold = running_mean_threshold(accentuated, seg_config, fs)
    peaks = detect_r_peaks(accentuated, seg_config, fs, trace.key).indices

    stop = trace.n_samples if span_s is None else min(trace.n_samples, round(span_s * fs))
    t = np.arange(stop) / fs
    peaks = peaks[peaks < stop]

    figure = Figure(figsize=config.FIGURE_SIZE)
    ax = figure.add_subplot()
    ax.plot(t, accentuated[:stop], linewidth=0.8, label="signal", gid="signal")
    ax.plot(t, threshold[:stop], linewidth=1.0, linestyle="--", label="threshold", gid="threshold")

    if peaks.size:
        ax.plot(
            peaks / fs,
            accentuated[peaks],
            linestyle="none",
            marker="o",
            markersize=4,
            label="peaks",
            gid="peaks",
        )

    ax.set_xlabel("Time (s)")
    ax.set_ylabel("Wavelet response")
    ax.set_title(f"R-peak detection, {trace.subject}/{trace.session}")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", fontsize=8)
    figure.tight_layout()

    return _save_svg(figure, out)
