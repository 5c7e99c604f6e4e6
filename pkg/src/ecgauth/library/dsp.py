from __future__ import annotations

from typing import Iterable

import math
import logging
from pathlib import Path
from functools import lru_cache

import numpy as np
from scipy import signal

from ecgauth import config
from ecgauth.utils.errors import FilterDesignError
from ecgauth.utils.models import EcgTrace, FloatArray, FilterConfig, BiquadCascade
from ecgauth.library.utils import read_labeled, write_labeled, format_float

logger = logging.getLogger(__name__)


def pole_radius(cascade: BiquadCascade) -> float:
    """Largest pole magnitude over all sections of ``cascade``."""
    radii = [np.max(np.abs(np.roots(section[3:]))) for section in cascade.sos]
    return float(max(radii))


def _checked(sos: np.ndarray, description: str) -> BiquadCascade:
    if not np.all(np.isfinite(sos)):
        raise FilterDesignError(f"{description}: design produced non-finite coefficients")

    cascade = BiquadCascade(sos, description)
    radius = pole_radius(cascade)
    if radius >= 1.0:
        raise FilterDesignError(f"{description}: unstable design (pole radius {radius})")

    return cascade


@lru_cache(maxsize=32)
def design_butterworth_bandpass(
    filter_config: FilterConfig, sample_rate_hz: float
) -> BiquadCascade:
    """
    Design a maximally flat band-pass of total order ``filter_config.order``.

    Args:
        filter_config (FilterConfig): Cutoffs and order.
        sample_rate_hz (float): Sampling rate of the traces to filter.

    Returns:
        BiquadCascade: Stable sections with -3 dB points at both cutoffs and
            zero gain at DC and Nyquist.

    Raises:
        FilterDesignError: If a cutoff is at or above Nyquist, the order is
            invalid, or the design is numerically unstable.
    """
    try:
        filter_config.validate(sample_rate_hz)
    except ValueError as error:
        raise FilterDesignError(str(error)) from None

    sos = signal.butter(
        filter_config.order // 2,
        [filter_config.hp_cutoff_hz, filter_config.lp_cutoff_hz],
        btype="bandpass",
        output="sos",
        fs=sample_rate_hz,
    )

    return _checked(
        sos,
        f"butterworth bandpass {filter_config.hp_cutoff_hz}-"
        f"{filter_config.lp_cutoff_hz} Hz order {filter_config.order} "
        f"at {sample_rate_hz} Hz",
    )


@lru_cache(maxsize=32)
def design_notch(mains_hz: float, q: float, sample_rate_hz: float) -> BiquadCascade:
    """
    Design a second-order IIR notch at the mains frequency.

    Args:
        mains_hz (float): Notch centre.
        q (float): Quality factor; the -3 dB bandwidth is ``mains_hz / q``.
        sample_rate_hz (float): Sampling rate.

    Returns:
        BiquadCascade: One section with unit DC gain.

    Raises:
        FilterDesignError: If the centre is not strictly between 0 and Nyquist
            or ``q`` is not positive.
    """
    if not 0 < mains_hz < sample_rate_hz / 2:
        raise FilterDesignError(
            f"notch centre {mains_hz} Hz must lie between 0 and Nyquist "
            f"({sample_rate_hz / 2} Hz)"
        )
    if q <= 0:
        raise FilterDesignError(f"notch quality factor must be positive, got {q}")

    b, a = signal.iirnotch(mains_hz, q, fs=sample_rate_hz)

    return _checked(
        signal.tf2sos(b, a),
        f"notch {mains_hz} Hz Q {q} at {sample_rate_hz} Hz",
    )


def chain(*cascades: BiquadCascade) -> BiquadCascade:
    """Concatenate cascades into one that applies them in the given order."""
    if not cascades:
        raise FilterDesignError("Nothing to chain")

    return BiquadCascade(
        np.vstack([cascade.sos for cascade in cascades]),
        " -> ".join(cascade.description for cascade in cascades),
    )


def design_conditioning_filter(
    filter_config: FilterConfig, sample_rate_hz: float
) -> BiquadCascade:
    """Mains notch followed by the baseline/high-frequency band-pass."""
    return chain(
        design_notch(filter_config.mains_hz, filter_config.mains_q, sample_rate_hz),
        design_butterworth_bandpass(filter_config, sample_rate_hz),
    )


def frequency_response(
    cascade: BiquadCascade, freqs_hz: Iterable[float], sample_rate_hz: float
) -> np.ndarray:
    """Complex response of ``cascade`` at the given frequencies."""
    _, response = signal.sosfreqz(
        cascade.sos, worN=np.asarray(list(freqs_hz), dtype=np.float64), fs=sample_rate_hz
    )
    return np.asarray(response)


def gain(cascade: BiquadCascade, freq_hz: float, sample_rate_hz: float) -> float:
    return float(np.abs(frequency_response(cascade, [freq_hz], sample_rate_hz)[0]))


def transient_length(cascade: BiquadCascade) -> int:
    """
    Samples until the slowest pole's envelope decays below ``TRANSIENT_DECAY``.

    Returns:
        int: ``ceil(log(decay) / log(r))`` for the largest pole radius ``r``,
            at least 1.
    """
    radius = pole_radius(cascade)
    if radius <= 0:
        return 1
    return max(1, math.ceil(math.log(config.TRANSIENT_DECAY) / math.log(radius)))


def impulse_response(cascade: BiquadCascade, n_samples: int) -> FloatArray:
    impulse = np.zeros(n_samples)
    impulse[0] = 1.0
    return np.asarray(signal.sosfilt(cascade.sos, impulse))


def filter_zero_phase(trace: EcgTrace, cascade: BiquadCascade) -> EcgTrace:
    """
    Apply ``cascade`` forwards and backwards.

    The trace is extended at both ends by odd reflection over one transient
    length, so edge transients have decayed before the data region.

    Args:
        trace (EcgTrace): The trace to filter.
        cascade (BiquadCascade): A stable cascade.

    Returns:
        EcgTrace: Same labels and length, zero net phase.

    Raises:
        FilterDesignError: If the trace is not longer than three transient
            lengths.
    """
    padlen = transient_length(cascade)

    if trace.n_samples <= 3 * padlen:
        raise FilterDesignError(
            f"trace {trace.subject}/{trace.session} has {trace.n_samples} samples; "
            f"filtering needs more than {3 * padlen} (3 x transient length)"
        )

    filtered = signal.sosfiltfilt(
        cascade.sos, trace.samples, padtype="odd", padlen=padlen
    )

    return trace.with_samples(filtered)


def condition_trace(trace: EcgTrace, filter_config: FilterConfig) -> EcgTrace:
    """Remove mains interference, baseline wander and high-frequency noise."""
    cascade = design_conditioning_filter(filter_config, trace.sample_rate_hz)
    return filter_zero_phase(trace, cascade)


def write_cascade(path: Path, cascade: BiquadCascade) -> None:
    """Dump the sections as text, one ``b0 b1 b2 a0 a1 a2`` row each."""
    write_labeled(
        path,
        {
            "description": cascade.description,
            "pole_radius": format_float(pole_radius(cascade)),
            "transient_length": transient_length(cascade),
        },
        {"sos": cascade.sos},
    )


def read_cascade(path: Path) -> BiquadCascade:
    meta, blocks = read_labeled(path)
    if "sos" not in blocks:
        raise FilterDesignError(f"{path}: no 'sos' block")
    return _checked(blocks["sos"], meta.get("description", path.name))
