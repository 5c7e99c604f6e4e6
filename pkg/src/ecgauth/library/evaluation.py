from __future__ import annotations

import numpy as np

from ecgauth.utils.models import ScoreSet, FloatArray


def far_frr(scores: ScoreSet, threshold: float) -> tuple[float, float]:
    """
    Error rates at one threshold; a score is accepted iff ``score >= threshold``.

    Args:
        scores (ScoreSet): Genuine and impostor scores, both non-empty.
        threshold (float): Decision threshold.

    Returns:
        tuple[float, float]: The share of impostor scores accepted (FAR) and
            the share of genuine scores rejected (FRR).
    """
    scores.require_both()
    far = float(np.count_nonzero(scores.impostor >= threshold)) / scores.impostor.size
    frr = float(np.count_nonzero(scores.genuine < threshold)) / scores.genuine.size
    return far, frr


def compute_hter(scores: ScoreSet, threshold: float) -> float:
    """Half total error rate ``(FAR + FRR) / 2`` at a fixed threshold."""
    far, frr = far_frr(scores, threshold)
    return (far + frr) / 2


def _sweep(scores: ScoreSet) -> tuple[FloatArray, np.ndarray, np.ndarray]:
    """
    Error counts for one threshold per interval between distinct scores.

    Entry ``k < m`` stands for every threshold in ``(u[k-1], u[k]]``, the last
    entry for thresholds above the highest score.
    """
    levels = np.unique(np.concatenate([scores.genuine, scores.impostor]))
    impostor = np.sort(scores.impostor)
    genuine = np.sort(scores.genuine)

    accepted = impostor.size - np.searchsorted(impostor, levels, side="left")
    rejected = np.searchsorted(genuine, levels, side="left")

    accepted = np.append(accepted, 0).astype(np.int64)
    rejected = np.append(rejected, genuine.size).astype(np.int64)

    return levels, accepted, rejected


def far_frr_curve(scores: ScoreSet) -> tuple[FloatArray, FloatArray, FloatArray]:
    """
    FAR and FRR at every distinct score used as threshold.

    Returns:
        tuple[FloatArray, FloatArray, FloatArray]: Thresholds (distinct scores
            plus ``inf``), FAR and FRR at each.
    """
    scores.require_both()
    levels, accepted, rejected = _sweep(scores)
    thresholds = np.append(levels, np.inf)
    return (
        thresholds,
        accepted / scores.impostor.size,
        rejected / scores.genuine.size,
    )


def compute_eer(scores: ScoreSet) -> tuple[float, float]:
    """
    Equal error rate and the threshold where it is reached.

    Thresholds are swept over the distinct scores. Where FAR and FRR are equal
    on a run of intervals, the EER is that common value and the threshold is
    the midpoint of the run. Otherwise FAR and FRR are interpolated linearly
    between the two sweep points where their difference changes sign, and
    the threshold is the last score before the change.

    Args:
        scores (ScoreSet): Genuine and impostor scores, both non-empty.

    Returns:
        tuple[float, float]: ``(eer, threshold)``.
    """
    scores.require_both()

    levels, accepted, rejected = _sweep(scores)
    n_g, n_i = scores.genuine.size, scores.impostor.size

    # FAR - FRR in integer units of 1 / (n_g * n_i), exact
    difference = accepted * n_g - rejected * n_i
    far = accepted / n_i

    zeros = np.flatnonzero(difference == 0)
    if zeros.size:
        lo, hi = int(zeros[0]), int(zeros[-1])
        # difference starts at n_g * n_i > 0, so lo >= 1; it ends at -n_g * n_i
        threshold = (levels[lo - 1] + levels[hi]) / 2
        return float(far[lo]), float(threshold)

    k = int(np.flatnonzero(difference < 0)[0])
    before, after = float(difference[k - 1]), float(difference[k])
    weight = before / (before - after)
    eer = far[k - 1] + weight * (far[k] - far[k - 1])

    return float(eer), float(levels[k - 1])
