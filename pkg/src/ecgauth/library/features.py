from __future__ import annotations

from typing import Sequence, Union

import logging
from pathlib import Path

import numpy as np

from ecgauth import config
from ecgauth.utils.errors import CorpusError, FeatureError
from ecgauth.utils.models import (
    SessionId,
    BeatMatrix,
    FeatureSet,
    FloatArray,
    FeatureModel,
    FeatureStatus,
)
from ecgauth.library.utils import read_labeled, write_labeled, format_float

logger = logging.getLogger(__name__)

BeatInput = Union[BeatMatrix, Sequence[BeatMatrix], FloatArray]


def _matrix(beats: BeatInput) -> FloatArray:
    if isinstance(beats, BeatMatrix):
        return beats.beats
    if isinstance(beats, np.ndarray):
        return np.asarray(beats, dtype=np.float64)
    if not beats:
        raise FeatureError("no beats given")
    return np.vstack([part.beats for part in beats])


def fit_feature_model(train_beats: BeatInput, k: int = config.N_COMPONENTS) -> FeatureModel:
    """
    Fit column z-scores and a PCA basis on training beats.

    The basis comes from a symmetric eigendecomposition of the population
    covariance of the standardized matrix. Components are ordered by
    decreasing eigenvalue and signed so that each row's largest-magnitude
    entry is positive.

    Args:
        train_beats (BeatInput): Training rows, as one or more BeatMatrix or a
            plain (n, W) matrix.
        k (int): Requested number of components.

    Returns:
        FeatureModel: ``min(k, W)`` components. When ``k`` exceeds the
            numerical rank the model is flagged ``rank_deficient``.

    Raises:
        FeatureError: If ``k < 1`` or there are not more rows than ``k``.
    """
    matrix = _matrix(train_beats)

    if matrix.ndim != 2:
        raise FeatureError("training beats must form a 2-D matrix")
    n, width = matrix.shape
    if k < 1:
        raise FeatureError(f"k must be at least 1, got {k}")
    if n <= k:
        raise FeatureError(f"need more than k={k} training rows, got {n}")

    mean = matrix.mean(axis=0)
    scale = np.maximum(matrix.std(axis=0), config.SCALE_FLOOR)
    standardized = (matrix - mean) / scale

    covariance = standardized.T @ standardized / n
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)

    order = np.arange(width)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    eigenvectors = eigenvectors[:, order]

    n_components = min(k, width)
    components = eigenvectors[:, :n_components].T.copy()

    lead = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(n_components), lead])
    components *= np.where(signs == 0, 1.0, signs)[:, None]

    largest = eigenvalues[0] if eigenvalues.size else 0.0
    rank = int(np.count_nonzero(eigenvalues > config.RANK_TOLERANCE * largest))

    status = FeatureStatus.OK
    if k > rank:
        status = FeatureStatus.RANK_DEFICIENT
        logger.warning(
            "Requested %d components but the training matrix has rank %d", k, rank
        )

    return FeatureModel(
        feature_mean=mean,
        feature_scale=scale,
        components=components,
        explained_variance=eigenvalues[:n_components],
        total_variance=float(np.trace(covariance)),
        rank=rank,
        status=status,
    )


def standardize(matrix: FloatArray, model: FeatureModel) -> FloatArray:
    """Apply the model's training z-score to the rows of ``matrix``."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != model.width:
        raise FeatureError(
            f"beat width {matrix.shape[-1]} does not match model width {model.width}"
        )
    return np.asarray((matrix - model.feature_mean) / model.feature_scale)


def transform(beats: BeatMatrix, model: FeatureModel) -> FeatureSet:
    """
    Standardize and project beats onto the model's components.

    Args:
        beats (BeatMatrix): Beats of one (subject, session).
        model (FeatureModel): A fitted model of matching width.

    Returns:
        FeatureSet: One vector ``components @ ((x - mean) / scale)`` per beat.

    Raises:
        FeatureError: If the beat width differs from the model width.
    """
    values = standardize(beats.beats, model) @ model.components.T
    n = values.shape[0]
    return FeatureSet(values, (beats.subject,) * n, (beats.session,) * n)


def reconstruct(values: FloatArray, model: FeatureModel) -> FloatArray:
    """Map feature vectors back to standardized beat space."""
    return np.asarray(np.asarray(values, dtype=np.float64) @ model.components)


def write_feature_model(path: Path, model: FeatureModel) -> None:
    write_labeled(
        path,
        {
            "total_variance": format_float(model.total_variance),
            "rank": model.rank,
            "status": model.status,
        },
        {
            "mean": model.feature_mean,
            "scale": model.feature_scale,
            "components": model.components,
            "explained_variance": model.explained_variance,
        },
    )


def read_feature_model(path: Path) -> FeatureModel:
    meta, blocks = read_labeled(path)

    try:
        return FeatureModel(
            feature_mean=blocks["mean"].reshape(-1),
            feature_scale=blocks["scale"].reshape(-1),
            components=blocks["components"],
            explained_variance=blocks["explained_variance"].reshape(-1),
            total_variance=float(meta["total_variance"]),
            rank=int(meta["rank"]),
            status=FeatureStatus(meta["status"]),
        )
    except (KeyError, ValueError) as error:
        raise CorpusError(f"malformed feature model ({error})", path) from None


def write_features(path: Path, train: FeatureSet, test: FeatureSet) -> None:
    """Store the train and test vectors of one (subject, session)."""
    labels = train.subjects[:1] or test.subjects[:1]
    sessions = train.sessions[:1] or test.sessions[:1]
    write_labeled(
        path,
        {"subject": labels[0], "session": sessions[0]},
        {"train": train.values, "test": test.values},
    )


def read_features(path: Path) -> tuple[FeatureSet, FeatureSet]:
    meta, blocks = read_labeled(path)

    try:
        subject, session = meta["subject"], SessionId(meta["session"])

        def part(name: str) -> FeatureSet:
            values = blocks[name]
            n = values.shape[0]
            return FeatureSet(values, (subject,) * n, (session,) * n)

        return part("train"), part("test")

    except (KeyError, ValueError) as error:
        raise CorpusError(f"malformed feature file ({error})", path) from None
