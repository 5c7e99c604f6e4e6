from __future__ import annotations

from typing import Sequence

from pathlib import Path

import numpy as np
import pytest

from ecgauth.utils.models import (
    PeakList,
    SessionId,
    BeatMatrix,
    FeatureSet,
    SynthConfig,
    SessionBeats,
)
from ecgauth.library.synth import emit_corpus

USERS = ("alice", "bob", "carol", "dave")


def feature_set(
    rng: np.random.Generator,
    users: Sequence[str],
    per_user: int,
    dimension: int = 4,
    spread: float = 0.3,
    session: SessionId = SessionId.S1,
    centers: np.ndarray | None = None,
) -> FeatureSet:
    """Gaussian clusters, one per user, around well separated centers."""
    if centers is None:
        centers = 3.0 * np.eye(len(users), dimension)
    values = np.vstack(
        [centers[i] + spread * rng.standard_normal((per_user, dimension)) for i in range(len(users))]
    )
    subjects = tuple(u for u in users for _ in range(per_user))
    return FeatureSet(values, subjects, (session,) * len(subjects))


def beat_matrix(
    values: np.ndarray,
    subject: str = "alice",
    session: SessionId = SessionId.S1,
    first_peak: int = 100,
    sample_rate_hz: float = 300.0,
    offset: int = 75,
) -> BeatMatrix:
    values = np.asarray(values, dtype=np.float64)
    peaks = first_peak + 300 * np.arange(values.shape[0])
    return BeatMatrix(
        values,
        subject,
        session,
        PeakList(peaks, (subject, session, 0)),
        sample_rate_hz,
        offset,
    )


def session_beats(
    rng: np.random.Generator,
    subject: str,
    session: SessionId,
    n_train: int = 30,
    n_test: int = 10,
    width: int = 12,
) -> SessionBeats:
    """Random beats whose mean shape depends on the subject."""
    shape = np.sin(np.linspace(0, np.pi, width) * (1 + USERS.index(subject) % 4))
    train = beat_matrix(shape + 0.1 * rng.standard_normal((n_train, width)), subject, session)
    test = beat_matrix(
        shape + 0.1 * rng.standard_normal((n_test, width)),
        subject,
        session,
        first_peak=100 + 300 * n_train,
    )
    peaks = np.concatenate([train.origin_peaks.indices, test.origin_peaks.indices])
    return SessionBeats(train, test, PeakList(peaks, (subject, session, 0)), 300 * n_train)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_synth() -> SynthConfig:
    return SynthConfig(n_subjects=4, duration_s=60.0, seed=11)


@pytest.fixture(scope="session")
def low_noise() -> SynthConfig:
    return SynthConfig(
        n_subjects=2,
        duration_s=120.0,
        baseline_mv=0.05,
        mains_mv=0.02,
        white_mv=0.02,
        seed=5,
    )


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory: pytest.TempPathFactory, small_synth: SynthConfig) -> Path:
    out = tmp_path_factory.mktemp("corpus")
    emit_corpus(small_synth, out)
    return out


@pytest.fixture
def small_grid_file(tmp_path: Path) -> Path:
    path = tmp_path / "run.conf"
    path.write_text(
        "# single candidate keeps the tests fast\n"
        "grid.svm_c=1.0\n"
        "grid.svm_gamma=0.01\n"
        "grid.folds=3\n"
        "n_components=10\n",
        encoding="utf-8",
    )
    return path
