from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pytest
from conftest import beat_matrix

from ecgauth.utils.errors import FeatureError
from ecgauth.utils.models import SessionId, FeatureStatus
from ecgauth.library.features import (
    transform,
    standardize,
    reconstruct,
    read_features,
    write_features,
    fit_feature_model,
    read_feature_model,
    write_feature_model,
)


def test_rank_one_input(caplog: pytest.LogCaptureFixture) -> None:
    matrix = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])

    with caplog.at_level(logging.WARNING, logger="ecgauth"):
        model = fit_feature_model(matrix, 2)

    np.testing.assert_allclose(model.components[0], [2**-0.5, 2**-0.5], atol=1e-12)
    np.testing.assert_allclose(model.explained_variance_ratio, [1.0, 0.0], atol=1e-12)
    assert model.rank == 1
    assert model.status is FeatureStatus.RANK_DEFICIENT
    assert "rank 1" in caplog.text


def test_standardization_uses_population_std() -> None:
    matrix = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    model = fit_feature_model(matrix, 1)

    np.testing.assert_allclose(
        standardize(matrix, model)[:, 0], [-1.2247449, 0.0, 1.2247449], atol=1e-6
    )
    # constant column: scale is floored instead of dividing by zero
    assert np.all(np.isfinite(standardize(matrix, model)))


def test_components_are_orthonormal_and_ordered(rng: np.random.Generator) -> None:
    matrix = rng.standard_normal((50, 8)) @ rng.standard_normal((8, 8))
    model = fit_feature_model(matrix, 5)

    np.testing.assert_allclose(model.components @ model.components.T, np.eye(5), atol=1e-9)
    assert np.all(np.diff(model.explained_variance) <= 0)
    assert model.status is FeatureStatus.OK

    lead = np.argmax(np.abs(model.components), axis=1)
    assert np.all(model.components[np.arange(5), lead] > 0)


def test_eigenvalues_match_independent_oracle(rng: np.random.Generator) -> None:
    matrix = rng.standard_normal((30, 6)) * np.array([1.0, 2.0, 0.5, 3.0, 1.0, 0.1])
    model = fit_feature_model(matrix, 6)

    z = (matrix - matrix.mean(axis=0)) / matrix.std(axis=0)
    oracle = np.sort(np.linalg.eigvalsh(np.cov(z, rowvar=False, bias=True)))[::-1]

    np.testing.assert_allclose(model.explained_variance, oracle, atol=1e-8)
    assert model.total_variance == pytest.approx(6.0)


def test_more_components_than_width(rng: np.random.Generator) -> None:
    model = fit_feature_model(rng.standard_normal((40, 3)), 10)

    assert model.n_components == 3
    assert model.status is FeatureStatus.RANK_DEFICIENT


def test_preconditions(rng: np.random.Generator) -> None:
    with pytest.raises(FeatureError):
        fit_feature_model(rng.standard_normal((5, 10)), 5)
    with pytest.raises(FeatureError):
        fit_feature_model(rng.standard_normal((5, 10)), 0)


def test_transform_projects_standardized_beats(rng: np.random.Generator) -> None:
    train = beat_matrix(rng.standard_normal((40, 12)), "alice")
    model = fit_feature_model([train], 4)
    probe = beat_matrix(rng.standard_normal((6, 12)), "bob", SessionId.S2)

    features = transform(probe, model)
    expected = ((probe.beats - model.feature_mean) / model.feature_scale) @ model.components.T

    np.testing.assert_allclose(features.values, expected)
    assert features.subjects == ("bob",) * 6
    assert all(v.session is SessionId.S2 for v in features)

    with pytest.raises(FeatureError, match="width"):
        transform(beat_matrix(rng.standard_normal((3, 11))), model)


def test_full_basis_reconstructs(rng: np.random.Generator) -> None:
    train = rng.standard_normal((40, 5))
    model = fit_feature_model(train, 5)
    beats = beat_matrix(train)

    values = transform(beats, model).values
    np.testing.assert_allclose(reconstruct(values, model), standardize(train, model), atol=1e-9)


def test_model_and_feature_files(tmp_path: Path, rng: np.random.Generator) -> None:
    train = beat_matrix(rng.standard_normal((20, 6)), "carol")
    model = fit_feature_model(train, 3)

    write_feature_model(tmp_path / "model.txt", model)
    loaded = read_feature_model(tmp_path / "model.txt")
    np.testing.assert_array_equal(loaded.components, model.components)
    assert loaded.rank == model.rank

    features = transform(train, model)
    empty = features.take(np.array([], dtype=np.int64))
    write_features(tmp_path / "carol_S1.features", features, empty)
    read_train, read_test = read_features(tmp_path / "carol_S1.features")

    np.testing.assert_array_equal(read_train.values, features.values)
    assert read_test.values.shape == (0, 3)
    assert read_train.subjects[0] == "carol"
