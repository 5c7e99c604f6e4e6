from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from conftest import feature_set
from scipy.optimize import minimize

from ecgauth.library import classifiers
from ecgauth.utils.errors import FeatureError, ConvergenceError
from ecgauth.utils.models import (
    ScoreSet,
    ModelKind,
    SessionId,
    HyperGrid,
    FeatureSet,
    LabeledSet,
    LogisticPayload,
)
from ecgauth.library.evaluation import compute_eer
from ecgauth.library.classifiers import (
    score,
    train_svm,
    train_knn,
    rbf_kernel,
    score_many,
    logistic_loss,
    score_payload,
    cross_validate,
    train_logistic,
    read_auth_model,
    stratified_folds,
    train_auth_model,
    write_auth_model,
    svm_dual_objective,
    parse_grid_overrides,
)


def _labeled(points: list[list[float]], subjects: list[str], target: str = "alice") -> LabeledSet:
    values = np.array(points, dtype=np.float64)
    return LabeledSet(
        FeatureSet(values, tuple(subjects), (SessionId.S1,) * len(subjects)), target
    )


def _dual_oracle(x: np.ndarray, y: np.ndarray, box: np.ndarray, gamma: float) -> float:
    q = (y[:, None] * y[None, :]) * rbf_kernel(x, x, gamma)
    result = minimize(
        lambda a: 0.5 * a @ q @ a - a.sum(),
        np.zeros(y.size),
        jac=lambda a: q @ a - 1.0,
        bounds=[(0.0, b) for b in box],
        constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 1000},
    )
    return float(-result.fun)


def test_labeled_set_needs_both_classes() -> None:
    with pytest.raises(ValueError, match="genuine"):
        _labeled([[0.0], [1.0]], ["bob", "carol"])
    with pytest.raises(ValueError):
        _labeled([[0.0], [1.0]], ["alice", "alice"])


def test_knn_exact_match_and_full_neighbourhood() -> None:
    data = _labeled(
        [[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.0, 5.1], [9.0, 0.0]],
        ["alice", "alice", "bob", "bob", "carol"],
    )

    nearest = train_knn(data, 1)
    assert score_payload(nearest, np.array([[0.1, 0.0]]))[0] == 1.0
    assert score_payload(nearest, np.array([[5.0, 5.1]]))[0] == 0.0

    everyone = train_knn(data, len(data))
    np.testing.assert_allclose(score_payload(everyone, np.array([[3.0, 3.0], [-7.0, 2.0]])), 0.4)

    with pytest.raises(ValueError):
        train_knn(data, 6)


def test_knn_ties_go_to_the_lower_index() -> None:
    data = _labeled([[1.0, 0.0], [-1.0, 0.0]], ["alice", "bob"])
    assert score_payload(train_knn(data, 1), np.array([[0.0, 0.0]]))[0] == 1.0

    data = _labeled([[-1.0, 0.0], [1.0, 0.0]], ["bob", "alice"])
    assert score_payload(train_knn(data, 1), np.array([[0.0, 0.0]]))[0] == 0.0


def test_logistic_zero_weights_score_half() -> None:
    payload = LogisticPayload(np.zeros(3), 0.0, 0.1, 0.0, 0, True, np.zeros(1))
    np.testing.assert_allclose(score_payload(payload, np.ones((2, 3))), 0.5)


def test_logistic_gradient_matches_finite_differences(rng: np.random.Generator) -> None:
    x = rng.standard_normal((20, 4))
    labels = (rng.random(20) < 0.3).astype(np.float64)
    weights = np.where(labels > 0, 2.0, 0.7)
    theta = rng.standard_normal(5)

    _, gradient = logistic_loss(theta, x, labels, weights, 0.1)

    step = 1e-6
    numeric = np.array(
        [
            (
                logistic_loss(theta + step * e, x, labels, weights, 0.1)[0]
                - logistic_loss(theta - step * e, x, labels, weights, 0.1)[0]
            )
            / (2 * step)
            for e in np.eye(5)
        ]
    )
    np.testing.assert_allclose(gradient, numeric, rtol=1e-5, atol=1e-9)


def test_logistic_symmetric_pair_has_zero_bias() -> None:
    payload = train_logistic(_labeled([[1.0], [-1.0]], ["alice", "bob"]), 0.1)

    assert payload.converged
    assert payload.grad_norm <= 1e-6
    assert payload.bias == pytest.approx(0.0, abs=1e-5)
    assert payload.weights[0] > 0
    assert np.all(np.diff(payload.loss_history) <= 0)


def test_logistic_rejects_negative_penalty() -> None:
    with pytest.raises(ValueError):
        train_logistic(_labeled([[1.0], [-1.0]], ["alice", "bob"]), -0.1)


def test_svm_two_points_are_both_support_vectors() -> None:
    payload = train_svm(_labeled([[1.0, 0.0], [-1.0, 0.0]], ["alice", "bob"]), 1.0, 0.5)

    assert sorted(payload.support_indices.tolist()) == [0, 1]
    scores = score_payload(payload, np.array([[1.0, 0.0], [-1.0, 0.0]]))
    assert scores[0] > 0 > scores[1]


def test_svm_dual_matches_qp_oracle() -> None:
    points = [[0.0, 0.0], [1.0, 0.2], [0.3, 1.1], [1.2, 1.0], [2.0, 1.5], [1.5, 2.2]]
    subjects = ["alice", "alice", "alice", "bob", "bob", "bob"]
    data = _labeled(points, subjects)

    payload = train_svm(data, 1.0, 0.5, tol=1e-6)
    box = np.full(6, 1.0)
    oracle = _dual_oracle(data.features.values, data.signs, box, 0.5)

    assert svm_dual_objective(payload) == pytest.approx(oracle, abs=1e-4)
    assert payload.kkt_residual < 1e-4


def test_svm_box_follows_class_weights(rng: np.random.Generator) -> None:
    data = _labeled(
        rng.standard_normal((6, 2)).tolist(),
        ["alice", "alice", "bob", "bob", "carol", "carol"],
    )
    payload = train_svm(data, 2.0, 1.0)

    expected = np.where(data.labels, 2.0 * 6 / 4, 2.0 * 6 / 8)
    np.testing.assert_allclose(payload.box, expected[payload.support_indices])
    assert np.all(np.abs(payload.alpha_y) <= payload.box * (1 + 1e-9))


def test_svm_duplicate_points_halve_the_box() -> None:
    single = _labeled([[1.0], [-1.0]], ["alice", "bob"])
    double = _labeled([[1.0], [1.0], [-1.0], [-1.0]], ["alice", "alice", "bob", "bob"])

    a = train_svm(single, 0.2, 0.5, tol=1e-8)
    b = train_svm(double, 0.1, 0.5, tol=1e-8)

    probe = np.linspace(-2, 2, 9)[:, None]
    np.testing.assert_allclose(score_payload(a, probe), score_payload(b, probe), atol=1e-5)


def test_trained_svm_meets_kkt_tolerance(rng: np.random.Generator) -> None:
    users = ["alice", "bob", "carol", "dave"]
    data = LabeledSet(feature_set(rng, users, 30, spread=1.5), "alice")

    for C, gamma in [(0.1, 0.01), (10.0, 0.1), (100.0, 1.0)]:
        payload = train_svm(data, C, gamma)
        assert payload.kkt_residual <= 1e-3 + 1e-6


def test_svm_residual_above_tolerance_raises(
    rng: np.random.Generator, monkeypatch: pytest.MonkeyPatch
) -> None:
    data = LabeledSet(feature_set(rng, ["alice", "bob"], 10), "alice")
    monkeypatch.setattr(classifiers, "kkt_residual", lambda *args: 0.5)

    with pytest.raises(ConvergenceError, match="KKT residual") as info:
        train_svm(data, 1.0, 0.5)
    assert info.value.residual == 0.5


def test_scoring_checks_dimension(rng: np.random.Generator) -> None:
    data = LabeledSet(feature_set(rng, ["alice", "bob"], 10), "alice")
    model = train_auth_model(data, ModelKind.KNN, params={"k": 1.0})

    with pytest.raises(FeatureError, match="dimension"):
        score_many(model, np.zeros((2, 3)))
    assert score(model, next(iter(data.features))) == 1.0


def test_stratified_folds_validate_each_point_once() -> None:
    labels = np.array([True] * 5 + [False] * 15)
    folds = stratified_folds(labels, 5, seed=0)

    validated = np.concatenate([valid for _, valid in folds])
    assert sorted(validated.tolist()) == list(range(20))
    for train, valid in folds:
        assert labels[valid].sum() == 1
        assert np.intersect1d(train, valid).size == 0

    again = stratified_folds(labels, 5, seed=0)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))

    with pytest.raises(ValueError, match="smaller class"):
        stratified_folds(labels, 6, seed=0)


def test_singleton_grid_picks_its_candidate(rng: np.random.Generator) -> None:
    data = LabeledSet(feature_set(rng, ["alice", "bob", "carol"], 10), "alice")
    grid = HyperGrid(svm_c=(10.0,), svm_gamma=(0.1,))

    params, report = cross_validate(data, grid, ModelKind.SVM_RBF, seed=3)

    assert params == {"C": 10.0, "gamma": 0.1}
    assert len(report.candidates) == 1
    assert len(report.candidates[0].fold_scores) == grid.folds


def test_ties_go_to_the_simpler_model(rng: np.random.Generator) -> None:
    data = LabeledSet(feature_set(rng, ["alice", "bob"], 15, spread=0.1), "alice")
    grid = HyperGrid(knn_k=(1, 3))

    params, report = cross_validate(data, grid, ModelKind.KNN, seed=0)

    assert [c.mean_score for c in report.candidates] == [1.0, 1.0]
    assert params == {"k": 3.0}


def test_threshold_sits_at_training_equal_error(rng: np.random.Generator) -> None:
    data = LabeledSet(feature_set(rng, ["alice", "bob", "carol"], 12), "alice")
    model = train_auth_model(
        data, ModelKind.LOGISTIC, HyperGrid(logistic_l2=(0.01, 0.1)), seed=1
    )

    train_scores = score_many(model, data.features.values)
    scores = ScoreSet(train_scores[data.labels], train_scores[~data.labels])
    assert model.decision_threshold == compute_eer(scores)[1]
    assert model.cv_report is not None
    assert model.hyperparameters["l2"] in (0.01, 0.1)


def test_model_file(tmp_path: Path, rng: np.random.Generator) -> None:
    data = LabeledSet(feature_set(rng, ["alice", "bob", "carol"], 10), "bob")
    model = train_auth_model(data, ModelKind.SVM_RBF, HyperGrid(svm_c=(1.0,), svm_gamma=(0.1, 1.0)))

    path = tmp_path / "bob_svm.model"
    write_auth_model(path, model)
    loaded = read_auth_model(path)

    probe = rng.standard_normal((5, 4))
    np.testing.assert_array_equal(score_many(loaded, probe), score_many(model, probe))
    assert loaded.decision_threshold == model.decision_threshold
    assert loaded.hyperparameters == model.hyperparameters
    assert loaded.cv_report is not None
    assert len(loaded.cv_report.candidates) == 2


def test_grid_overrides() -> None:
    grid = parse_grid_overrides(["svm_c=1,10", "knn_k=3", "folds=3"])

    assert grid.svm_c == (1.0, 10.0)
    assert grid.knn_k == (3,)
    assert grid.folds == 3
    assert grid.svm_gamma == HyperGrid().svm_gamma

    with pytest.raises(ValueError):
        parse_grid_overrides(["svm_degree=3"])
