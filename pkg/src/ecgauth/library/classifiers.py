from __future__ import annotations

from typing import Any, Dict, Optional, Sequence

import math
import logging
from pathlib import Path
from dataclasses import replace

import numpy as np
from scipy.special import expit
from sklearn.svm import SVC
from sklearn.metrics import balanced_accuracy_score
from scipy.spatial.distance import cdist
from sklearn.model_selection import StratifiedKFold

from ecgauth import config
from ecgauth.utils.errors import CorpusError, FeatureError, ConvergenceError
from ecgauth.utils.models import (
    Params,
    Payload,
    BoolArray,
    AuthModel,
    CvReport,
    ModelKind,
    ScoreSet,
    FloatArray,
    HyperGrid,
    KnnPayload,
    SvmPayload,
    CvCandidate,
    LabeledSet,
    FeatureVector,
    LogisticPayload,
)
from ecgauth.library.utils import read_labeled, write_labeled, format_float
from ecgauth.library.evaluation import compute_eer
from ecgauth.library.validation import validate_count, validate_positive

logger = logging.getLogger(__name__)

KKT_ROUNDING = 1e-6

# Score at or above which a vector counts as genuine during model selection
DECISION_CUTS: Dict[ModelKind, float] = {
    ModelKind.SVM_RBF: 0.0,
    ModelKind.LOGISTIC: 0.5,
    ModelKind.KNN: 0.5,
}


# Kernel SVM


def rbf_kernel(a: FloatArray, b: FloatArray, gamma: float) -> FloatArray:
    return np.exp(-gamma * cdist(a, b, "sqeuclidean"))


def kkt_residual(
    x: FloatArray,
    signs: FloatArray,
    alpha: FloatArray,
    box: FloatArray,
    gamma: float,
) -> float:
    """
    Maximal KKT violation of an SVM dual solution.

    With ``g_i = y_i - sum_j alpha_j y_j K_ij`` this is
    ``max(g_i over I_up) - min(g_i over I_low)`` (clipped at 0), where
    ``I_up`` holds the indices whose ``y_i alpha_i`` may still grow and
    ``I_low`` those whose ``y_i alpha_i`` may still shrink.

    Args:
        x (FloatArray): Training vectors.
        signs (FloatArray): Labels in {-1, +1}.
        alpha (FloatArray): Dual variables of every training vector.
        box (FloatArray): Per-sample upper bounds.
        gamma (float): RBF width.

    Returns:
        float: The violation; 0 for an exact optimum.
    """
    support = np.flatnonzero(alpha > 0)
    decision = np.zeros(signs.size)
    if support.size:
        decision = rbf_kernel(x, x[support], gamma) @ (alpha[support] * signs[support])
    g = signs - decision

    below = alpha < box * (1 - 1e-12)
    above = alpha > 0
    up = ((signs > 0) & below) | ((signs < 0) & above)
    low = ((signs > 0) & above) | ((signs < 0) & below)

    if not up.any() or not low.any():
        return 0.0

    return max(0.0, float(g[up].max() - g[low].min()))


def _fit_svm(
    x: FloatArray,
    labels: BoolArray,
    C: float,
    gamma: float,
    tol: float = config.SVM_TOL,
    max_iter: int = config.SVM_MAX_ITER,
) -> SvmPayload:
    signs = np.where(labels, 1.0, -1.0)

    machine = SVC(
        C=C,
        kernel="rbf",
        gamma=gamma,
        tol=tol,
        max_iter=max_iter,
        class_weight="balanced",
        cache_size=config.SVM_CACHE_MB,
    )
    machine.fit(x, signs)

    n = labels.size
    n_pos = int(labels.sum())
    weights = np.where(labels, n / (2.0 * n_pos), n / (2.0 * (n - n_pos)))
    box = C * weights

    support = np.asarray(machine.support_, dtype=np.int64)
    alpha_y = np.asarray(machine.dual_coef_, dtype=np.float64).reshape(-1)
    alpha = np.zeros(n)
    alpha[support] = np.abs(alpha_y)

    residual = kkt_residual(x, signs, alpha, box, gamma)
    n_iter = int(np.max(machine.n_iter_))

    if n_iter >= max_iter:
        raise ConvergenceError(f"SMO stopped after {n_iter} iterations", residual)
    # recomputed gradients differ from libsvm's incremental ones by rounding only
    if residual > tol + KKT_ROUNDING:
        raise ConvergenceError(
            f"KKT residual {residual:.3g} exceeds the tolerance {tol:g}", residual
        )

    return SvmPayload(
        support_vectors=x[support],
        alpha_y=alpha_y,
        support_indices=support,
        bias=float(machine.intercept_[0]),
        gamma=gamma,
        C=C,
        box=box[support],
        kkt_residual=residual,
        n_iter=n_iter,
    )


def train_svm(
    data: LabeledSet,
    C: float,
    gamma: float,
    tol: float = config.SVM_TOL,
    max_iter: int = config.SVM_MAX_ITER,
) -> SvmPayload:
    """
    Train a class-weighted soft-margin RBF SVM by sequential minimal optimization.

    The box bound of every sample is ``C * n / (2 n_class)``, so both classes
    weigh equally however unbalanced they are.

    Args:
        data (LabeledSet): Vectors labelled against the target user.
        C (float): Soft-margin penalty.
        gamma (float): RBF width, ``K(a, b) = exp(-gamma |a - b|^2)``.
        tol (float): KKT tolerance.
        max_iter (int): Iteration cap.

    Returns:
        SvmPayload: Support vectors, ``alpha_i y_i``, bias and the KKT residual
            recomputed from the duals.

    Raises:
        ValueError: If ``C`` or ``gamma`` is not positive.
        ConvergenceError: If the iteration cap is reached or the KKT residual
            exceeds ``tol``.
    """
    validate_positive(C, "C")
    validate_positive(gamma, "gamma")
    return _fit_svm(data.features.values, data.labels, C, gamma, tol, max_iter)


def svm_dual_objective(payload: SvmPayload) -> float:
    """``sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`` at the stored duals."""
    kernel = rbf_kernel(payload.support_vectors, payload.support_vectors, payload.gamma)
    return float(
        np.abs(payload.alpha_y).sum() - 0.5 * payload.alpha_y @ kernel @ payload.alpha_y
    )


# Logistic regression


def logistic_loss(
    theta: FloatArray,
    x: FloatArray,
    labels: FloatArray,
    weights: FloatArray,
    l2: float,
) -> tuple[float, FloatArray]:
    """
    Class-weighted mean negative log-likelihood plus ``l2 / 2 |w|^2``.

    Args:
        theta (FloatArray): Weights followed by the bias.
        x (FloatArray): Training vectors.
        labels (FloatArray): Targets in {0, 1}.
        weights (FloatArray): Per-sample weights.
        l2 (float): Ridge penalty; the bias is not penalised.

    Returns:
        tuple[float, FloatArray]: Loss and its gradient with respect to theta.
    """
    w, b = theta[:-1], theta[-1]
    z = x @ w + b
    n = labels.size

    loss = float(np.sum(weights * (np.logaddexp(0.0, z) - labels * z)) / n)
    loss += 0.5 * l2 * float(w @ w)

    residual = weights * (expit(z) - labels) / n
    gradient = np.append(x.T @ residual + l2 * w, residual.sum())

    return loss, gradient


def _fit_logistic(
    x: FloatArray,
    labels: BoolArray,
    l2: float,
    tol: float = config.LOGISTIC_TOL,
    max_iter: int = config.LOGISTIC_MAX_ITER,
) -> LogisticPayload:
    y = labels.astype(np.float64)
    n, d = x.shape
    n_pos = float(y.sum())
    weights = np.where(labels, n / (2.0 * n_pos), n / (2.0 * (n - n_pos)))

    # Diagonal (Jacobi) bound of the Hessian, used to scale the descent direction
    curvature = 0.25 * (weights @ (x * x)) / n + l2
    scaling = 1.0 / np.append(np.maximum(curvature, 1e-12), 0.25 * weights.mean())

    theta = np.zeros(d + 1)
    loss, gradient = logistic_loss(theta, x, y, weights, l2)
    if not math.isfinite(loss):
        raise ConvergenceError("logistic loss is not finite", math.inf)

    history = [loss]
    step = 1.0
    converged = False
    iteration = 0

    for iteration in range(1, max_iter + 1):
        grad_norm = float(np.linalg.norm(gradient))
        if grad_norm <= tol:
            converged = True
            break

        direction = -scaling * gradient
        slope = float(gradient @ direction)

        while True:
            candidate = theta + step * direction
            new_loss, new_gradient = logistic_loss(candidate, x, y, weights, l2)

            if not math.isfinite(new_loss):
                step /= 2
            elif new_loss <= loss + config.ARMIJO_C * step * slope:
                break
            elif new_loss <= loss and -step * slope < 1e-15 * max(abs(loss), 1.0):
                # Decrease below the resolution of the loss
                break
            else:
                step /= 2

            if step < 1e-20:
                raise ConvergenceError("logistic line search diverged", grad_norm)

        theta, loss, gradient = candidate, new_loss, new_gradient
        history.append(loss)
        step = min(step * 2, 1e6)

    grad_norm = float(np.linalg.norm(gradient))
    if not converged:
        converged = grad_norm <= tol
    if not converged:
        logger.warning(
            "Logistic regression stopped after %d iterations with gradient norm %.3e",
            iteration,
            grad_norm,
        )

    return LogisticPayload(
        weights=theta[:-1].copy(),
        bias=float(theta[-1]),
        l2=l2,
        grad_norm=grad_norm,
        n_iter=iteration,
        converged=converged,
        loss_history=np.asarray(history),
    )


def train_logistic(
    data: LabeledSet,
    l2: float,
    tol: float = config.LOGISTIC_TOL,
    max_iter: int = config.LOGISTIC_MAX_ITER,
) -> LogisticPayload:
    """
    Fit class-weighted L2-regularised logistic regression.

    Full-batch gradient descent, with the gradient scaled per coordinate by a
    fixed diagonal curvature bound and Armijo backtracking on the step. Every
    accepted step lowers (or keeps) the loss.

    Args:
        data (LabeledSet): Vectors labelled against the target user.
        l2 (float): Ridge penalty, ``>= 0``.

    Returns:
        LogisticPayload: Weights, bias, final gradient norm and loss history.

    Raises:
        ValueError: If ``l2`` is negative.
        ConvergenceError: If the loss becomes non-finite.
    """
    if l2 < 0:
        raise ValueError(f"l2 must be non-negative, got {l2}")
    return _fit_logistic(data.features.values, data.labels, l2, tol, max_iter)


# k nearest neighbours


def train_knn(data: LabeledSet, k: int) -> KnnPayload:
    """
    Store the training vectors for k-nearest-neighbour scoring.

    Raises:
        ValueError: If ``k`` is not in ``[1, len(data)]``.
    """
    k = validate_count(k, "k")
    if k > len(data):
        raise ValueError(f"k={k} exceeds the {len(data)} training vectors")
    return KnnPayload(data.features.values.copy(), data.labels.copy(), k)


# Scoring


def score_payload(payload: Payload, x: FloatArray) -> FloatArray:
    """Scores of the rows of ``x``; higher means more likely genuine."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))

    if isinstance(payload, SvmPayload):
        if payload.alpha_y.size == 0:
            return np.full(x.shape[0], payload.bias)
        kernel = rbf_kernel(x, payload.support_vectors, payload.gamma)
        return np.asarray(kernel @ payload.alpha_y + payload.bias)

    if isinstance(payload, LogisticPayload):
        return np.asarray(expit(x @ payload.weights + payload.bias))

    distances = cdist(x, payload.vectors)
    nearest = np.argsort(distances, axis=1, kind="stable")[:, : payload.k]
    return np.asarray(payload.labels[nearest].mean(axis=1), dtype=np.float64)


def score_many(model: AuthModel, x: FloatArray) -> FloatArray:
    """
    Score every row of ``x`` against ``model``.

    Raises:
        FeatureError: If the vector dimension differs from the model's.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.dimension:
        raise FeatureError(
            f"vector dimension {x.shape[1]} does not match model dimension "
            f"{model.dimension}"
        )
    return score_payload(model.payload, x)


def score(model: AuthModel, vector: FeatureVector) -> float:
    """Score one feature vector; higher means more likely genuine."""
    return float(score_many(model, vector.values.reshape(1, -1))[0])


# Model selection


def fit_payload(
    kind: ModelKind, x: FloatArray, labels: BoolArray, params: Params
) -> Payload:
    """Train ``kind`` on raw arrays with one hyperparameter setting."""
    if kind is ModelKind.SVM_RBF:
        return _fit_svm(x, labels, params["C"], params["gamma"])
    if kind is ModelKind.LOGISTIC:
        return _fit_logistic(x, labels, params["l2"])

    k = int(params["k"])
    if not 1 <= k <= labels.size:
        raise ValueError(f"k={k} exceeds the {labels.size} training vectors")
    return KnnPayload(x.copy(), labels.copy(), k)


def stratified_folds(
    labels: BoolArray, folds: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Seeded stratified partition into ``folds`` (train, validation) index pairs.

    Raises:
        ValueError: If a class has fewer members than folds.
    """
    smallest = int(min(labels.sum(), labels.size - labels.sum()))
    if smallest < folds:
        raise ValueError(
            f"cannot stratify {folds} folds: the smaller class has {smallest} vectors"
        )

    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return list(splitter.split(np.zeros((labels.size, 1)), labels))


def cross_validate(
    data: LabeledSet,
    grid: HyperGrid,
    kind: ModelKind,
    seed: int = config.SEED,
) -> tuple[Params, CvReport]:
    """
    Pick hyperparameters by stratified k-fold balanced accuracy.

    Candidates are tried from the simplest model up and a later one only wins
    by scoring strictly higher, so ties go to the simpler model. Candidates
    whose training fails to converge score as the worst possible.

    Args:
        data (LabeledSet): Training vectors of the target user and impostors.
        grid (HyperGrid): Candidate values and fold count.
        kind (ModelKind): Classifier family.
        seed (int): Seed of the fold shuffle.

    Returns:
        tuple[Params, CvReport]: The chosen setting and every candidate's
            per-fold scores.

    Raises:
        ValueError: If the folds cannot be stratified.
        ConvergenceError: If no candidate could be trained.
    """
    x, labels = data.features.values, data.labels
    folds = stratified_folds(labels, grid.folds, seed)
    cut = DECISION_CUTS[kind]

    candidates: list[CvCandidate] = []
    best: Optional[Params] = None
    best_score = -math.inf

    for params in grid.candidates(kind):
        fold_scores: list[float] = []

        for train_idx, valid_idx in folds:
            try:
                payload = fit_payload(kind, x[train_idx], labels[train_idx], params)
            except (ConvergenceError, ValueError) as error:
                logger.warning("%s %s failed on a fold: %s", kind, params, error)
                fold_scores.append(math.nan)
                continue

            predicted = score_payload(payload, x[valid_idx]) >= cut
            fold_scores.append(
                float(balanced_accuracy_score(labels[valid_idx], predicted))
            )

        candidate = CvCandidate(dict(params), tuple(fold_scores))
        candidates.append(candidate)

        mean = candidate.mean_score
        if math.isfinite(mean) and mean > best_score:
            best, best_score = dict(params), mean

    if best is None:
        raise ConvergenceError(
            f"no {kind} candidate could be trained for {data.target}", math.inf
        )

    return best, CvReport(kind, grid.folds, seed, tuple(candidates), best)


def fit_threshold(train_scores: ScoreSet) -> float:
    """
    Decision threshold at the equal-error point of the training scores.

    Raises:
        ValueError: If either score list is empty.
    """
    return compute_eer(train_scores)[1]


def train_auth_model(
    data: LabeledSet,
    kind: ModelKind,
    grid: Optional[HyperGrid] = None,
    seed: int = config.SEED,
    params: Optional[Params] = None,
) -> AuthModel:
    """
    Train the authenticator of one target user.

    Hyperparameters are chosen by :func:`cross_validate` unless ``params`` is
    given. The final model is fit on all of ``data`` and its threshold set at
    the EER point of its own training scores.
    """
    grid = grid or HyperGrid()
    report: Optional[CvReport] = None

    if params is None:
        params, report = cross_validate(data, grid, kind, seed)

    x, labels = data.features.values, data.labels
    payload = fit_payload(kind, x, labels, params)

    train_scores = score_payload(payload, x)
    threshold = fit_threshold(ScoreSet(train_scores[labels], train_scores[~labels]))

    return AuthModel(data.target, kind, payload, threshold, dict(params), report)


# Serialization

_PAYLOAD_SCALARS = {
    ModelKind.SVM_RBF: ("bias", "gamma", "C", "kkt_residual", "n_iter"),
    ModelKind.LOGISTIC: ("bias", "l2", "grad_norm", "n_iter", "converged"),
    ModelKind.KNN: ("k",),
}
_PAYLOAD_BLOCKS = {
    ModelKind.SVM_RBF: ("support_vectors", "alpha_y", "support_indices", "box"),
    ModelKind.LOGISTIC: ("weights", "loss_history"),
    ModelKind.KNN: ("vectors", "labels"),
}


def _cv_columns(report: CvReport) -> list[str]:
    names = list(report.candidates[0].params) if report.candidates else []
    return names + ["mean"] + [f"fold{i}" for i in range(report.folds)]


def write_auth_model(path: Path, model: AuthModel) -> None:
    """Store a model, its payload and its CV report as labelled text."""
    meta: Dict[str, Any] = {
        "target": model.target,
        "kind": model.kind,
        "decision_threshold": format_float(model.decision_threshold),
    }
    for name, value in model.hyperparameters.items():
        meta[f"param.{name}"] = format_float(value)
    for name in _PAYLOAD_SCALARS[model.kind]:
        value = getattr(model.payload, name)
        meta[f"payload.{name}"] = value if isinstance(value, (bool, int)) else format_float(value)

    blocks: Dict[str, np.ndarray] = {
        name: np.asarray(getattr(model.payload, name), dtype=np.float64)
        for name in _PAYLOAD_BLOCKS[model.kind]
    }

    report = model.cv_report
    if report is not None:
        meta["cv.seed"] = report.seed
        meta["cv.folds"] = report.folds
        meta["cv.columns"] = ",".join(_cv_columns(report))
        blocks["cv_report"] = np.array(
            [
                [*c.params.values(), c.mean_score, *c.fold_scores]
                for c in report.candidates
            ],
            dtype=np.float64,
        )

    write_labeled(path, meta, blocks)


def _read_report(
    meta: Dict[str, str], blocks: Dict[str, np.ndarray], kind: ModelKind, chosen: Params
) -> Optional[CvReport]:
    if "cv_report" not in blocks:
        return None

    columns = meta["cv.columns"].split(",")
    n_params = columns.index("mean")
    candidates = tuple(
        CvCandidate(
            dict(zip(columns[:n_params], (float(v) for v in row[:n_params]))),
            tuple(float(v) for v in row[n_params + 1 :]),
        )
        for row in blocks["cv_report"]
    )
    return CvReport(kind, int(meta["cv.folds"]), int(meta["cv.seed"]), candidates, chosen)


def read_auth_model(path: Path) -> AuthModel:
    """
    Load a model written by :func:`write_auth_model`.

    Raises:
        CorpusError: If the file is missing fields or blocks.
    """
    meta, blocks = read_labeled(path)

    try:
        kind = ModelKind(meta["kind"])
        scalars = {name: meta[f"payload.{name}"] for name in _PAYLOAD_SCALARS[kind]}
        arrays = {name: blocks[name] for name in _PAYLOAD_BLOCKS[kind]}

        payload: Payload
        if kind is ModelKind.SVM_RBF:
            support_vectors = arrays["support_vectors"]
            payload = SvmPayload(
                support_vectors=support_vectors,
                alpha_y=arrays["alpha_y"].reshape(-1),
                support_indices=arrays["support_indices"].reshape(-1).astype(np.int64),
                bias=float(scalars["bias"]),
                gamma=float(scalars["gamma"]),
                C=float(scalars["C"]),
                box=arrays["box"].reshape(-1),
                kkt_residual=float(scalars["kkt_residual"]),
                n_iter=int(scalars["n_iter"]),
            )
        elif kind is ModelKind.LOGISTIC:
            payload = LogisticPayload(
                weights=arrays["weights"].reshape(-1),
                bias=float(scalars["bias"]),
                l2=float(scalars["l2"]),
                grad_norm=float(scalars["grad_norm"]),
                n_iter=int(scalars["n_iter"]),
                converged=scalars["converged"] == "True",
                loss_history=arrays["loss_history"].reshape(-1),
            )
        else:
            payload = KnnPayload(
                vectors=arrays["vectors"],
                labels=arrays["labels"].reshape(-1).astype(bool),
                k=int(scalars["k"]),
            )

        params = {
            key.removeprefix("param."): float(value)
            for key, value in meta.items()
            if key.startswith("param.")
        }

        return AuthModel(
            target=meta["target"],
            kind=kind,
            payload=payload,
            decision_threshold=float(meta["decision_threshold"]),
            hyperparameters=params,
            cv_report=_read_report(meta, blocks, kind, params),
        )

    except (KeyError, ValueError) as error:
        raise CorpusError(f"malformed model file ({error})", path) from None


def parse_grid_overrides(
    overrides: Sequence[str], base: Optional[HyperGrid] = None
) -> HyperGrid:
    """
    Apply ``name=v1,v2`` overrides such as ``svm_c=1,10`` to a grid.

    Raises:
        ValueError: For an unknown name or a malformed value list.
    """
    grid = base or HyperGrid()
    changes: Dict[str, Any] = {}

    for override in overrides:
        name, sep, values = override.partition("=")
        name = name.strip()
        if not sep or name not in ("svm_c", "svm_gamma", "knn_k", "logistic_l2", "folds"):
            raise ValueError(f"Invalid grid override {override!r}")

        tokens = [token.strip() for token in values.split(",") if token.strip()]
        if name == "folds":
            changes[name] = validate_count(values.strip(), "folds", minimum=2)
        elif name == "knn_k":
            changes[name] = tuple(validate_count(token, "knn_k") for token in tokens)
        else:
            changes[name] = tuple(float(token) for token in tokens)

    return replace(grid, **changes)
