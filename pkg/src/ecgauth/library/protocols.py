from __future__ import annotations

from typing import Dict, TypeVar, Callable, Hashable, Iterable, Mapping, Optional

import logging
from pathlib import Path
from functools import partial
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np

from ecgauth.utils.errors import ProtocolViolation
from ecgauth.utils.models import (
    Params,
    Protocol,
    ScoreSet,
    SessionId,
    Condition,
    EvalEntry,
    FeatureSet,
    EvalConfig,
    EvalReport,
    LabeledSet,
    SessionBeats,
    FeatureModel,
    ConditionData,
)
from ecgauth.library.cache import Cache
from ecgauth.library.utils import progress, format_float, thread_count
from ecgauth.library.features import transform, fit_feature_model
from ecgauth.library.evaluation import compute_eer, far_frr_curve, compute_hter
from ecgauth.library.classifiers import score_many, cross_validate, train_auth_model

K = TypeVar("K", bound=Hashable)
V = TypeVar("V")

logger = logging.getLogger(__name__)

SessionMap = Mapping[tuple[str, SessionId], SessionBeats]


def prepare_condition(
    sessions: SessionMap,
    condition: Condition,
    k: int,
    cache: Optional[Cache] = None,
) -> tuple[FeatureModel, ConditionData]:
    """
    Build the feature vectors of one session condition.

    The feature model is fit on the training partitions of the training
    session only, pooled over every user, then applied to those partitions
    and to the test partitions of the test session.

    Args:
        sessions (SessionMap): Segmented beats per (subject, session).
        condition (Condition): Training and test sessions.
        k (int): Number of principal components.
        cache (Optional[Cache]): Shares the feature model between conditions
            with the same training session.

    Returns:
        tuple[FeatureModel, ConditionData]: The fitted model and the vectors.
            Users lacking beats in either partition are skipped with a warning.
    """
    subjects = sorted({subject for subject, _ in sessions})
    users: list[str] = []
    skipped: list[str] = []

    for subject in subjects:
        train = sessions.get((subject, condition.train))
        test = sessions.get((subject, condition.test))
        if (
            train is None
            or test is None
            or not (train.train.n_beats and test.test.n_beats)
        ):
            skipped.append(subject)
            continue
        users.append(subject)

    if skipped:
        logger.warning(
            "%s: skipping %d user(s) without data in both partitions: %s",
            condition,
            len(skipped),
            ", ".join(skipped),
        )

    train_beats = [sessions[(u, condition.train)].train for u in users]

    def fit() -> FeatureModel:
        return fit_feature_model(train_beats, k)

    key = ("feature_model", condition.train, k, tuple(users))
    model = cache.get_or_compute(key, fit) if cache is not None else fit()

    dimension = model.n_components
    train_set = FeatureSet.concat([transform(b, model) for b in train_beats], dimension)
    test_set = FeatureSet.concat(
        [transform(sessions[(u, condition.test)].test, model) for u in users],
        dimension,
    )

    return model, ConditionData(condition, train_set, test_set, tuple(skipped))


def assemble_condition(
    features: Mapping[tuple[str, SessionId], tuple[FeatureSet, FeatureSet]],
    condition: Condition,
    dimension: int,
) -> ConditionData:
    """
    Collect stored (train, test) vectors per (subject, session) into a condition.

    Users lacking vectors in the training partition of the training session
    or the test partition of the test session are skipped with a warning.
    """
    subjects = sorted({subject for subject, _ in features})
    train_parts: list[FeatureSet] = []
    test_parts: list[FeatureSet] = []
    skipped: list[str] = []

    for subject in subjects:
        train = features.get((subject, condition.train))
        test = features.get((subject, condition.test))
        if train is None or test is None or not (len(train[0]) and len(test[1])):
            skipped.append(subject)
            continue
        train_parts.append(train[0])
        test_parts.append(test[1])

    if skipped:
        logger.warning("%s: skipping %s", condition, ", ".join(skipped))

    return ConditionData(
        condition,
        FeatureSet.concat(train_parts, dimension),
        FeatureSet.concat(test_parts, dimension),
        tuple(skipped),
    )


def _selection_key(
    data: ConditionData, eval_config: EvalConfig, target: str
) -> Hashable:
    return (
        "selection",
        data.condition.train,
        eval_config.kind,
        eval_config.grid,
        eval_config.seed,
        tuple(data.users),
        target,
    )


def select_hyperparameters(
    data: ConditionData,
    target: str,
    eval_config: EvalConfig,
    cache: Optional[Cache] = None,
) -> Params:
    """Cross-validated hyperparameters of ``target`` on the full training set."""

    def select() -> Params:
        labeled = LabeledSet(data.train, target)
        params, _ = cross_validate(
            labeled, eval_config.grid, eval_config.kind, eval_config.seed
        )
        return params

    if cache is None:
        return select()
    return cache.get_or_compute(_selection_key(data, eval_config, target), select)


def _run_parallel(
    jobs: Mapping[K, Callable[[], V]], threads: int, desc: str
) -> Dict[K, V]:
    results: Dict[K, V] = {}

    with ThreadPoolExecutor(max_workers=thread_count(threads)) as pool:
        futures = {pool.submit(job): key for key, job in jobs.items()}
        for future in progress(as_completed(futures), total=len(futures), desc=desc):
            results[futures[future]] = future.result()

    return results


def _require_users(data: ConditionData, minimum: int) -> list[str]:
    users = data.users
    if len(users) < minimum:
        raise ValueError(
            f"{data.condition}: need at least {minimum} users with data, got {len(users)}"
        )
    return users


def _aggregate(
    protocol: Protocol,
    data: ConditionData,
    eval_config: EvalConfig,
    entries: Iterable[EvalEntry],
    per_user: Dict[str, float],
    scores: Iterable[ScoreSet],
    n_trainings: int,
    config_digest: str,
) -> EvalReport:
    ordered = sorted(per_user)
    values = np.array([per_user[user] for user in ordered])
    entry_list = sorted(entries, key=lambda e: (e.target, e.excluded_user or ""))
    hters = [e.hter for e in entry_list if e.hter is not None]

    return EvalReport(
        protocol=protocol,
        condition=data.condition,
        kind=eval_config.kind,
        metric="eer" if protocol is Protocol.A else "hter",
        entries=tuple(entry_list),
        per_user={user: per_user[user] for user in ordered},
        mean=float(values.mean()),
        std=float(values.std()),
        seed=eval_config.seed,
        config_digest=config_digest,
        skipped=data.skipped,
        n_trainings=n_trainings,
        mean_hter=float(np.mean(hters)) if hters else None,
        scores=tuple(sorted(scores, key=lambda s: s.target)),
    )


def run_protocol_a(
    data: ConditionData,
    eval_config: Optional[EvalConfig] = None,
    cache: Optional[Cache] = None,
    config_digest: str = "",
) -> EvalReport:
    """
    Evaluate with every user present in both training and test data.

    For each target user a model is trained on the training vectors of all
    users (target positive, everyone else negative) and scored on the test
    vectors: the target's as genuine, all others' as impostors. The entry
    holds the EER of those scores and the HTER at the model's own training
    threshold.

    Args:
        data (ConditionData): Vectors of one condition.
        eval_config (Optional[EvalConfig]): Classifier, grid, seed, threads.
        cache (Optional[Cache]): Shares hyperparameter selections.
        config_digest (str): Digest of the run configuration for the report.

    Returns:
        EvalReport: Per-user EERs with their mean and population std.

    Raises:
        ValueError: If fewer than two users have data.
    """
    eval_config = eval_config or EvalConfig()
    users = _require_users(data, 2)
    subjects = data.test.subject_array

    def evaluate(target: str) -> tuple[EvalEntry, ScoreSet]:
        params = select_hyperparameters(data, target, eval_config, cache)
        model = train_auth_model(
            LabeledSet(data.train, target),
            eval_config.kind,
            eval_config.grid,
            eval_config.seed,
            params,
        )

        values = score_many(model, data.test.values)
        genuine = subjects == target
        scores = ScoreSet(values[genuine], values[~genuine], target, data.condition)

        eer, threshold = compute_eer(scores)
        entry = EvalEntry(
            target,
            eer,
            threshold,
            scores.genuine.size,
            scores.impostor.size,
            None,
            compute_hter(scores, model.decision_threshold),
        )
        return entry, scores

    jobs = {user: partial(evaluate, user) for user in users}
    results = _run_parallel(jobs, eval_config.threads, f"protocol A {data.condition}")

    entries = [results[user][0] for user in users]
    report = _aggregate(
        Protocol.A,
        data,
        eval_config,
        entries,
        {entry.target: entry.value for entry in entries},
        [results[user][1] for user in users],
        len(users),
        config_digest,
    )

    logger.info(
        "Protocol A %s %s: mean EER %.4f (std %.4f) over %d users",
        data.condition,
        eval_config.kind,
        report.mean,
        report.std,
        len(users),
    )

    return report


def excluded_training_set(train: FeatureSet, excluded: str) -> FeatureSet:
    """
    Training vectors with every vector of ``excluded`` removed.

    Raises:
        ProtocolViolation: If a vector of ``excluded`` survives the removal.
    """
    reduced = train.without(excluded)
    if excluded in set(reduced.subjects):
        raise ProtocolViolation(f"training set still holds vectors of {excluded}")
    return reduced


def run_protocol_b(
    data: ConditionData,
    eval_config: Optional[EvalConfig] = None,
    cache: Optional[Cache] = None,
    config_digest: str = "",
) -> EvalReport:
    """
    Evaluate with the impostor left out of training.

    For each target ``u`` and every other user ``v`` a model is trained on
    the training vectors of everyone except ``v``; its threshold is fixed on
    its own training scores and the HTER is measured on ``u``'s test vectors
    (genuine) against ``v``'s (impostor). A user's value is the mean over
    ``v``. Hyperparameters come from the cross-validation on the full
    training set unless ``eval_config.reselect`` asks for a fresh selection
    on every reduced set.

    Args:
        data (ConditionData): Vectors of one condition.
        eval_config (Optional[EvalConfig]): Classifier, grid, seed, threads.
        cache (Optional[Cache]): Shares hyperparameter selections.
        config_digest (str): Digest of the run configuration for the report.

    Returns:
        EvalReport: One entry per (u, v) and per-user mean HTERs.

    Raises:
        ValueError: If fewer than three users have data.
        ProtocolViolation: If a training set contains the excluded user.
    """
    eval_config = eval_config or EvalConfig()
    users = _require_users(data, 3)
    subjects = data.test.subject_array

    selections: Dict[str, Params] = {}
    if not eval_config.reselect:
        selection_jobs = {
            user: partial(select_hyperparameters, data, user, eval_config, cache)
            for user in users
        }
        selections = _run_parallel(
            selection_jobs, eval_config.threads, "model selection"
        )

    def evaluate(target: str, excluded: str) -> tuple[EvalEntry, ScoreSet]:
        train = excluded_training_set(data.train, excluded)
        model = train_auth_model(
            LabeledSet(train, target),
            eval_config.kind,
            eval_config.grid,
            eval_config.seed,
            selections.get(target),
        )

        genuine = score_many(model, data.test.values[subjects == target])
        impostor = score_many(model, data.test.values[subjects == excluded])
        scores = ScoreSet(genuine, impostor, target, data.condition)

        hter = compute_hter(scores, model.decision_threshold)
        entry = EvalEntry(
            target,
            hter,
            model.decision_threshold,
            genuine.size,
            impostor.size,
            excluded,
            hter,
        )
        return entry, scores

    pairs = [(u, v) for u in users for v in users if v != u]
    jobs = {pair: partial(evaluate, *pair) for pair in pairs}
    results = _run_parallel(jobs, eval_config.threads, f"protocol B {data.condition}")

    entries = [results[pair][0] for pair in pairs]
    per_user = {
        user: float(np.mean([e.value for e in entries if e.target == user]))
        for user in users
    }

    report = _aggregate(
        Protocol.B,
        data,
        eval_config,
        entries,
        per_user,
        [results[pair][1] for pair in pairs],
        len(pairs),
        config_digest,
    )

    logger.info(
        "Protocol B %s %s: mean HTER %.4f (std %.4f) over %d trainings",
        data.condition,
        eval_config.kind,
        report.mean,
        report.std,
        len(pairs),
    )

    return report


# Report files

REPORT_COLUMNS = (
    "target",
    "excluded",
    "value",
    "threshold",
    "n_genuine",
    "n_impostor",
    "hter",
)


def report_lines(report: EvalReport) -> list[str]:
    """Tab-separated report: one header row, one row per entry, summary comments."""
    lines = ["\t".join(REPORT_COLUMNS)]
    for entry in report.entries:
        lines.append(
            "\t".join(
                (
                    entry.target,
                    entry.excluded_user or "-",
                    format_float(entry.value),
                    format_float(entry.threshold),
                    str(entry.n_genuine),
                    str(entry.n_impostor),
                    "-" if entry.hter is None else format_float(entry.hter),
                )
            )
        )

    summary = {
        "protocol": report.protocol,
        "condition": report.condition,
        "model": report.kind,
        "metric": report.metric,
        "mean": format_float(report.mean),
        "std": format_float(report.std),
        "mean_hter": "-" if report.mean_hter is None else format_float(report.mean_hter),
        "users": len(report.per_user),
        "n_trainings": report.n_trainings,
        "skipped": ",".join(report.skipped) or "-",
        "seed": report.seed,
        "config_digest": report.config_digest or "-",
    }
    lines.extend(f"# {key}={value}" for key, value in summary.items())

    return lines


def write_report_tsv(path: Path, report: EvalReport) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(report_lines(report)) + "\n", encoding="utf-8")


def write_score_dump(path: Path, report: EvalReport) -> None:
    """Raw FAR/FRR at every threshold of every score set of ``report``."""
    lines = ["target\texcluded\tthreshold\tfar\tfrr"]
    excluded = [entry.excluded_user or "-" for entry in report.entries]

    for entry_excluded, scores in zip(excluded, report.scores):
        thresholds, far, frr = far_frr_curve(scores)
        for t, a, r in zip(thresholds, far, frr):
            lines.append(
                f"{scores.target}\t{entry_excluded}\t{format_float(t)}\t"
                f"{format_float(a)}\t{format_float(r)}"
            )

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_report_table(reports: Iterable[EvalReport]) -> str:
    """
    Summarise reports as one table per protocol and model.

    Rows list the training and test session with the average metric and its
    standard deviation in percent.
    """
    groups: Dict[tuple[str, str], list[EvalReport]] = {}
    for report in reports:
        groups.setdefault((report.protocol, report.kind), []).append(report)

    blocks: list[str] = []
    for (protocol, kind), group in sorted(groups.items()):
        metric = group[0].metric.upper()
        rows = [
            f"Protocol {protocol} ({kind})",
            f"{'Training':<10}{'Testing':<10}{'Average ' + metric:>14}"
            f"{'Standard Deviation':>21}{'Users':>7}",
        ]
        for report in group:
            rows.append(
                f"{report.condition.train:<10}{report.condition.test:<10}"
                f"{report.mean * 100:>13.2f}%{report.std * 100:>20.2f}%"
                f"{len(report.per_user):>7}"
            )
        blocks.append("\n".join(rows))

    return "\n\n".join(blocks) + "\n"
