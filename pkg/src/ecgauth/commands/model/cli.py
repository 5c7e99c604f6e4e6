from typing import Dict, Optional, Sequence

import logging
from pathlib import Path

import click

from ecgauth import config
from ecgauth.utils.models import (
    Protocol,
    SessionId,
    ModelKind,
    Condition,
    FeatureSet,
    LabeledSet,
    BeatMatrix,
    FeatureModel,
    SessionBeats,
)
from ecgauth.utils.decorators import stage
from ecgauth.utils.runconfig import resolve_run_config
from ecgauth.library.features import (
    transform,
    read_features,
    write_features,
    fit_feature_model,
    write_feature_model,
)
from ecgauth.library.cache import Cache
from ecgauth.library.pipeline import report_name
from ecgauth.library.protocols import (
    run_protocol_a,
    run_protocol_b,
    write_report_tsv,
    write_score_dump,
    assemble_condition,
    format_report_table,
)
from ecgauth.commands.options import (
    model_option,
    config_option,
    out_dir_option,
    session_option,
)
from ecgauth.library.classifiers import (
    train_auth_model,
    write_auth_model,
    parse_grid_overrides,
)
from ecgauth.library.segmentation import read_session_beats

from . import model_cmds

logger = logging.getLogger(__name__)

FEATURES_SUFFIX = ".features"
FEATURE_MODEL_NAME = "feature_model.txt"

SessionKey = tuple[str, SessionId]


def read_beat_dir(path: Path) -> Dict[SessionKey, SessionBeats]:
    files = sorted(path.glob("*.beats"))
    if not files:
        raise ValueError(f"no .beats files in {path}")

    sessions: Dict[SessionKey, SessionBeats] = {}
    for file in files:
        beats = read_session_beats(file)
        sessions[(beats.train.subject, beats.train.session)] = beats
    return sessions


def read_feature_dir(path: Path) -> Dict[SessionKey, tuple[FeatureSet, FeatureSet]]:
    files = sorted(path.glob(f"*{FEATURES_SUFFIX}"))
    if not files:
        raise ValueError(f"no {FEATURES_SUFFIX} files in {path}")

    features: Dict[SessionKey, tuple[FeatureSet, FeatureSet]] = {}
    for file in files:
        train, test = read_features(file)
        labels = train.subjects[:1] or test.subjects[:1]
        sessions = train.sessions[:1] or test.sessions[:1]
        features[(labels[0], sessions[0])] = (train, test)
    return features


def feature_dimension(features: Dict[SessionKey, tuple[FeatureSet, FeatureSet]]) -> int:
    return max(part.dimension for pair in features.values() for part in pair)


def _project(beats: BeatMatrix, model: FeatureModel) -> FeatureSet:
    if not beats.n_beats:
        return FeatureSet.concat([], model.n_components)
    return transform(beats, model)


@model_cmds.command("features")
@click.argument(
    "beats_dir", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
@out_dir_option
@session_option(
    "--train-session", SessionId.S1, "Session whose training beats fit the model."
)
@click.option(
    "--components",
    type=click.IntRange(min=1),
    default=None,
    help=f"Principal components kept [default: {config.N_COMPONENTS}]",
)
@config_option
@click.pass_context
@stage("features")
def _features(
    ctx: click.Context,
    beats_dir: Path,
    out: Path,
    train_session: str,
    components: Optional[int],
    config_path: Optional[Path],
) -> None:
    """
    Fit z-scores and PCA on one session's training beats and project all beats.

    Writes feature_model.txt and one <subject>_<session>.features file per
    segmented session.
    """
    run_config = resolve_run_config(
        config_path, {"n_components": components}, ctx.obj["verbosity"]
    )
    sessions = read_beat_dir(beats_dir)
    session = SessionId(train_session)

    train_beats = [
        beats.train
        for (_, label), beats in sorted(sessions.items())
        if label is session and beats.train.n_beats
    ]
    if not train_beats:
        raise ValueError(f"no training beats for session {session} in {beats_dir}")

    model = fit_feature_model(train_beats, run_config.n_components)
    write_feature_model(out / FEATURE_MODEL_NAME, model)

    ratio = model.explained_variance_ratio
    click.echo(
        f"{model.n_components} components, rank {model.rank}, "
        f"{ratio.sum() * 100:.1f}% of the variance ({model.status})"
    )

    for (subject, label), beats in sorted(sessions.items()):
        train, test = _project(beats.train, model), _project(beats.test, model)
        if not (len(train) or len(test)):
            logger.warning("Skipping %s/%s: no beats", subject, label)
            continue
        write_features(out / f"{subject}_{label}{FEATURES_SUFFIX}", train, test)


@model_cmds.command("train")
@click.argument(
    "features_dir", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
@out_dir_option
@session_option("--train-session", SessionId.S1, "Session providing training vectors.")
@model_option()
@click.option(
    "--grid",
    "grid_overrides",
    multiple=True,
    metavar="NAME=V1,V2",
    help="Replace a hyperparameter list, e.g. svm_c=1,10 (repeatable).",
)
@click.option(
    "--seed",
    type=click.IntRange(min=0),
    default=None,
    help=f"Cross-validation seed [default: {config.SEED}]",
)
@click.option(
    "--target",
    "targets",
    multiple=True,
    help="Train only these users (repeatable) [default: every user]",
)
@config_option
@click.pass_context
@stage("classifiers")
def _train(
    ctx: click.Context,
    features_dir: Path,
    out: Path,
    train_session: str,
    models: str,
    grid_overrides: Sequence[str],
    seed: Optional[int],
    targets: Sequence[str],
    config_path: Optional[Path],
) -> None:
    """
    Train one authenticator per target user on the training vectors.

    Hyperparameters are chosen by stratified cross-validation and the
    decision threshold sits at the equal-error point of the training scores.
    Writes <target>_<model>.model files.
    """
    run_config = resolve_run_config(config_path, {"seed": seed}, ctx.obj["verbosity"])
    grid = parse_grid_overrides(grid_overrides, run_config.grid)
    kind = ModelKind.parse(models)

    features = read_feature_dir(features_dir)
    session = SessionId(train_session)
    parts = [pair[0] for (_, label), pair in sorted(features.items()) if label is session]
    train = FeatureSet.concat(parts, feature_dimension(features))

    users = train.unique_subjects
    unknown = sorted(set(targets) - set(users))
    if unknown:
        raise ValueError(f"no training vectors for {', '.join(unknown)}")

    for target in targets or users:
        model = train_auth_model(LabeledSet(train, target), kind, grid, run_config.seed)
        write_auth_model(out / f"{target}_{kind.short}.model", model)

        params = ", ".join(f"{k}={v:g}" for k, v in sorted(model.hyperparameters.items()))
        click.echo(f"{target}\t{kind}\t{params}\tthreshold={model.decision_threshold:.6g}")


@model_cmds.command("eval")
@click.argument(
    "features_dir", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
@out_dir_option
@click.option(
    "--protocol",
    "protocols",
    type=click.Choice([p.value for p in Protocol], case_sensitive=False),
    multiple=True,
    help="Protocol to run, a or b (repeatable) [default: both]",
)
@session_option("--train-session", SessionId.S1, "Session providing training vectors.")
@session_option("--test-session", SessionId.S1, "Session providing test vectors.")
@model_option()
@click.option(
    "--seed",
    type=click.IntRange(min=0),
    default=None,
    help=f"Cross-validation seed [default: {config.SEED}]",
)
@click.option(
    "--reselect",
    is_flag=True,
    help="Re-run model selection on every protocol B training set.",
)
@click.option(
    "--dump-scores",
    is_flag=True,
    help="Write FAR/FRR at every threshold next to the report.",
)
@click.option(
    "--threads",
    type=click.IntRange(min=0),
    default=None,
    help=f"Worker threads, 0 for automatic (capped by ${config.THREADS_ENV}).",
)
@config_option
@click.pass_context
@stage("evaluation")
def _eval(
    ctx: click.Context,
    features_dir: Path,
    out: Path,
    protocols: Sequence[str],
    train_session: str,
    test_session: str,
    models: str,
    seed: Optional[int],
    reselect: bool,
    dump_scores: bool,
    threads: Optional[int],
    config_path: Optional[Path],
) -> None:
    """
    Evaluate per-user authenticators with protocol A (EER) and B (HTER).

    Writes report_<protocol>_<train>_<test>.tsv per protocol and prints the
    summary table.
    """
    run_config = resolve_run_config(
        config_path,
        {
            "seed": seed,
            "protocol_b_reselect": reselect or None,
            "dump_scores": dump_scores or None,
            "threads": threads,
            "models": (ModelKind.parse(models),),
        },
        ctx.obj["verbosity"],
    )

    features = read_feature_dir(features_dir)
    condition = Condition(SessionId(train_session), SessionId(test_session))
    dimension = feature_dimension(features)
    data = assemble_condition(features, condition, dimension)

    eval_config = run_config.eval_config(run_config.models[0])
    runners = {Protocol.A: run_protocol_a, Protocol.B: run_protocol_b}
    selected = [Protocol(p.upper()) for p in dict.fromkeys(protocols)] or list(Protocol)

    cache = Cache()
    reports = []
    for protocol in selected:
        report = runners[protocol](data, eval_config, cache, run_config.digest)
        write_report_tsv(out / report_name(report, False), report)
        if run_config.dump_scores:
            write_score_dump(out / report_name(report, False, prefix="scores"), report)
        reports.append(report)

    click.echo(format_report_table(reports), nl=False)
