from __future__ import annotations

from typing import Dict, Iterator, Optional

import logging
from pathlib import Path
from contextlib import contextmanager
from dataclasses import field, dataclass

from ecgauth.utils.errors import StageError, FilterDesignError, SegmentationError
from ecgauth.utils.models import (
    CONDITIONS,
    Corpus,
    SessionId,
    ModelKind,
    EvalReport,
    SessionBeats,
)
from ecgauth.utils.runconfig import RunConfig
from ecgauth.library.dsp import condition_trace
from ecgauth.library.cache import Cache
from ecgauth.library.utils import progress
from ecgauth.library.dataset import load_corpus, session_traces
from ecgauth.library.protocols import (
    run_protocol_a,
    run_protocol_b,
    write_report_tsv,
    write_score_dump,
    prepare_condition,
    format_report_table,
)
from ecgauth.library.segmentation import segment_session

logger = logging.getLogger(__name__)

LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"


@dataclass
class PipelineResult:
    """
    Everything a pipeline run produced.

    Attributes:
        reports (list[EvalReport]): One report per condition, protocol and model.
        files (list[Path]): Written files, in writing order.
        digest (str): Configuration digest of the run.
    """

    reports: list[EvalReport] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)
    digest: str = ""


@contextmanager
def pipeline_stage(name: str) -> Iterator[None]:
    """Attribute any failure inside the block to the pipeline stage ``name``."""
    logger.debug("Stage %s started", name)
    try:
        yield
    except StageError:
        raise
    except Exception as error:
        raise StageError(name, error) from error
    logger.debug("Stage %s finished", name)


@contextmanager
def run_log(path: Path) -> Iterator[logging.Handler]:
    """Mirror the ``ecgauth`` log into ``path`` for the duration of the block."""
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.setLevel(logging.INFO)

    root = logging.getLogger("ecgauth")
    previous = root.level
    root.addHandler(handler)
    if root.getEffectiveLevel() > logging.INFO:
        root.setLevel(logging.INFO)

    try:
        yield handler
    finally:
        root.removeHandler(handler)
        root.setLevel(previous)
        handler.close()


def segment_corpus(
    corpus: Corpus, run_config: RunConfig, filtered: bool = False
) -> Dict[tuple[str, SessionId], SessionBeats]:
    """
    Condition and segment every (subject, session) of ``corpus``.

    Conditioning is skipped when ``filtered`` says the corpus already went
    through it.

    Sessions too short to condition or whose segmentation fails are logged
    and left out; the protocols then skip their users.
    """
    traces = session_traces(corpus)
    sessions: Dict[tuple[str, SessionId], SessionBeats] = {}
    dropped: list[str] = []

    for key in progress(sorted(traces), total=len(traces), desc="segment"):
        trace = traces[key]
        try:
            conditioned = trace if filtered else condition_trace(trace, run_config.filter)
            sessions[key] = segment_session(
                conditioned, run_config.segmentation, run_config.train_fraction
            )
        except (FilterDesignError, SegmentationError) as error:
            logger.warning("Skipping %s/%s: %s", key[0], key[1], error)
            dropped.append(f"{key[0]}/{key[1]}")

    if dropped:
        logger.warning("%d sessions skipped: %s", len(dropped), ", ".join(dropped))

    return sessions


def report_name(report: EvalReport, several_models: bool, prefix: str = "report") -> str:
    suffix = f"_{report.kind.short}" if several_models else ""
    return f"{prefix}_{report.slug}{suffix}.tsv"


def run_pipeline(
    corpus_root: Path,
    run_config: Optional[RunConfig] = None,
    corpus: Optional[Corpus] = None,
) -> PipelineResult:
    """
    Run every stage on a corpus and write the reports.

    For each of the three session conditions the beats are turned into
    features, and every configured model is evaluated with both protocols.
    Segmentation, feature models and hyperparameter selections are shared
    between conditions and protocols through an in-memory cache.

    Output files in ``run_config.out_dir``: one
    ``report_<protocol>_<train>_<test>.tsv`` per condition and protocol
    (suffixed with the model name when several are compared), optional
    ``scores_*.tsv`` curves, ``summary.txt``, ``run_config.txt`` and
    ``run.log``.

    Args:
        corpus_root (Path): Corpus directory holding the manifest.
        run_config (Optional[RunConfig]): Settings; defaults when omitted.
        corpus (Optional[Corpus]): An already loaded corpus.

    Returns:
        PipelineResult: Reports and written files.

    Raises:
        StageError: If a stage fails, naming the stage.
    """
    run_config = run_config or RunConfig()
    out = Path(run_config.out_dir)
    result = PipelineResult(digest=run_config.digest)
    several = len(run_config.models) > 1

    with run_log(out / "run.log"):
        logger.info("config_digest=%s", result.digest)
        logger.info("seed=%d", run_config.seed)

        run_config.dump(out / "run_config.txt")
        result.files.append(out / "run_config.txt")

        with pipeline_stage("ingest"):
            if corpus is None:
                corpus = load_corpus(Path(corpus_root))
            logger.info(
                "Corpus %s: %d subjects, %d recordings",
                corpus_root,
                len(corpus.subjects),
                len(corpus.manifest.rows),
            )

        with pipeline_stage("segmentation"):
            sessions = segment_corpus(corpus, run_config)

        cache = Cache()

        for condition in CONDITIONS:
            with pipeline_stage("features"):
                _, data = prepare_condition(
                    sessions, condition, run_config.n_components, cache
                )

            for kind in run_config.models:
                eval_config = run_config.eval_config(ModelKind(kind))

                with pipeline_stage("evaluation"):
                    reports = (
                        run_protocol_a(data, eval_config, cache, result.digest),
                        run_protocol_b(data, eval_config, cache, result.digest),
                    )

                for report in reports:
                    path = out / report_name(report, several)
                    write_report_tsv(path, report)
                    result.files.append(path)

                    if run_config.dump_scores:
                        scores = out / report_name(report, several, prefix="scores")
                        write_score_dump(scores, report)
                        result.files.append(scores)

                result.reports.extend(reports)

        summary = format_report_table(result.reports)
        (out / "summary.txt").write_text(summary, encoding="utf-8")
        result.files.append(out / "summary.txt")

        for line in summary.splitlines():
            logger.info(line)

    return result
