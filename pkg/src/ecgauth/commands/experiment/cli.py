from typing import Optional, Sequence

import logging
from pathlib import Path

import click

from ecgauth import config
from ecgauth.utils.models import EcgTrace, ModelKind, session_of
from ecgauth.utils.decorators import stage
from ecgauth.utils.runconfig import resolve_run_config
from ecgauth.library.dsp import condition_trace
from ecgauth.library.dataset import read_trace_file
from ecgauth.library.pipeline import run_pipeline
from ecgauth.library.plotting import STYLES, plot_peaks, plot_mean_beats
from ecgauth.commands.options import model_option, config_option
from ecgauth.library.validation import is_valid_subject
from ecgauth.library.segmentation import read_session_beats

from . import experiment_cmds

logger = logging.getLogger(__name__)


@experiment_cmds.command("pipeline")
@click.argument(
    "corpus", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help=f"Output directory [default: {config.OUT_DIR}]",
)
@model_option(multiple=True)
@click.option(
    "--seed",
    type=click.IntRange(min=0),
    default=None,
    help=f"Seed of every random choice [default: {config.SEED}]",
)
@click.option(
    "--components",
    type=click.IntRange(min=1),
    default=None,
    help=f"Principal components kept [default: {config.N_COMPONENTS}]",
)
@click.option(
    "--threads",
    type=click.IntRange(min=0),
    default=None,
    help=f"Worker threads, 0 for automatic (capped by ${config.THREADS_ENV}).",
)
@click.option(
    "--reselect",
    is_flag=True,
    help="Re-run model selection on every protocol B training set.",
)
@click.option(
    "--dump-scores",
    is_flag=True,
    help="Write FAR/FRR at every threshold next to each report.",
)
@config_option
@click.pass_context
@stage("pipeline")
def _pipeline(
    ctx: click.Context,
    corpus: Path,
    out: Optional[Path],
    models: Sequence[str],
    seed: Optional[int],
    components: Optional[int],
    threads: Optional[int],
    reselect: bool,
    dump_scores: bool,
    config_path: Optional[Path],
) -> None:
    """
    Run every stage on CORPUS for the three session conditions and both
    protocols.

    Writes report_<protocol>_<train>_<test>.tsv files, summary.txt,
    run_config.txt and run.log to the output directory.
    """
    run_config = resolve_run_config(
        config_path,
        {
            "out_dir": None if out is None else str(out),
            "models": tuple(ModelKind.parse(m) for m in models) or None,
            "seed": seed,
            "n_components": components,
            "threads": threads,
            "protocol_b_reselect": reselect or None,
            "dump_scores": dump_scores or None,
        },
        ctx.obj["verbosity"],
    )

    result = run_pipeline(corpus, run_config)

    click.echo((Path(run_config.out_dir) / "summary.txt").read_text(encoding="utf-8"), nl=False)
    logger.info(
        "Wrote %d files to %s (config digest %s)",
        len(result.files),
        run_config.out_dir,
        result.digest,
    )


def read_trace(path: Path) -> EcgTrace:
    """
    Load a single ``.ecg`` file, taking labels from its corpus location.

    ``<subject>/<session>_r<recording>.ecg`` names are understood; anything
    else is labelled as subject ``trace`` in S1.
    """
    rate, samples = read_trace_file(path)

    subject = path.parent.name if is_valid_subject(path.parent.name) else "trace"
    try:
        session = session_of(path.stem.split("_")[0])
    except ValueError:
        session = session_of("S1")

    return EcgTrace(subject, session, rate, samples)


@experiment_cmds.command("plot")
@click.argument(
    "inputs",
    nargs=-1,
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option(
    "--style",
    type=click.Choice(STYLES),
    default="beats",
    help="beats: mean beat per .beats file; peaks: detection on one .ecg trace.",
)
@click.option(
    "--out",
    type=click.Path(dir_okay=False, path_type=Path),
    required=True,
    help="SVG file to write.",
)
@click.option(
    "--span",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help="peaks style: only draw the first SPAN seconds.",
)
@click.option(
    "--filtered",
    is_flag=True,
    help="peaks style: the trace is already conditioned.",
)
@config_option
@click.pass_context
@stage("plot")
def _plot(
    ctx: click.Context,
    inputs: Sequence[Path],
    style: str,
    out: Path,
    span: Optional[float],
    filtered: bool,
    config_path: Optional[Path],
) -> None:
    """
    Draw mean heartbeats of several users or the R-peak detection of a trace.
    """
    run_config = resolve_run_config(config_path, {}, ctx.obj["verbosity"])

    if style == "beats":
        plot_mean_beats([read_session_beats(path) for path in inputs], out)
        return

    if len(inputs) != 1:
        raise click.UsageError("the peaks style takes exactly one trace file")

    trace = read_trace(inputs[0])
    if not filtered:
        trace = condition_trace(trace, run_config.filter)
    plot_peaks(trace, out, run_config.segmentation, span)
