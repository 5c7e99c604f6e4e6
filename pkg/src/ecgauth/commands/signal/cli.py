from typing import Optional

import logging
from pathlib import Path

import click

from ecgauth import config
from ecgauth.utils.decorators import stage
from ecgauth.utils.runconfig import resolve_run_config
from ecgauth.library.dsp import condition_trace, write_cascade, design_conditioning_filter
from ecgauth.library.utils import progress, format_float
from ecgauth.library.dataset import (
    load_corpus,
    save_corpus,
    write_peaks,
    session_traces,
)
from ecgauth.library.pipeline import segment_corpus
from ecgauth.library.plotting import plot_peaks, plot_mean_beats
from ecgauth.commands.options import config_option, out_dir_option
from ecgauth.library.segmentation import write_session_beats

from . import signal_cmds

logger = logging.getLogger(__name__)

BEATS_SUFFIX = ".beats"


@signal_cmds.command("preprocess")
@click.argument(
    "corpus", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
@out_dir_option
@click.option(
    "--hp",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help=f"High-pass cutoff in Hz [default: {config.HP_CUTOFF_HZ}]",
)
@click.option(
    "--lp",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help=f"Low-pass cutoff in Hz [default: {config.LP_CUTOFF_HZ}]",
)
@click.option(
    "--order",
    type=click.IntRange(min=2),
    default=None,
    help=f"Even band-pass order [default: {config.FILTER_ORDER}]",
)
@click.option(
    "--mains",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help=f"Mains frequency to notch out in Hz [default: {config.MAINS_HZ}]",
)
@click.option(
    "--mains-q",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help=f"Quality factor of the notch [default: {config.MAINS_Q}]",
)
@click.option(
    "--dump-coefficients",
    is_flag=True,
    help="Also write the biquad sections of the filter to filter.txt.",
)
@config_option
@click.pass_context
@stage("preprocess")
def _preprocess(
    ctx: click.Context,
    corpus: Path,
    out: Path,
    hp: Optional[float],
    lp: Optional[float],
    order: Optional[int],
    mains: Optional[float],
    mains_q: Optional[float],
    dump_coefficients: bool,
    config_path: Optional[Path],
) -> None:
    """
    Remove mains interference, baseline wander and high-frequency noise.

    Every (subject, session) is filtered as one concatenated trace and
    written to OUT as a corpus with one recording per session.
    """
    run_config = resolve_run_config(
        config_path,
        {
            "filter.hp_cutoff_hz": hp,
            "filter.lp_cutoff_hz": lp,
            "filter.order": order,
            "filter.mains_hz": mains,
            "filter.mains_q": mains_q,
        },
        ctx.obj["verbosity"],
    )
    traces = session_traces(load_corpus(corpus))

    conditioned = [
        condition_trace(traces[key], run_config.filter)
        for key in progress(sorted(traces), total=len(traces), desc="preprocess")
    ]
    save_corpus(conditioned, out)
    logger.info("Conditioned %d sessions into %s", len(conditioned), out)

    if dump_coefficients:
        rates = sorted({trace.sample_rate_hz for trace in conditioned})
        for rate in rates:
            name = "filter.txt" if len(rates) == 1 else f"filter_{format_float(rate)}hz.txt"
            cascade = design_conditioning_filter(run_config.filter, rate)
            write_cascade(out / name, cascade)
            logger.info("Wrote %s (%s)", out / name, cascade.description)


@signal_cmds.command("segment")
@click.argument(
    "corpus", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
@out_dir_option
@click.option(
    "--filtered",
    is_flag=True,
    help="The corpus comes from 'preprocess'; skip conditioning.",
)
@click.option(
    "--train-fraction",
    type=click.FloatRange(min=0, max=1, min_open=True, max_open=True),
    default=None,
    help=f"Leading share of each session for training [default: {config.TRAIN_FRACTION}]",
)
@click.option(
    "--plot",
    is_flag=True,
    help="Also draw mean_beats.svg and a peaks_<subject>_<session>.svg per session.",
)
@config_option
@click.pass_context
@stage("segmentation")
def _segment(
    ctx: click.Context,
    corpus: Path,
    out: Path,
    filtered: bool,
    train_fraction: Optional[float],
    plot: bool,
    config_path: Optional[Path],
) -> None:
    """
    Detect R peaks, cut fixed windows around them and split each session.

    Writes one <subject>_<session>.beats file per session holding the
    training and test beats, and the detected R peaks next to it.
    """
    run_config = resolve_run_config(
        config_path, {"train_fraction": train_fraction}, ctx.obj["verbosity"]
    )
    loaded = load_corpus(corpus)
    sessions = segment_corpus(loaded, run_config, filtered)

    for (subject, session), beats in sorted(sessions.items()):
        write_session_beats(out / f"{subject}_{session}{BEATS_SUFFIX}", beats)
        write_peaks(out / f"{subject}_{session}{config.PEAKS_SUFFIX}", beats.peaks.indices)
        click.echo(
            f"{subject}\t{session}\t{len(beats.peaks)} peaks\t"
            f"{beats.train.n_beats} train\t{beats.test.n_beats} test"
        )

    if not (plot and sessions):
        return

    plot_mean_beats([sessions[key] for key in sorted(sessions)], out / "mean_beats.svg")

    traces = session_traces(loaded)
    for subject, session in sorted(sessions):
        trace = traces[(subject, session)]
        if not filtered:
            trace = condition_trace(trace, run_config.filter)
        plot_peaks(
            trace,
            out / f"peaks_{subject}_{session}.svg",
            run_config.segmentation,
            config.PLOT_SPAN_S,
        )
