from typing import Optional

import logging
from pathlib import Path

import click

from ecgauth import config
from ecgauth.utils.decorators import stage
from ecgauth.utils.runconfig import resolve_run_config
from ecgauth.library.synth import emit_corpus
from ecgauth.library.dataset import load_corpus, save_corpus, session_traces
from ecgauth.commands.options import config_option

from . import corpus_cmds

logger = logging.getLogger(__name__)


@corpus_cmds.command("synth")
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Directory receiving the corpus.",
)
@click.option(
    "--subjects",
    type=click.IntRange(min=2),
    default=None,
    help=f"Number of subjects [default: {config.SYNTH_SUBJECTS}]",
)
@click.option(
    "--duration",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help=f"Seconds per session [default: {config.SYNTH_DURATION_S}]",
)
@click.option(
    "--rate",
    type=click.FloatRange(min=0, min_open=True),
    default=None,
    help=f"Sampling rate in Hz [default: {config.SYNTH_SAMPLE_RATE_HZ}]",
)
@click.option(
    "--drift",
    type=click.FloatRange(min=0),
    default=None,
    help=f"Relative S2 morphology drift [default: {config.SYNTH_DRIFT}]",
)
@click.option(
    "--recordings",
    type=click.IntRange(min=1),
    default=None,
    help=f"Recordings per session [default: {config.SYNTH_RECORDINGS}]",
)
@click.option(
    "--seed",
    type=click.IntRange(min=0),
    default=None,
    help=f"Generator seed [default: {config.SEED}]",
)
@click.option("--noise-free", is_flag=True, help="Render without any noise.")
@config_option
@click.pass_context
@stage("synth")
def _synth(
    ctx: click.Context,
    out: Path,
    subjects: Optional[int],
    duration: Optional[float],
    rate: Optional[float],
    drift: Optional[float],
    recordings: Optional[int],
    seed: Optional[int],
    noise_free: bool,
    config_path: Optional[Path],
) -> None:
    """
    Generate a two-session synthetic corpus with ground-truth peaks.
    """
    run_config = resolve_run_config(
        config_path,
        {
            "synth.n_subjects": subjects,
            "synth.duration_s": duration,
            "synth.sample_rate_hz": rate,
            "synth.session_drift": drift,
            "synth.recordings": recordings,
            "synth.seed": seed,
        },
        ctx.obj["verbosity"],
    )

    synth_config = run_config.synth
    if noise_free:
        synth_config = synth_config.without_noise()

    manifest = emit_corpus(synth_config, out)
    click.echo(
        f"{len(manifest.subjects)} subjects, {len(manifest.rows)} recordings "
        f"written to {out}"
    )


@corpus_cmds.command("ingest")
@click.argument(
    "corpus", type=click.Path(exists=True, file_okay=False, path_type=Path)
)
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Write one concatenated recording per session here.",
)
@stage("ingest")
def _ingest(corpus: Path, out: Optional[Path]) -> None:
    """
    Validate a corpus and list its sessions.
    """
    loaded = load_corpus(corpus)
    traces = session_traces(loaded)

    for (subject, session), trace in sorted(traces.items()):
        click.echo(
            f"{subject}\t{session}\t{len(loaded.recordings(subject, session))}\t"
            f"{trace.duration_s:.1f} s"
        )

    if out is not None:
        save_corpus(traces.values(), out)
        logger.info("Wrote %d session traces to %s", len(traces), out)
