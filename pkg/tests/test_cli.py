from __future__ import annotations

from typing import Iterator

import logging
from pathlib import Path

import click
import pytest
from click.testing import CliRunner

from ecgauth.factory import create_cli

COMMANDS = (
    "synth",
    "ingest",
    "preprocess",
    "segment",
    "features",
    "train",
    "eval",
    "pipeline",
    "plot",
)
REPORTS = [
    f"report_{protocol}_{condition}.tsv"
    for condition in ("S1_S1", "S2_S2", "S1_S2")
    for protocol in ("a", "b")
]


@pytest.fixture
def cli() -> Iterator[click.Group]:
    yield create_cli()

    # drop the console handler bound to the runner's closed stderr
    logger = logging.getLogger("ecgauth")
    for handler in list(logger.handlers):
        if getattr(handler, "_ecgauth_console", False):
            logger.removeHandler(handler)


def _run(cli: click.Group, *args: object) -> str:
    result = CliRunner().invoke(cli, [str(arg) for arg in args], catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result.output


@pytest.mark.parametrize("command", COMMANDS)
def test_every_command_has_help(cli: click.Group, command: str) -> None:
    result = CliRunner().invoke(cli, [command, "--help"])

    assert result.exit_code == 0
    assert "Usage:" in result.output


def test_usage_and_stage_errors(cli: click.Group, tmp_path: Path) -> None:
    runner = CliRunner()

    missing = runner.invoke(cli, ["ingest", str(tmp_path / "nowhere")])
    assert missing.exit_code == 2

    no_manifest = runner.invoke(cli, ["ingest", str(tmp_path)])
    assert no_manifest.exit_code == 1
    assert "stage 'ingest' failed" in no_manifest.output


def test_synth_and_ingest(cli: click.Group, tmp_path: Path) -> None:
    out = tmp_path / "corpus"
    output = _run(cli, "-q", "synth", "--out", out, "--subjects", 2, "--duration", 40, "--seed", 3)

    assert "2 subjects, 8 recordings" in output
    assert (out / "manifest.tsv").is_file()

    listing = _run(cli, "-q", "ingest", out).splitlines()
    assert listing == [
        "s01\tS1\t2\t40.0 s",
        "s01\tS2\t2\t40.0 s",
        "s02\tS1\t2\t40.0 s",
        "s02\tS2\t2\t40.0 s",
    ]


def test_stage_by_stage(cli: click.Group, corpus_dir: Path, tmp_path: Path) -> None:
    filtered, beats, features = tmp_path / "filtered", tmp_path / "beats", tmp_path / "features"
    models, reports = tmp_path / "models", tmp_path / "reports"

    _run(cli, "-q", "preprocess", corpus_dir, "--out", filtered, "--dump-coefficients")
    assert (filtered / "manifest.tsv").is_file()
    assert "transient_length=" in (filtered / "filter.txt").read_text(encoding="utf-8")

    segmented = _run(cli, "-q", "segment", filtered, "--out", beats, "--filtered")
    assert len(segmented.splitlines()) == 8
    assert len(list(beats.glob("*.beats"))) == 8
    assert len(list(beats.glob("*.peaks"))) == 8

    _run(cli, "-q", "features", beats, "--out", features, "--components", 10)
    assert (features / "feature_model.txt").is_file()
    assert len(list(features.glob("*.features"))) == 8

    trained = _run(cli, "-q", "train", features, "--out", models, "--model", "knn", "--grid", "knn_k=1,3", "--target", "s02")
    assert trained.startswith("s02\tknn\tk=")
    assert [p.name for p in models.iterdir()] == ["s02_knn.model"]

    table = _run(cli, "-q", "eval", features, "--out", reports, "--model", "knn", "--protocol", "a", "--protocol", "B", "--dump-scores")
    assert "Protocol A (knn)" in table
    assert "Protocol B (knn)" in table
    for name in ("report_a_S1_S1.tsv", "report_b_S1_S1.tsv", "scores_a_S1_S1.tsv"):
        assert (reports / name).is_file()


def test_train_needs_feature_files(cli: click.Group, tmp_path: Path) -> None:
    features = tmp_path / "features"
    features.mkdir()

    result = CliRunner().invoke(cli, ["train", str(features), "--out", str(tmp_path / "m")])

    assert result.exit_code == 1
    assert "no .features files" in result.output


def test_pipeline(cli: click.Group, corpus_dir: Path, small_grid_file: Path, tmp_path: Path) -> None:
    first, second = tmp_path / "first", tmp_path / "second"

    summary = _run(cli, "-q", "pipeline", corpus_dir, "--out", first, "--config", small_grid_file)
    _run(cli, "-q", "pipeline", corpus_dir, "--out", second, "--config", small_grid_file, "--threads", 2)

    assert "Protocol A (svm_rbf)" in summary
    assert "Average HTER" in summary
    for name in [*REPORTS, "summary.txt", "run_config.txt", "run.log"]:
        assert (first / name).is_file(), name

    for name in REPORTS:
        assert (first / name).read_text(encoding="utf-8") == (second / name).read_text(
            encoding="utf-8"
        )

    log = (first / "run.log").read_text(encoding="utf-8")
    assert "config_digest=" in log
    assert "grid.svm_c=1.0" in (first / "run_config.txt").read_text(encoding="utf-8")


def test_plots(cli: click.Group, corpus_dir: Path, tmp_path: Path) -> None:
    beats = tmp_path / "beats"
    _run(cli, "-q", "segment", corpus_dir, "--out", beats, "--plot")

    assert (beats / "mean_beats.svg").is_file()
    assert len(list(beats.glob("peaks_*.svg"))) == 8

    files = sorted(beats.glob("*.beats"))
    _run(cli, "-q", "plot", *files, "--out", tmp_path / "all.svg")
    assert (tmp_path / "all.svg").read_text(encoding="utf-8").count('id="beat-') >= 8

    traces = sorted(corpus_dir.glob("*/*.ecg"))
    _run(cli, "-q", "plot", traces[0], "--style", "peaks", "--filtered", "--span", 5, "--out", tmp_path / "one.svg")

    two = CliRunner().invoke(
        cli, ["plot", str(traces[0]), str(traces[1]), "--style", "peaks", "--out", str(tmp_path / "x.svg")]
    )
    assert two.exit_code == 2
