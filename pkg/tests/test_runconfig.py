from __future__ import annotations

from pathlib import Path

import pytest

from ecgauth.utils.errors import ConfigError
from ecgauth.utils.models import ModelKind, HyperGrid
from ecgauth.utils.runconfig import RunConfig, resolve_run_config


def test_dump_and_load_are_lossless(tmp_path: Path) -> None:
    run_config = RunConfig(
        seed=7,
        threads=3,
        n_components=12,
        models=(ModelKind.KNN, ModelKind.SVM_RBF),
        dump_scores=True,
    ).merged({"grid.svm_c": "0.5,2", "filter.mains_hz": 60.0, "synth.n_subjects": 4})

    path = tmp_path / "run_config.txt"
    run_config.dump(path)

    assert path.read_text(encoding="utf-8").startswith(
        f"# ecgauth run configuration, digest {run_config.digest}"
    )
    assert RunConfig.load(path) == run_config


def test_digest_ignores_bookkeeping() -> None:
    base = RunConfig()

    assert base.merged({"out_dir": "elsewhere", "threads": 8, "verbosity": 1}).digest == base.digest
    assert base.merged({"seed": 1}).digest != base.digest
    assert base.merged({"grid.folds": 3}).digest != base.digest


def test_flags_win_over_file(tmp_path: Path) -> None:
    path = tmp_path / "run.conf"
    path.write_text("seed=5\nn_components=9\n", encoding="utf-8")

    run_config = resolve_run_config(path, {"seed": 11, "n_components": None}, verbosity=1)

    assert run_config.seed == 11
    assert run_config.n_components == 9
    assert run_config.verbosity == 1
    assert run_config.train_fraction == RunConfig().train_fraction


def test_errors_name_file_and_line(tmp_path: Path) -> None:
    path = tmp_path / "run.conf"

    path.write_text("# comment\nseed=1\nsvm_kernel=poly\n", encoding="utf-8")
    with pytest.raises(ConfigError, match=r"run\.conf:3: unknown configuration key") as info:
        RunConfig.load(path)
    assert info.value.line == 3

    path.write_text("n_components=many\n", encoding="utf-8")
    with pytest.raises(ConfigError, match=r"run\.conf:1:"):
        RunConfig.load(path)

    path.write_text("seed\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="key=value"):
        RunConfig.load(path)

    with pytest.raises(ConfigError, match="cannot read"):
        RunConfig.load(tmp_path / "missing.conf")


def test_unknown_sections() -> None:
    with pytest.raises(ValueError):
        RunConfig().merged({"grid": "1"})
    with pytest.raises(ValueError):
        RunConfig().merged({"network.port": "80"})
    with pytest.raises(ValueError):
        RunConfig().merged({"grid.svm_degree": "3"})


def test_values_are_validated() -> None:
    with pytest.raises(ValueError):
        RunConfig(train_fraction=1.5)
    with pytest.raises(ValueError):
        RunConfig().merged({"models": ""})
    with pytest.raises(ValueError):
        RunConfig().merged({"grid.folds": "1"})


def test_boolean_and_model_spellings() -> None:
    run_config = RunConfig().merged(
        {"protocol_b_reselect": "yes", "dump_scores": "off", "models": "svm, logistic, svm"}
    )

    assert run_config.protocol_b_reselect is True
    assert run_config.dump_scores is False
    assert run_config.models == (ModelKind.SVM_RBF, ModelKind.LOGISTIC)

    with pytest.raises(ValueError, match="boolean"):
        RunConfig().merged({"dump_scores": "maybe"})


def test_eval_config() -> None:
    grid = HyperGrid(svm_c=(1.0,), folds=3)
    run_config = RunConfig(seed=4, threads=2, grid=grid, protocol_b_reselect=True)

    eval_config = run_config.eval_config(ModelKind.KNN)

    assert eval_config.kind is ModelKind.KNN
    assert eval_config.grid == grid
    assert eval_config.seed == 4
    assert eval_config.threads == 2
    assert eval_config.reselect
