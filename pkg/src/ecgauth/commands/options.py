from pathlib import Path

import click

from ecgauth.utils.models import SessionId, ModelKind

MODEL_NAMES = ("svm", *(kind.value for kind in ModelKind))

config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Run configuration file (key=value); flags override it.",
)

out_dir_option = click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Output directory.",
)


def session_option(name: str, default: SessionId, help: str) -> click.Option:
    return click.option(  # type: ignore[return-value]
        name,
        type=click.Choice([s.value for s in SessionId]),
        default=default.value,
        help=help,
    )


def model_option(multiple: bool = False) -> click.Option:
    return click.option(  # type: ignore[return-value]
        "--model",
        "models",
        type=click.Choice(MODEL_NAMES),
        multiple=multiple,
        default=None if multiple else "svm",
        help="Classifier" + (" (repeat to compare several)." if multiple else "."),
    )
