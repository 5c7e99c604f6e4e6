import click

from .model import model_cmds
from .corpus import corpus_cmds
from .signal import signal_cmds
from .experiment import experiment_cmds

__all__ = [
    "command_groups",
    "corpus_cmds",
    "experiment_cmds",
    "model_cmds",
    "signal_cmds",
]

command_groups: tuple[click.Group, ...] = (
    corpus_cmds,
    signal_cmds,
    model_cmds,
    experiment_cmds,
)
