import click

corpus_cmds: click.Group = click.Group("corpus")

from . import cli as cli  # noqa: E402
