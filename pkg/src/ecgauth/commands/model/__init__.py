import click

model_cmds: click.Group = click.Group("model")

from . import cli as cli  # noqa: E402
