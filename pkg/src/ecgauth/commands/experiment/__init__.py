import click

experiment_cmds: click.Group = click.Group("experiment")

from . import cli as cli  # noqa: E402
