import click

signal_cmds: click.Group = click.Group("signal")

from . import cli as cli  # noqa: E402
