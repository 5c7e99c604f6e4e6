from __future__ import annotations

import sys
import logging

import click

LOG_FORMAT = "[%(levelname)s] %(message)s"

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"], "show_default": True}


def configure_logging(verbosity: int = 0) -> None:
    """
    Configure the ``ecgauth`` logger hierarchy for console output.

    Args:
        verbosity (int): -1 shows errors only, 0 progress and warnings, 1 or
            more adds debug detail.
    """
    if verbosity < 0:
        level = logging.ERROR
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG

    logger = logging.getLogger("ecgauth")
    logger.setLevel(level)
    if not any(getattr(h, "_ecgauth_console", False) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        setattr(handler, "_ecgauth_console", True)
        logger.addHandler(handler)

    for handler in logger.handlers:
        if getattr(handler, "_ecgauth_console", False):
            handler.setLevel(level)
            # follow stderr when it is swapped, as click.testing does
            handler.setStream(sys.stderr)  # type: ignore[attr-defined]


def create_cli() -> click.Group:
    """
    Create the ``ecgauth`` command group.

    Returns:
        click.Group: The group with every subcommand registered.

    The subcommands come from the ``commands`` packages:
    - corpus: synthetic data generation and corpus validation
    - signal: conditioning and heartbeat segmentation
    - model: feature extraction, training and evaluation
    - experiment: the end-to-end pipeline and figures
    """

    @click.group(context_settings=CONTEXT_SETTINGS)
    @click.option("-v", "--verbose", count=True, help="Increase log detail.")
    @click.option("-q", "--quiet", is_flag=True, help="Only report errors.")
    @click.version_option(package_name="ecg-auth")
    @click.pass_context
    def cli(ctx: click.Context, verbose: int, quiet: bool) -> None:
        """ECG biometric authentication toolkit."""
        verbosity = -1 if quiet else verbose
        configure_logging(verbosity)
        ctx.obj = {"verbosity": verbosity}

    from ecgauth.commands import command_groups

    for group in command_groups:
        for name, command in sorted(group.commands.items()):
            cli.add_command(command, name)

    return cli
