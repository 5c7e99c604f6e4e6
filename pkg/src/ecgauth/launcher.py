from __future__ import annotations

import click

from ecgauth.factory import create_cli

cli: click.Group = create_cli()


def main() -> None:
    """
    Main function to run the CLI
    """
    cli(prog_name="ecgauth")


if __name__ == "__main__":
    main()
