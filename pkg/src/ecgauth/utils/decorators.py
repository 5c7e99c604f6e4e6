from typing import Any, Callable

import logging
from functools import wraps

import click

from ecgauth.utils.errors import StageError, EcgAuthError

logger = logging.getLogger("ecgauth")

STAGE_FAILURE = 1


def stage(name: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """
    A decorator that turns errors raised by a command body into a logged
    stage failure and exit code 1.

    Click's own usage errors pass through untouched and keep exit code 2.

    Args:
        name (str): Stage reported when the error carries none.

    Returns:
        Callable: The decorator.
    """

    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            try:
                return func(*args, **kwargs)
            except click.ClickException:
                raise
            except StageError as error:
                logger.error("%s", error)
                logger.debug("Traceback", exc_info=True)
            except (EcgAuthError, ValueError, OSError, RuntimeError) as error:
                logger.error("stage '%s' failed: %s", name, error)
                logger.debug("Traceback", exc_info=True)

            raise SystemExit(STAGE_FAILURE)

        return wrapper

    return decorator
