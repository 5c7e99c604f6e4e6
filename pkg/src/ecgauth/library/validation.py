from typing import Any

import math
from re import compile as re_compile

SUBJECT_RE = re_compile(r"^[A-Za-z0-9_.-]+$")
SESSION_LABELS = ("S1", "S2")


def is_valid_subject(subject: str) -> bool:
    """Return True if the subject id is a non-empty token of the allowed charset."""
    return isinstance(subject, str) and bool(SUBJECT_RE.match(subject))


def validate_subject(subject: str) -> str:
    """
    Validate a subject id.

    Args:
        subject (str): The subject id to validate.

    Returns:
        str: The validated subject id, unchanged.

    Raises:
        ValueError: If the id is empty or uses characters outside
            ``[A-Za-z0-9_.-]``.
    """
    if not is_valid_subject(subject):
        raise ValueError(f"Invalid subject id {subject!r}")

    return subject


def validate_session(session: str) -> str:
    """
    Validate a session label.

    Args:
        session (str): The session label, ``S1`` or ``S2``.

    Returns:
        str: The validated label.

    Raises:
        ValueError: If the label is not one of the two known sessions.
    """
    if session not in SESSION_LABELS:
        raise ValueError(f"Invalid session {session!r}, expected one of S1, S2")

    return session


def validate_positive(value: Any, name: str) -> float:
    """
    Validate a strictly positive finite real.

    Args:
        value (Any): The value to check.
        name (str): Parameter name used in the error message.

    Returns:
        float: The value as a float.

    Raises:
        ValueError: If the value is not a finite number greater than zero.
    """
    if isinstance(value, bool):
        raise ValueError(f"{name} must be a positive number")

    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a positive number") from None

    if not math.isfinite(number) or number <= 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")

    return number


def validate_non_negative(value: Any, name: str) -> float:
    """Validate a finite real that is zero or larger."""
    if isinstance(value, bool):
        raise ValueError(f"{name} must be a non-negative number")

    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a non-negative number") from None

    if not math.isfinite(number) or number < 0:
        raise ValueError(f"{name} must be a non-negative number, got {value!r}")

    return number


def validate_fraction(
    value: Any, name: str, *, allow_zero: bool = False
) -> float:
    """
    Validate a fraction in ``(0, 1)``, or ``[0, 1)`` when ``allow_zero`` is set.

    Args:
        value (Any): The value to check.
        name (str): Parameter name used in the error message.
        allow_zero (bool): Whether 0 is accepted.

    Returns:
        float: The validated fraction.

    Raises:
        ValueError: If the value lies outside the accepted interval.
    """
    number = validate_non_negative(value, name)

    if number >= 1 or (number == 0 and not allow_zero):
        interval = "[0, 1)" if allow_zero else "(0, 1)"
        raise ValueError(f"{name} must lie in {interval}, got {value!r}")

    return number


def validate_count(value: Any, name: str, minimum: int = 1) -> int:
    """
    Validate an integer count with a lower bound.

    Raises:
        ValueError: If the value is not an integer or is below ``minimum``.
    """
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ValueError(f"{name} must be an integer >= {minimum}")

    try:
        number = int(value)
    except ValueError:
        raise ValueError(f"{name} must be an integer >= {minimum}") from None

    if number < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")

    return number


def validate_even_order(order: Any) -> int:
    """
    Validate a band-pass filter order.

    Returns:
        int: The order, an even integer of at least 2.

    Raises:
        ValueError: If the order is odd or smaller than 2.
    """
    value = validate_count(order, "order", minimum=2)

    if value % 2:
        raise ValueError(f"order must be even, got {value}")

    return value
