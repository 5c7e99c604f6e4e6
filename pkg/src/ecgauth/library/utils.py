from typing import Any, Dict, Iterable, Mapping, Optional, TypeVar

import os
import logging
import hashlib
from pathlib import Path

import numpy as np
from tqdm import tqdm

from ecgauth import config
from ecgauth.utils.errors import CorpusError

T = TypeVar("T")

BLOCK_MARK = "@"


def format_float(value: float) -> str:
    """
    Shortest text that parses back to exactly ``value``.

    Args:
        value (float): The number to format.

    Returns:
        str: Its ``repr``, which round-trips bit-exactly through ``float()``.
    """
    return repr(float(value))


def parse_float(token: str, path: Path, line: int) -> float:
    """
    Parse a finite decimal, attributing failures to a file position.

    Raises:
        CorpusError: If the token is not a number or is not finite.
    """
    try:
        value = float(token)
    except ValueError:
        raise CorpusError(f"malformed value {token!r}", path, line) from None

    if not np.isfinite(value):
        raise CorpusError(f"non-finite value {token!r}", path, line)

    return value


def write_labeled(
    path: Path,
    meta: Mapping[str, Any],
    blocks: Mapping[str, np.ndarray],
) -> None:
    """
    Write named matrices plus ``key=value`` metadata as text.

    Every block starts with a ``@ name rows cols`` line followed by one line
    per row. Vectors are stored as a single row.

    Args:
        path (Path): Destination file.
        meta (Mapping[str, Any]): Metadata written as ``# key=value`` lines.
        blocks (Mapping[str, np.ndarray]): Matrices to store, in order.
    """
    lines = [f"# {key}={value}" for key, value in meta.items()]

    for name, block in blocks.items():
        matrix = np.asarray(block, dtype=np.float64)
        if matrix.ndim == 1:
            matrix = matrix.reshape(1 if matrix.size else 0, matrix.size)
        rows, cols = matrix.shape
        lines.append(f"{BLOCK_MARK} {name} {rows} {cols}")
        lines.extend(" ".join(format_float(v) for v in row) for row in matrix)

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labeled(path: Path) -> tuple[Dict[str, str], Dict[str, np.ndarray]]:
    """
    Read a file written by :func:`write_labeled`.

    Args:
        path (Path): Source file.

    Returns:
        tuple[Dict[str, str], Dict[str, np.ndarray]]: Metadata and 2-D blocks.

    Raises:
        CorpusError: If the file is missing, a header is malformed, a row has
            the wrong number of values or a value is not a finite number.
    """
    if not path.is_file():
        raise CorpusError("file not found", path)

    meta: Dict[str, str] = {}
    blocks: Dict[str, np.ndarray] = {}

    name: Optional[str] = None
    rows: list[list[float]] = []
    expected = (0, 0)

    def close(line: int) -> None:
        if name is None:
            return
        if len(rows) != expected[0]:
            raise CorpusError(
                f"block {name!r} has {len(rows)} rows, expected {expected[0]}",
                path,
                line,
            )
        blocks[name] = np.array(rows, dtype=np.float64).reshape(expected)

    text = path.read_text(encoding="utf-8").splitlines()

    for number, raw in enumerate(text, start=1):
        line = raw.strip()
        if not line:
            continue

        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue

        if line.startswith(BLOCK_MARK):
            close(number)
            parts = line[1:].split()
            if len(parts) != 3 or not parts[1].isdigit() or not parts[2].isdigit():
                raise CorpusError("malformed block header", path, number)
            name, rows, expected = parts[0], [], (int(parts[1]), int(parts[2]))
            continue

        if name is None:
            raise CorpusError("value outside of a block", path, number)

        values = [parse_float(token, path, number) for token in line.split()]
        if len(values) != expected[1]:
            raise CorpusError(
                f"row has {len(values)} values, expected {expected[1]}", path, number
            )
        rows.append(values)

    close(len(text))

    return meta, blocks


def sha256_digest(data: str, length: int = 16) -> str:
    """Return the first ``length`` hex characters of the SHA-256 of ``data``."""
    return hashlib.sha256(data.encode("utf-8")).hexdigest()[:length]


def thread_count(requested: int = 0) -> int:
    """
    Resolve the worker count for parallel stages.

    Args:
        requested (int): Explicit thread count, 0 for automatic.

    Returns:
        int: ``requested`` (or the CPU count when 0), capped by the
            ``ECG_AUTH_THREADS`` environment variable when it is set.
    """
    count = requested if requested > 0 else (os.cpu_count() or 1)

    cap = os.environ.get(config.THREADS_ENV, "").strip()
    if cap.isdigit() and int(cap) > 0:
        count = min(count, int(cap))

    return max(count, 1)


def progress(
    iterable: Iterable[T], total: Optional[int] = None, desc: str = ""
) -> Iterable[T]:
    """
    Wrap ``iterable`` in a progress bar.

    The bar is hidden when the ``ecgauth`` logger is quieter than INFO; tqdm
    itself hides it when stderr is not a terminal.
    """
    enabled = logging.getLogger("ecgauth").isEnabledFor(logging.INFO)
    return tqdm(  # type: ignore[no-any-return]
        iterable,
        total=total,
        desc=desc,
        leave=False,
        disable=None if enabled else True,
    )
