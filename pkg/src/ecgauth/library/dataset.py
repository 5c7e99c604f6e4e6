from __future__ import annotations

from typing import Dict, Iterable, Mapping, Optional

import math
import logging
from pathlib import Path

import numpy as np

from ecgauth import config
from ecgauth.utils.errors import CorpusError
from ecgauth.utils.models import (
    Corpus,
    EcgTrace,
    IntArray,
    TraceKey,
    SessionId,
    ManifestRow,
    CorpusManifest,
)
from ecgauth.library.utils import format_float, parse_float
from ecgauth.library.validation import (
    validate_session,
    validate_subject,
    validate_fraction,
)

logger = logging.getLogger(__name__)

RATE_HEADER = "sample_rate_hz"
MANIFEST_COLUMNS = ("subject", "session", "recording", "path", "sample_rate_hz")


def trace_path(subject: str, session: SessionId, recording: int) -> str:
    """Relative path of a trace file inside a corpus directory."""
    return f"{subject}/{session}_r{recording}{config.TRACE_SUFFIX}"


def _parse_manifest(path: Path) -> CorpusManifest:
    if not path.is_file():
        raise CorpusError("manifest not found", path)

    schema_version = config.SCHEMA_VERSION
    rows: list[ManifestRow] = []
    seen: Dict[TraceKey, int] = {}

    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue

        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep and key.strip() == "schema_version":
                if not value.strip().isdigit():
                    raise CorpusError("malformed schema_version", path, number)
                schema_version = int(value.strip())
            continue

        fields = line.split("\t")
        if len(fields) != len(MANIFEST_COLUMNS):
            raise CorpusError(
                f"expected {len(MANIFEST_COLUMNS)} tab-separated columns, "
                f"got {len(fields)}",
                path,
                number,
            )

        subject, session, recording, rel_path, rate = (f.strip() for f in fields)

        try:
            validate_subject(subject)
            validate_session(session)
        except ValueError as error:
            raise CorpusError(str(error), path, number) from None

        if not recording.isdigit():
            raise CorpusError(f"malformed recording index {recording!r}", path, number)

        sample_rate = parse_float(rate, path, number)
        if sample_rate <= 0:
            raise CorpusError("sample_rate_hz must be positive", path, number)

        key: TraceKey = (subject, SessionId(session), int(recording))
        if key in seen:
            raise CorpusError(
                f"duplicate trace {key[0]}/{key[1]}/{key[2]} "
                f"(first listed on line {seen[key]})",
                path,
                number,
            )
        seen[key] = number

        if not (path.parent / rel_path).is_file():
            raise CorpusError(f"referenced trace {rel_path!r} not found", path, number)

        rows.append(ManifestRow(key[0], key[1], key[2], rel_path, sample_rate))

    subjects = tuple(sorted({row.subject for row in rows}))

    return CorpusManifest(subjects, tuple(rows), schema_version)


def _locate_bad_value(path: Path, tokens: list[str], first_line: int) -> None:
    for offset, token in enumerate(tokens):
        parse_float(token, path, first_line + offset)


def read_trace_file(path: Path) -> tuple[float, np.ndarray]:
    """
    Read one ``.ecg`` trace file.

    Args:
        path (Path): The trace file.

    Returns:
        tuple[float, np.ndarray]: The header sample rate and the samples.

    Raises:
        CorpusError: If the header is missing, a value is malformed or
            non-finite, or the file holds no samples.
    """
    if not path.is_file():
        raise CorpusError("trace file not found", path)

    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise CorpusError(f"missing '# {RATE_HEADER}=' header", path, 1)

    key, sep, value = lines[0][1:].strip().partition("=")
    if not sep or key.strip() != RATE_HEADER:
        raise CorpusError(f"missing '# {RATE_HEADER}=' header", path, 1)
    sample_rate = parse_float(value.strip(), path, 1)

    tokens = [line.strip() for line in lines[1:]]
    # Trailing blank lines are tolerated, blank lines between values are not
    while tokens and not tokens[-1]:
        tokens.pop()
    if not tokens:
        raise CorpusError("trace holds no samples", path, 2)

    try:
        samples = np.array(tokens, dtype=np.float64)
    except ValueError:
        _locate_bad_value(path, tokens, 2)
        raise

    if not np.all(np.isfinite(samples)):
        _locate_bad_value(path, tokens, 2)

    return sample_rate, samples


def write_trace_file(path: Path, trace: EcgTrace) -> None:
    """Write a trace with its rate header, one ``repr`` value per line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    body = "\n".join(format_float(v) for v in trace.samples)
    path.write_text(
        f"# {RATE_HEADER}={format_float(trace.sample_rate_hz)}\n{body}\n",
        encoding="utf-8",
    )


def load_corpus(root: Path) -> Corpus:
    """
    Load and validate every trace of a corpus directory.

    Args:
        root (Path): Directory holding ``manifest.tsv`` and the trace files.

    Returns:
        Corpus: The manifest plus one validated :class:`EcgTrace` per row.

    Raises:
        CorpusError: For a missing manifest, a malformed manifest row or sample
            file, a duplicate trace key, a non-finite sample or a header rate
            that disagrees with the manifest. The message names file and line.
    """
    root = Path(root)
    manifest_path = root / config.MANIFEST_NAME
    manifest = _parse_manifest(manifest_path)

    traces: Dict[TraceKey, EcgTrace] = {}

    for row in manifest.rows:
        path = root / row.path
        sample_rate, samples = read_trace_file(path)

        if sample_rate != row.sample_rate_hz:
            raise CorpusError(
                f"header rate {sample_rate} Hz disagrees with manifest rate "
                f"{row.sample_rate_hz} Hz",
                path,
                1,
            )

        trace = EcgTrace(row.subject, row.session, sample_rate, samples, row.recording)
        traces[trace.key] = trace

    logger.debug(
        "Loaded %d traces of %d subjects from %s",
        len(traces),
        len(manifest.subjects),
        root,
    )

    return Corpus(manifest, traces)


def save_corpus(
    traces: Iterable[EcgTrace],
    root: Path,
    peaks: Optional[Mapping[TraceKey, IntArray]] = None,
) -> CorpusManifest:
    """
    Write traces, their manifest and optional ``.peaks`` sidecars.

    Args:
        traces (Iterable[EcgTrace]): Traces to store; keys must be unique.
        root (Path): Destination directory, created if needed.
        peaks (Optional[Mapping[TraceKey, IntArray]]): Ground-truth R indices
            written next to the matching trace.

    Returns:
        CorpusManifest: The manifest that was written.

    Raises:
        CorpusError: If two traces share a (subject, session, recording) key.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)

    ordered = sorted(traces, key=lambda t: t.key)
    rows: list[ManifestRow] = []
    seen: set[TraceKey] = set()

    for trace in ordered:
        if trace.key in seen:
            raise CorpusError(f"duplicate trace {trace.key}", root)
        seen.add(trace.key)

        rel_path = trace_path(trace.subject, trace.session, trace.recording_index)
        write_trace_file(root / rel_path, trace)

        if peaks is not None and trace.key in peaks:
            write_peaks(
                (root / rel_path).with_suffix(config.PEAKS_SUFFIX), peaks[trace.key]
            )

        rows.append(
            ManifestRow(
                trace.subject,
                trace.session,
                trace.recording_index,
                rel_path,
                trace.sample_rate_hz,
            )
        )

    header = [
        f"# schema_version={config.SCHEMA_VERSION}",
        "# " + "\t".join(MANIFEST_COLUMNS),
    ]
    body = [
        "\t".join(
            (
                row.subject,
                row.session,
                str(row.recording),
                row.path,
                format_float(row.sample_rate_hz),
            )
        )
        for row in rows
    ]
    (root / config.MANIFEST_NAME).write_text(
        "\n".join(header + body) + "\n", encoding="utf-8"
    )

    subjects = tuple(sorted({row.subject for row in rows}))
    return CorpusManifest(subjects, tuple(rows), config.SCHEMA_VERSION)


def write_peaks(path: Path, indices: Iterable[int]) -> None:
    """Write one sample index per line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [str(int(i)) for i in indices]
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")


def load_peaks(path: Path) -> IntArray:
    """
    Read a ``.peaks`` sidecar.

    Raises:
        CorpusError: If the file is missing or a line is not a non-negative
            integer.
    """
    if not path.is_file():
        raise CorpusError("peak file not found", path)

    values: list[int] = []
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        token = raw.strip()
        if not token or token.startswith("#"):
            continue
        if not token.isdigit():
            raise CorpusError(f"malformed peak index {token!r}", path, number)
        values.append(int(token))

    return np.asarray(values, dtype=np.int64)


def concatenate_recordings(traces: Iterable[EcgTrace]) -> EcgTrace:
    """
    Join the recordings of one (subject, session) in recording order.

    The recordings are assumed to be contiguous, so the join is filtered as
    one signal. Between separately captured recordings the baseline jumps at
    each join. The high-pass then rings for about one transient length
    (about 12 s at 300 Hz with the default filter). Beats cut from that
    stretch are the most distant from the session median and are usually
    removed by outlier rejection. They are not removed explicitly. Each
    recording is not filtered separately because that would require every
    recording, not just the session, to be longer than three transient
    lengths.

    Raises:
        ValueError: If no trace is given, or the traces disagree on subject,
            session or sample rate.
    """
    ordered = sorted(traces, key=lambda t: t.recording_index)
    if not ordered:
        raise ValueError("No recordings to concatenate")

    first = ordered[0]
    for trace in ordered[1:]:
        if (trace.subject, trace.session) != (first.subject, first.session):
            raise ValueError("Recordings of different sessions cannot be joined")
        if trace.sample_rate_hz != first.sample_rate_hz:
            raise ValueError(
                f"Recordings of {first.subject}/{first.session} disagree on the "
                "sample rate"
            )

    samples = np.concatenate([trace.samples for trace in ordered])
    return EcgTrace(first.subject, first.session, first.sample_rate_hz, samples, 0)


def session_traces(corpus: Corpus) -> Dict[tuple[str, SessionId], EcgTrace]:
    """Concatenate every (subject, session) of ``corpus``, keyed by that pair."""
    return {
        (subject, session): concatenate_recordings(corpus.recordings(subject, session))
        for subject in corpus.subjects
        for session in corpus.sessions(subject)
    }


def split_index(n_samples: int, train_fraction: float) -> int:
    """Number of samples in the training part, ``floor(f * n)``."""
    validate_fraction(train_fraction, "train_fraction")
    # round() absorbs representation error such as 0.29 * 100 = 28.999...
    return math.floor(round(train_fraction * n_samples, 9))


def chronological_split(
    trace: EcgTrace, train_fraction: float = config.TRAIN_FRACTION
) -> tuple[EcgTrace, EcgTrace]:
    """
    Split a trace into a leading training part and a trailing test part.

    Args:
        trace (EcgTrace): The trace to split.
        train_fraction (float): Share of samples in the first part, in (0, 1).

    Returns:
        tuple[EcgTrace, EcgTrace]: ``floor(f * N)`` leading samples and the
            remainder, both carrying the original labels.

    Raises:
        ValueError: If the fraction is out of range or either part is empty.
    """
    index = split_index(trace.n_samples, train_fraction)

    if index == 0 or index == trace.n_samples:
        raise ValueError(
            f"Splitting {trace.n_samples} samples at {train_fraction} leaves an "
            "empty part"
        )

    return (
        trace.with_samples(trace.samples[:index]),
        trace.with_samples(trace.samples[index:]),
    )
