from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ecgauth import config
from ecgauth.utils.errors import CorpusError
from ecgauth.utils.models import EcgTrace, SessionId
from ecgauth.library.dataset import (
    load_peaks,
    write_peaks,
    load_corpus,
    save_corpus,
    split_index,
    session_traces,
    read_trace_file,
    chronological_split,
    concatenate_recordings,
)
from ecgauth.library.validation import (
    validate_count,
    validate_session,
    validate_subject,
    validate_fraction,
    validate_positive,
    validate_even_order,
)


def _trace(n: int = 10, subject: str = "s01", recording: int = 0) -> EcgTrace:
    return EcgTrace(subject, SessionId.S1, 300.0, np.arange(n, dtype=float), recording)


def _write_corpus(root: Path, body: str, trace: str = "# sample_rate_hz=300.0\n1.0\n2.0\n") -> None:
    (root / "s01").mkdir(parents=True, exist_ok=True)
    (root / "s01" / "S1_r0.ecg").write_text(trace, encoding="utf-8")
    (root / config.MANIFEST_NAME).write_text(body, encoding="utf-8")


def test_validators_accept_and_reject() -> None:
    assert validate_subject("s-01.a_b") == "s-01.a_b"
    assert validate_session("S2") == "S2"
    assert validate_positive("2.5", "x") == 2.5
    assert validate_fraction(0.0, "f", allow_zero=True) == 0.0
    assert validate_count("3", "n") == 3
    assert validate_even_order(4) == 4

    for call in (
        lambda: validate_subject(""),
        lambda: validate_subject("a b"),
        lambda: validate_session("S3"),
        lambda: validate_positive(0, "x"),
        lambda: validate_positive(float("nan"), "x"),
        lambda: validate_positive(True, "x"),
        lambda: validate_fraction(1.0, "f"),
        lambda: validate_fraction(0.0, "f"),
        lambda: validate_count(0, "n"),
        lambda: validate_even_order(3),
    ):
        with pytest.raises(ValueError):
            call()


def test_split_sizes() -> None:
    trace = EcgTrace("s01", SessionId.S1, 300.0, np.zeros(240 * 300))
    train, test = chronological_split(trace, 0.8)

    assert train.duration_s == 192.0
    assert test.duration_s == 48.0
    assert train.subject == test.subject == "s01"

    half, rest = chronological_split(_trace(10), 0.5)
    assert half.n_samples == rest.n_samples == 5
    np.testing.assert_array_equal(np.concatenate([half.samples, rest.samples]), np.arange(10))


def test_split_uses_floor_and_rejects_empty_parts() -> None:
    assert split_index(100, 0.29) == 29
    assert split_index(7, 0.5) == 3

    with pytest.raises(ValueError):
        chronological_split(_trace(1), 0.5)
    with pytest.raises(ValueError):
        chronological_split(_trace(10), 1.0)


def test_trace_samples_are_read_only() -> None:
    trace = _trace()
    with pytest.raises(ValueError):
        trace.samples[0] = 5.0


def test_save_then_load_is_bit_exact(tmp_path: Path) -> None:
    rng = np.random.default_rng(3)
    traces = [
        EcgTrace(subject, session, 250.0, rng.standard_normal(50), recording)
        for subject in ("s01", "s02")
        for session in SessionId
        for recording in (0, 1)
    ]
    manifest = save_corpus(traces, tmp_path)
    corpus = load_corpus(tmp_path)

    assert manifest.subjects == ("s01", "s02")
    assert len(corpus.traces) == 8
    for trace in traces:
        loaded = corpus.traces[trace.key]
        assert loaded == trace
        assert loaded.samples.tobytes() == trace.samples.tobytes()


def test_missing_manifest(tmp_path: Path) -> None:
    with pytest.raises(CorpusError, match="manifest not found"):
        load_corpus(tmp_path)


def test_non_finite_sample_names_file_and_line(tmp_path: Path) -> None:
    _write_corpus(
        tmp_path,
        "s01\tS1\t0\ts01/S1_r0.ecg\t300.0\n",
        trace="# sample_rate_hz=300.0\n1.0\nnan\n3.0\n",
    )

    with pytest.raises(CorpusError) as excinfo:
        load_corpus(tmp_path)

    assert excinfo.value.line == 3
    assert excinfo.value.path == tmp_path / "s01" / "S1_r0.ecg"
    assert "S1_r0.ecg:3" in str(excinfo.value)


def test_malformed_sample(tmp_path: Path) -> None:
    path = tmp_path / "bad.ecg"
    path.write_text("# sample_rate_hz=300\n0.1\nabc\n", encoding="utf-8")

    with pytest.raises(CorpusError, match="malformed value"):
        read_trace_file(path)


def test_duplicate_trace_key(tmp_path: Path) -> None:
    row = "s01\tS1\t0\ts01/S1_r0.ecg\t300.0\n"
    _write_corpus(tmp_path, row + row)

    with pytest.raises(CorpusError, match="duplicate") as excinfo:
        load_corpus(tmp_path)
    assert excinfo.value.line == 2


def test_rate_mismatch(tmp_path: Path) -> None:
    _write_corpus(tmp_path, "s01\tS1\t0\ts01/S1_r0.ecg\t250.0\n")

    with pytest.raises(CorpusError, match="disagrees"):
        load_corpus(tmp_path)


def test_missing_trace_file(tmp_path: Path) -> None:
    _write_corpus(tmp_path, "s01\tS1\t1\ts01/S1_r1.ecg\t300.0\n")

    with pytest.raises(CorpusError, match="not found"):
        load_corpus(tmp_path)


def test_comments_and_schema_version(tmp_path: Path) -> None:
    _write_corpus(
        tmp_path,
        "# schema_version=3\n# subject\tsession\n\ns01\tS1\t0\ts01/S1_r0.ecg\t300.0\n",
    )
    corpus = load_corpus(tmp_path)

    assert corpus.manifest.schema_version == 3
    assert corpus.subjects == ("s01",)


def test_concatenate_in_recording_order() -> None:
    first = EcgTrace("s01", SessionId.S1, 300.0, [1.0, 2.0], 0)
    second = EcgTrace("s01", SessionId.S1, 300.0, [3.0], 1)

    joined = concatenate_recordings([second, first])
    np.testing.assert_array_equal(joined.samples, [1.0, 2.0, 3.0])

    other = EcgTrace("s01", SessionId.S1, 200.0, [3.0], 1)
    with pytest.raises(ValueError, match="sample rate"):
        concatenate_recordings([first, other])


def test_session_traces_groups_recordings(corpus_dir: Path) -> None:
    corpus = load_corpus(corpus_dir)
    traces = session_traces(corpus)

    assert len(traces) == 2 * len(corpus.subjects)
    for (subject, session), trace in traces.items():
        parts = corpus.recordings(subject, session)
        assert trace.n_samples == sum(p.n_samples for p in parts)


def test_peaks_sidecar(tmp_path: Path) -> None:
    path = tmp_path / "t.peaks"
    write_peaks(path, [3, 10, 42])
    np.testing.assert_array_equal(load_peaks(path), [3, 10, 42])

    path.write_text("3\n-1\n", encoding="utf-8")
    with pytest.raises(CorpusError):
        load_peaks(path)
