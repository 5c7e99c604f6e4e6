from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from ecgauth import config
from ecgauth.utils.models import Wave, SessionId, SynthConfig, SubjectTemplate
from ecgauth.library.synth import (
    WAVE_RANGES,
    emit_corpus,
    draw_r_times,
    render_trace,
    render_waves,
    sample_subject,
    split_recordings,
)
from ecgauth.library.dataset import load_peaks, load_corpus, session_traces


def _regular_template(drift: float = 0.5) -> SubjectTemplate:
    waves = tuple(Wave(*(float(np.mean(r)) for r in ranges)) for ranges in WAVE_RANGES)
    return SubjectTemplate(waves, 1.0, 0.0, np.full(15, drift))


def _files(root: Path) -> dict[str, bytes]:
    return {
        str(path.relative_to(root)): path.read_bytes()
        for path in sorted(root.rglob("*"))
        if path.is_file()
    }


def test_sampled_templates_are_valid(rng: np.random.Generator) -> None:
    for _ in range(200):
        template = sample_subject(rng)
        assert max(abs(w.amplitude_mv) for w in template.waves) == template.waves[2].amplitude_mv


def test_regular_rhythm_peak_count() -> None:
    cfg = SynthConfig(duration_s=60.0)
    _, peaks = render_trace(_regular_template(), cfg, SessionId.S1, np.random.default_rng(0))

    assert 59 <= len(peaks) <= 61
    np.testing.assert_array_equal(np.diff(peaks.indices), 300)


def test_rr_floor(rng: np.random.Generator) -> None:
    waves = _regular_template().waves
    template = SubjectTemplate(waves, 0.5, 0.5, np.zeros(15))

    times = draw_r_times(template, 120.0, rng)
    assert np.all(np.diff(times) >= config.RR_FLOOR_S - 1e-12)


def test_no_drift_keeps_sessions_identical() -> None:
    cfg = SynthConfig(session_drift=0.0).without_noise()
    template = _regular_template()

    s1, _ = render_trace(template, cfg, SessionId.S1, np.random.default_rng(3))
    s2, _ = render_trace(template, cfg, SessionId.S2, np.random.default_rng(3))

    np.testing.assert_array_equal(s1.samples, s2.samples)
    np.testing.assert_array_equal(
        template.session_waves(SessionId.S2, 0.0), template.session_waves(SessionId.S1, 0.0)
    )


def test_drift_changes_the_second_session() -> None:
    template = _regular_template(drift=1.0)
    s1 = template.session_waves(SessionId.S1, 0.15)
    s2 = template.session_waves(SessionId.S2, 0.15)

    np.testing.assert_allclose(s2, 1.15 * s1)


def test_noiseless_trace_is_the_sum_of_waves(rng: np.random.Generator) -> None:
    cfg = SynthConfig(duration_s=30.0).without_noise()
    template = sample_subject(rng)

    trace, _ = render_trace(template, cfg, SessionId.S2, np.random.default_rng(9))

    n = trace.n_samples
    r_times = draw_r_times(template, n / cfg.sample_rate_hz, np.random.default_rng(9))
    expected = render_waves(
        template.session_waves(SessionId.S2, cfg.session_drift), r_times, n, cfg.sample_rate_hz
    )
    np.testing.assert_array_equal(trace.samples, expected)


def test_ground_truth_sits_on_the_r_maxima(rng: np.random.Generator) -> None:
    cfg = SynthConfig(duration_s=30.0).without_noise()

    for _ in range(3):
        trace, peaks = render_trace(sample_subject(rng), cfg, SessionId.S1, rng)
        for index in peaks.indices:
            lo, hi = max(0, index - 10), min(trace.n_samples, index + 11)
            assert abs(lo + int(np.argmax(trace.samples[lo:hi])) - index) <= 2


def test_split_recordings_keeps_every_sample(rng: np.random.Generator) -> None:
    trace, peaks = render_trace(sample_subject(rng), SynthConfig(duration_s=20.0), SessionId.S1, rng)
    pieces = split_recordings(trace, peaks, 3)

    np.testing.assert_array_equal(np.concatenate([p.samples for p, _ in pieces]), trace.samples)
    assert [p.recording_index for p, _ in pieces] == [0, 1, 2]
    assert sum(len(local) for _, local in pieces) == len(peaks)
    assert all(np.all(local < p.n_samples) for p, local in pieces)


def test_emitted_corpus_layout(tmp_path: Path) -> None:
    cfg = SynthConfig(n_subjects=10, duration_s=20.0, seed=4)
    manifest = emit_corpus(cfg, tmp_path)

    assert manifest.subjects[0] == "s01"
    assert manifest.subjects[-1] == "s10"
    assert len(manifest.rows) == 10 * 2 * cfg.recordings

    corpus = load_corpus(tmp_path)
    assert len(session_traces(corpus)) == 20
    for row in manifest.rows:
        peaks = load_peaks((tmp_path / row.path).with_suffix(config.PEAKS_SUFFIX))
        assert peaks.size > 0


def test_same_seed_same_bytes(tmp_path: Path) -> None:
    cfg = SynthConfig(n_subjects=3, duration_s=20.0, seed=8)
    emit_corpus(cfg, tmp_path / "a")
    emit_corpus(cfg, tmp_path / "b")

    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_different_seeds_differ(tmp_path: Path) -> None:
    emit_corpus(SynthConfig(n_subjects=2, duration_s=20.0, seed=1), tmp_path / "a")
    emit_corpus(SynthConfig(n_subjects=2, duration_s=20.0, seed=2), tmp_path / "b")

    first, second = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert first.keys() == second.keys()
    assert first != second


def test_config_validation() -> None:
    with pytest.raises(ValueError):
        SynthConfig(n_subjects=1)
    with pytest.raises(ValueError):
        SynthConfig(white_mv=-0.1)
    with pytest.raises(ValueError):
        SynthConfig(duration_s=0.0)
