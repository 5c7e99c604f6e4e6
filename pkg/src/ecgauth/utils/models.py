from __future__ import annotations

from typing import Any, Dict, Iterator, NamedTuple, Optional, Union

from enum import StrEnum
from dataclasses import field, replace, dataclass

import numpy as np
import numpy.typing as npt

from ecgauth import config
from ecgauth.library.validation import (
    validate_count,
    validate_session,
    validate_subject,
    validate_fraction,
    validate_positive,
    validate_even_order,
    validate_non_negative,
)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]
BoolArray = npt.NDArray[np.bool_]


def _frozen(values: Any, dtype: Any = np.float64) -> Any:
    """Copy ``values`` into a read-only array of the given dtype."""
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


class SessionId(StrEnum):
    S1 = "S1"
    S2 = "S2"


class ModelKind(StrEnum):
    SVM_RBF = "svm_rbf"
    LOGISTIC = "logistic"
    KNN = "knn"

    @classmethod
    def parse(cls, value: str) -> ModelKind:
        """
        Parse a model kind, accepting the short CLI spelling ``svm``.

        Raises:
            ValueError: If the name matches no kind.
        """
        if value == "svm":
            return cls.SVM_RBF
        return cls(value)

    @property
    def short(self) -> str:
        return "svm" if self is ModelKind.SVM_RBF else self.value


class Protocol(StrEnum):
    A = "A"
    B = "B"


class Condition(NamedTuple):
    train: SessionId
    test: SessionId

    @property
    def slug(self) -> str:
        return f"{self.train}_{self.test}"

    def __str__(self) -> str:
        return f"{self.train} / {self.test}"


CONDITIONS: tuple[Condition, ...] = (
    Condition(SessionId.S1, SessionId.S1),
    Condition(SessionId.S2, SessionId.S2),
    Condition(SessionId.S1, SessionId.S2),
)

TraceKey = tuple[str, SessionId, int]


# Corpus


@dataclass(frozen=True, eq=False)
class EcgTrace:
    """
    One uniformly sampled single-lead recording.

    Attributes:
        subject (str): Subject id.
        session (SessionId): Acquisition session.
        sample_rate_hz (float): Sampling rate in samples per second.
        samples (FloatArray): Read-only voltages in millivolts.
        recording_index (int): Which of the repeated recordings this is.
    """

    subject: str
    session: SessionId
    sample_rate_hz: float
    samples: FloatArray
    recording_index: int = 0

    def __post_init__(self) -> None:
        validate_subject(self.subject)
        object.__setattr__(self, "session", SessionId(self.session))
        object.__setattr__(
            self, "sample_rate_hz", validate_positive(self.sample_rate_hz, "sample_rate_hz")
        )

        samples = _frozen(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("Trace samples must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise ValueError("Trace samples must be finite")

        object.__setattr__(self, "samples", samples)

    @property
    def key(self) -> TraceKey:
        return self.subject, self.session, self.recording_index

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def with_samples(self, samples: FloatArray) -> EcgTrace:
        """Return a copy carrying the same labels and new samples."""
        return EcgTrace(
            self.subject,
            self.session,
            self.sample_rate_hz,
            samples,
            self.recording_index,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EcgTrace):
            return NotImplemented
        return (
            self.key == other.key
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.samples, other.samples)
        )

    def __hash__(self) -> int:
        return hash(self.key)


class ManifestRow(NamedTuple):
    subject: str
    session: SessionId
    recording: int
    path: str
    sample_rate_hz: float


@dataclass(frozen=True)
class CorpusManifest:
    subjects: tuple[str, ...]
    rows: tuple[ManifestRow, ...]
    schema_version: int = config.SCHEMA_VERSION


@dataclass(frozen=True, eq=False)
class Corpus:
    """A loaded manifest plus every trace it references."""

    manifest: CorpusManifest
    traces: Dict[TraceKey, EcgTrace]

    @property
    def subjects(self) -> tuple[str, ...]:
        return self.manifest.subjects

    def recordings(self, subject: str, session: SessionId) -> list[EcgTrace]:
        """Return the recordings of one (subject, session), in recording order."""
        return [
            self.traces[key]
            for key in sorted(self.traces)
            if key[0] == subject and key[1] == session
        ]

    def sessions(self, subject: str) -> list[SessionId]:
        return sorted({key[1] for key in self.traces if key[0] == subject})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return (
            self.manifest.subjects == other.manifest.subjects
            and self.manifest.schema_version == other.manifest.schema_version
            and self.traces.keys() == other.traces.keys()
            and all(self.traces[key] == other.traces[key] for key in self.traces)
        )


# Signal conditioning


@dataclass(frozen=True)
class FilterConfig:
    mains_hz: float = config.MAINS_HZ
    mains_q: float = config.MAINS_Q
    hp_cutoff_hz: float = config.HP_CUTOFF_HZ
    lp_cutoff_hz: float = config.LP_CUTOFF_HZ
    order: int = config.FILTER_ORDER

    def validate(self, sample_rate_hz: float) -> FilterConfig:
        """
        Check the band edges against a sampling rate.

        Raises:
            ValueError: If ``0 < hp < lp < fs/2`` or ``mains < fs/2`` fails, or
                the order is not even.
        """
        nyquist = validate_positive(sample_rate_hz, "sample_rate_hz") / 2
        hp = validate_positive(self.hp_cutoff_hz, "hp_cutoff_hz")
        lp = validate_positive(self.lp_cutoff_hz, "lp_cutoff_hz")
        validate_positive(self.mains_q, "mains_q")
        validate_even_order(self.order)

        if not hp < lp:
            raise ValueError(f"hp cutoff {hp} Hz must be below lp cutoff {lp} Hz")
        if lp >= nyquist:
            raise ValueError(f"lp cutoff {lp} Hz must be below Nyquist {nyquist} Hz")
        if validate_positive(self.mains_hz, "mains_hz") >= nyquist:
            raise ValueError(
                f"mains frequency {self.mains_hz} Hz must be below Nyquist {nyquist} Hz"
            )

        return self


@dataclass(frozen=True, eq=False)
class BiquadCascade:
    """
    Second-order sections ``b0 b1 b2 a0 a1 a2`` applied in sequence.

    Attributes:
        sos (FloatArray): Section matrix of shape (n_sections, 6), ``a0 == 1``.
        description (str): Design parameters that produced the cascade.
    """

    sos: FloatArray
    description: str

    def __post_init__(self) -> None:
        sos = _frozen(self.sos)
        if sos.ndim != 2 or sos.shape[1] != 6 or sos.shape[0] == 0:
            raise ValueError("A cascade needs at least one 6-coefficient section")
        object.__setattr__(self, "sos", sos)

    @property
    def n_sections(self) -> int:
        return int(self.sos.shape[0])


# Segmentation


@dataclass(frozen=True)
class SegmentationConfig:
    wavelet_scale_s: float = config.WAVELET_SCALE_S
    threshold_window_s: float = config.THRESHOLD_WINDOW_S
    threshold_factor: float = config.THRESHOLD_FACTOR
    refractory_s: float = config.REFRACTORY_S
    pre_r_s: float = config.PRE_R_S
    post_r_s: float = config.POST_R_S
    reject_fraction: float = config.REJECT_FRACTION
    refine_s: float = config.REFINE_S

    def __post_init__(self) -> None:
        validate_positive(self.wavelet_scale_s, "wavelet_scale_s")
        validate_positive(self.threshold_window_s, "threshold_window_s")
        validate_positive(self.threshold_factor, "threshold_factor")
        validate_non_negative(self.refractory_s, "refractory_s")
        validate_non_negative(self.pre_r_s, "pre_r_s")
        validate_non_negative(self.post_r_s, "post_r_s")
        validate_fraction(self.reject_fraction, "reject_fraction", allow_zero=True)
        validate_non_negative(self.refine_s, "refine_s")

        if self.pre_r_s + self.post_r_s <= 0:
            raise ValueError("pre_r_s + post_r_s must be positive")


@dataclass(frozen=True, eq=False)
class PeakList:
    indices: IntArray
    trace_ref: TraceKey

    def __post_init__(self) -> None:
        indices = _frozen(self.indices, np.int64).reshape(-1)
        if indices.size > 1 and not np.all(np.diff(indices) > 0):
            raise ValueError("Peak indices must be strictly increasing")
        object.__setattr__(self, "indices", indices)

    def __len__(self) -> int:
        return int(self.indices.size)


@dataclass(frozen=True, eq=False)
class BeatMatrix:
    """
    Fixed-width heartbeat windows of one (subject, session).

    Attributes:
        beats (FloatArray): One row per beat, ``width`` samples each.
        subject (str): Subject id.
        session (SessionId): Acquisition session.
        origin_peaks (PeakList): R index of every row, relative to the trace.
        sample_rate_hz (float): Sampling rate of the source trace.
        offset (int): Samples between a window's first sample and its R peak.
    """

    beats: FloatArray
    subject: str
    session: SessionId
    origin_peaks: PeakList
    sample_rate_hz: float
    offset: int

    def __post_init__(self) -> None:
        beats = _frozen(self.beats)
        if beats.ndim != 2:
            raise ValueError("Beats must form a 2-D matrix")
        if beats.shape[0] != len(self.origin_peaks):
            raise ValueError("Every beat needs exactly one origin peak")
        if not np.all(np.isfinite(beats)):
            raise ValueError("Beat values must be finite")
        object.__setattr__(self, "beats", beats)
        object.__setattr__(self, "session", SessionId(self.session))

    @property
    def n_beats(self) -> int:
        return int(self.beats.shape[0])

    @property
    def width(self) -> int:
        return int(self.beats.shape[1])

    @property
    def onsets(self) -> IntArray:
        return self.origin_peaks.indices - self.offset

    def take(self, rows: IntArray) -> BeatMatrix:
        """Return the given rows, keeping their relative order."""
        return BeatMatrix(
            self.beats[rows],
            self.subject,
            self.session,
            PeakList(self.origin_peaks.indices[rows], self.origin_peaks.trace_ref),
            self.sample_rate_hz,
            self.offset,
        )


@dataclass(frozen=True)
class SessionBeats:
    """Cleaned beats of one (subject, session) split chronologically."""

    train: BeatMatrix
    test: BeatMatrix
    peaks: PeakList
    split_index: int


# Features


class FeatureStatus(StrEnum):
    OK = "ok"
    RANK_DEFICIENT = "rank_deficient"


@dataclass(frozen=True, eq=False)
class FeatureModel:
    """
    z-score statistics and PCA basis fitted on training beats.

    Attributes:
        feature_mean (FloatArray): Column means, length W.
        feature_scale (FloatArray): Floored population standard deviations.
        components (FloatArray): Orthonormal rows, shape (K, W).
        explained_variance (FloatArray): Non-increasing eigenvalues, length K.
        total_variance (float): Trace of the standardized covariance.
        rank (int): Numerical rank of that covariance.
        status (FeatureStatus): ``rank_deficient`` when fewer than the
            requested components carry variance.
    """

    feature_mean: FloatArray
    feature_scale: FloatArray
    components: FloatArray
    explained_variance: FloatArray
    total_variance: float
    rank: int
    status: FeatureStatus = FeatureStatus.OK

    def __post_init__(self) -> None:
        for name in (
            "feature_mean",
            "feature_scale",
            "components",
            "explained_variance",
        ):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n_components(self) -> int:
        return int(self.components.shape[0])

    @property
    def width(self) -> int:
        return int(self.components.shape[1])

    @property
    def explained_variance_ratio(self) -> FloatArray:
        if self.total_variance <= 0:
            return np.zeros_like(self.explained_variance)
        return np.asarray(self.explained_variance / self.total_variance)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: FloatArray
    subject: str
    session: SessionId
    genuine_label: bool = False


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """
    Feature vectors stacked row-wise with their labels.

    Attributes:
        values (FloatArray): Shape (n, K).
        subjects (tuple[str, ...]): Subject of every row.
        sessions (tuple[SessionId, ...]): Session of every row.
    """

    values: FloatArray
    subjects: tuple[str, ...]
    sessions: tuple[SessionId, ...]

    def __post_init__(self) -> None:
        values = _frozen(self.values)
        if values.ndim != 2:
            raise ValueError("Feature values must form a 2-D matrix")
        if not (values.shape[0] == len(self.subjects) == len(self.sessions)):
            raise ValueError("Every feature row needs a subject and a session")
        if not np.all(np.isfinite(values)):
            raise ValueError("Feature values must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __iter__(self) -> Iterator[FeatureVector]:
        for row, subject, session in zip(self.values, self.subjects, self.sessions):
            yield FeatureVector(row, subject, session)

    @property
    def dimension(self) -> int:
        return int(self.values.shape[1])

    @property
    def subject_array(self) -> npt.NDArray[np.str_]:
        return np.asarray(self.subjects, dtype=np.str_)

    @property
    def unique_subjects(self) -> list[str]:
        return sorted(set(self.subjects))

    def take(self, rows: IntArray) -> FeatureSet:
        return FeatureSet(
            self.values[rows],
            tuple(self.subjects[i] for i in rows),
            tuple(self.sessions[i] for i in rows),
        )

    def select(self, mask: BoolArray) -> FeatureSet:
        return self.take(np.flatnonzero(mask))

    def of(self, subject: str) -> FeatureSet:
        return self.select(self.subject_array == subject)

    def without(self, subject: str) -> FeatureSet:
        return self.select(self.subject_array != subject)

    @classmethod
    def concat(cls, parts: list[FeatureSet], dimension: int) -> FeatureSet:
        if not parts:
            return cls(np.empty((0, dimension)), (), ())
        return cls(
            np.vstack([part.values for part in parts]),
            tuple(s for part in parts for s in part.subjects),
            tuple(s for part in parts for s in part.sessions),
        )


# Classifiers


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """Feature vectors labelled relative to one target subject."""

    features: FeatureSet
    target: str

    def __post_init__(self) -> None:
        labels = self.labels
        if not labels.any() or labels.all():
            raise ValueError(
                f"Training data for {self.target} needs at least one genuine and "
                "one impostor vector"
            )

    @property
    def labels(self) -> BoolArray:
        return np.asarray(self.features.subject_array == self.target)

    @property
    def signs(self) -> FloatArray:
        return np.where(self.labels, 1.0, -1.0)

    @property
    def class_weights(self) -> FloatArray:
        """Per-sample weights ``n / (2 n_class)``, inversely proportional to class size."""
        labels = self.labels
        n = labels.size
        n_pos = int(labels.sum())
        return np.where(labels, n / (2.0 * n_pos), n / (2.0 * (n - n_pos)))

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self) -> Iterator[FeatureVector]:
        for vector in self.features:
            yield FeatureVector(
                vector.values,
                vector.subject,
                vector.session,
                vector.subject == self.target,
            )


Params = Dict[str, float]


@dataclass(frozen=True)
class HyperGrid:
    svm_c: tuple[float, ...] = config.SVM_C
    svm_gamma: tuple[float, ...] = config.SVM_GAMMA
    knn_k: tuple[int, ...] = config.KNN_K
    logistic_l2: tuple[float, ...] = config.LOGISTIC_L2
    folds: int = config.CV_FOLDS

    def __post_init__(self) -> None:
        for name in ("svm_c", "svm_gamma", "knn_k", "logistic_l2"):
            if not getattr(self, name):
                raise ValueError(f"Hyperparameter list {name} must not be empty")
        for value in (*self.svm_c, *self.svm_gamma):
            validate_positive(value, "svm grid value")
        for value in self.logistic_l2:
            validate_non_negative(value, "logistic_l2")
        for k in self.knn_k:
            validate_count(k, "knn_k")
        validate_count(self.folds, "folds", minimum=2)

    def candidates(self, kind: ModelKind) -> list[Params]:
        """
        List the grid of ``kind`` from simplest to most complex model.

        SVMs order by C then gamma ascending, logistic models by decreasing
        l2 and kNN by decreasing k.
        """
        if kind is ModelKind.SVM_RBF:
            return [
                {"C": c, "gamma": g}
                for c in sorted(self.svm_c)
                for g in sorted(self.svm_gamma)
            ]
        if kind is ModelKind.LOGISTIC:
            return [{"l2": l2} for l2 in sorted(self.logistic_l2, reverse=True)]
        return [{"k": float(k)} for k in sorted(self.knn_k, reverse=True)]


@dataclass(frozen=True, eq=False)
class SvmPayload:
    support_vectors: FloatArray
    alpha_y: FloatArray  # alpha_i * y_i of every support vector
    support_indices: IntArray
    bias: float
    gamma: float
    C: float
    box: FloatArray  # per support vector upper bound C * w_y
    kkt_residual: float
    n_iter: int


@dataclass(frozen=True, eq=False)
class LogisticPayload:
    weights: FloatArray
    bias: float
    l2: float
    grad_norm: float
    n_iter: int
    converged: bool
    loss_history: FloatArray


@dataclass(frozen=True, eq=False)
class KnnPayload:
    vectors: FloatArray
    labels: BoolArray
    k: int


Payload = Union[SvmPayload, LogisticPayload, KnnPayload]


@dataclass(frozen=True)
class CvCandidate:
    params: Params
    fold_scores: tuple[float, ...]

    @property
    def mean_score(self) -> float:
        return float(np.mean(self.fold_scores))


@dataclass(frozen=True)
class CvReport:
    kind: ModelKind
    folds: int
    seed: int
    candidates: tuple[CvCandidate, ...]
    chosen: Params


@dataclass(frozen=True, eq=False)
class AuthModel:
    target: str
    kind: ModelKind
    payload: Payload
    decision_threshold: float
    hyperparameters: Params
    cv_report: Optional[CvReport] = None

    @property
    def dimension(self) -> int:
        if isinstance(self.payload, SvmPayload):
            return int(self.payload.support_vectors.shape[1])
        if isinstance(self.payload, LogisticPayload):
            return int(self.payload.weights.size)
        return int(self.payload.vectors.shape[1])


# Evaluation


@dataclass(frozen=True, eq=False)
class ScoreSet:
    genuine: FloatArray
    impostor: FloatArray
    target: str = ""
    condition: Optional[Condition] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "genuine", _frozen(self.genuine).reshape(-1))
        object.__setattr__(self, "impostor", _frozen(self.impostor).reshape(-1))

    def require_both(self) -> None:
        """
        Raises:
            ValueError: If either score list is empty.
        """
        if self.genuine.size == 0 or self.impostor.size == 0:
            raise ValueError("Both genuine and impostor scores are required")


@dataclass(frozen=True)
class EvalEntry:
    target: str
    value: float
    threshold: float
    n_genuine: int
    n_impostor: int
    excluded_user: Optional[str] = None
    hter: Optional[float] = None


@dataclass(frozen=True)
class EvalConfig:
    kind: ModelKind = ModelKind.SVM_RBF
    grid: HyperGrid = field(default_factory=HyperGrid)
    seed: int = config.SEED
    threads: int = 0
    reselect: bool = config.PROTOCOL_B_RESELECT


@dataclass(frozen=True)
class EvalReport:
    """
    Per-user and aggregate results of one protocol run.

    ``per_user`` maps each evaluated target to its metric value; in protocol
    B that is the mean over the excluded users listed in ``entries``.
    """

    protocol: Protocol
    condition: Condition
    kind: ModelKind
    metric: str
    entries: tuple[EvalEntry, ...]
    per_user: Dict[str, float]
    mean: float
    std: float
    seed: int
    config_digest: str
    skipped: tuple[str, ...] = ()
    n_trainings: int = 0
    mean_hter: Optional[float] = None
    scores: tuple[ScoreSet, ...] = field(default=(), compare=False, repr=False)

    @property
    def slug(self) -> str:
        return f"{self.protocol.lower()}_{self.condition.slug}"


@dataclass(frozen=True)
class ConditionData:
    """
    Feature vectors of one experiment condition.

    Attributes:
        condition (Condition): Training and test sessions.
        train (FeatureSet): Training partitions of the training session.
        test (FeatureSet): Test partitions of the test session.
        skipped (tuple[str, ...]): Users left out for missing data.
    """

    condition: Condition
    train: FeatureSet
    test: FeatureSet
    skipped: tuple[str, ...] = ()

    @property
    def users(self) -> list[str]:
        return sorted(set(self.train.subjects) & set(self.test.subjects))


# Synthetic data


WAVES = ("P", "Q", "R", "S", "T")


class Wave(NamedTuple):
    amplitude_mv: float
    center_s: float
    width_s: float


@dataclass(frozen=True, eq=False)
class SubjectTemplate:
    """
    Sum-of-Gaussians beat morphology of one synthetic subject.

    Attributes:
        waves (tuple[Wave, ...]): P, Q, R, S, T in that order.
        mean_rr_s (float): Mean RR interval.
        rr_jitter_s (float): Standard deviation of the RR interval.
        drift (FloatArray): Per-parameter drift direction in ``[-1, 1]``,
            one entry per wave parameter (15 values).
    """

    waves: tuple[Wave, ...]
    mean_rr_s: float
    rr_jitter_s: float
    drift: FloatArray

    def __post_init__(self) -> None:
        object.__setattr__(self, "drift", _frozen(self.drift))
        if len(self.waves) != len(WAVES) or self.drift.size != 3 * len(WAVES):
            raise ValueError("A template needs five waves and fifteen drift values")
        if any(wave.width_s <= 0 for wave in self.waves):
            raise ValueError("Wave widths must be positive")
        if not 0.5 <= self.mean_rr_s <= 1.5:
            raise ValueError("mean_rr_s must lie in [0.5, 1.5]")
        r_amp = self.waves[WAVES.index("R")].amplitude_mv
        if any(abs(w.amplitude_mv) >= r_amp for i, w in enumerate(self.waves) if i != 2):
            raise ValueError("The R wave must dominate the beat")

    @property
    def wave_params(self) -> FloatArray:
        return np.array([list(wave) for wave in self.waves], dtype=np.float64)

    def session_waves(self, session: SessionId, drift: float) -> FloatArray:
        """Wave parameters (5 x 3) as rendered in ``session``."""
        params = self.wave_params
        if session is SessionId.S2 and drift:
            params = params * (1.0 + drift * self.drift.reshape(params.shape))
        return params

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubjectTemplate):
            return NotImplemented
        return (
            self.waves == other.waves
            and self.mean_rr_s == other.mean_rr_s
            and self.rr_jitter_s == other.rr_jitter_s
            and np.array_equal(self.drift, other.drift)
        )

    def __hash__(self) -> int:
        return hash((self.waves, self.mean_rr_s, self.rr_jitter_s))


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = config.SYNTH_SUBJECTS
    duration_s: float = config.SYNTH_DURATION_S
    sample_rate_hz: float = config.SYNTH_SAMPLE_RATE_HZ
    baseline_mv: float = config.SYNTH_BASELINE_MV
    baseline_hz: float = config.SYNTH_BASELINE_HZ
    mains_mv: float = config.SYNTH_MAINS_MV
    mains_hz: float = config.SYNTH_MAINS_HZ
    white_mv: float = config.SYNTH_WHITE_MV
    session_drift: float = config.SYNTH_DRIFT
    seed: int = config.SEED
    recordings: int = config.SYNTH_RECORDINGS

    def __post_init__(self) -> None:
        validate_count(self.n_subjects, "n_subjects", minimum=2)
        validate_count(self.recordings, "recordings")
        validate_positive(self.duration_s, "duration_s")
        validate_positive(self.sample_rate_hz, "sample_rate_hz")
        for name in (
            "baseline_mv",
            "baseline_hz",
            "mains_mv",
            "mains_hz",
            "white_mv",
            "session_drift",
        ):
            validate_non_negative(getattr(self, name), name)
        validate_count(self.seed, "seed", minimum=0)

    def without_noise(self) -> SynthConfig:
        return replace(self, baseline_mv=0.0, mains_mv=0.0, white_mv=0.0)


def session_of(value: str) -> SessionId:
    """Parse a session label into a :class:`SessionId`."""
    return SessionId(validate_session(value))
