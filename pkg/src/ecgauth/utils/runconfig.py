from __future__ import annotations

from typing import Any, Dict, Mapping, Iterator, Optional

from enum import Enum
from pathlib import Path
from dataclasses import field, fields, replace, dataclass, is_dataclass

from ecgauth import config
from ecgauth.utils.errors import ConfigError
from ecgauth.utils.models import (
    HyperGrid,
    ModelKind,
    EvalConfig,
    SynthConfig,
    FilterConfig,
    SegmentationConfig,
)
from ecgauth.library.utils import format_float, sha256_digest
from ecgauth.library.validation import validate_count, validate_fraction

# Sections written as ``section.key=value``
SECTIONS = ("filter", "segmentation", "grid", "synth")

# Fields that never change results and stay out of the digest
UNDIGESTED = ("out_dir", "verbosity", "threads")

TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, tuple):
        return ",".join(_format(item) for item in value)
    return str(value)


def _parse(text: str, default: Any) -> Any:
    """Parse ``text`` into the type of ``default``."""
    if isinstance(default, bool):
        word = text.strip().lower()
        if word in TRUE_WORDS:
            return True
        if word in FALSE_WORDS:
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if isinstance(default, ModelKind):
        return ModelKind.parse(text.strip())
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        items = [item.strip() for item in text.split(",") if item.strip()]
        if not default:
            return tuple(items)
        return tuple(_parse(item, default[0]) for item in items)
    return text.strip()


@dataclass(frozen=True)
class RunConfig:
    """
    Every setting of an experiment run.

    Attributes:
        seed (int): Seed of every random choice (folds, synthetic data).
        out_dir (str): Directory receiving reports and logs.
        verbosity (int): -1 quiet, 0 normal, 1 debug.
        threads (int): Worker count, 0 for automatic.
        train_fraction (float): Leading share of each session used for training.
        n_components (int): Principal components kept.
        models (tuple[ModelKind, ...]): Classifiers evaluated.
        protocol_b_reselect (bool): Re-run model selection for every protocol
            B training set.
        dump_scores (bool): Write raw FAR/FRR curves next to the reports.
        filter (FilterConfig): Conditioning filter settings.
        segmentation (SegmentationConfig): Beat detection settings.
        grid (HyperGrid): Model selection candidates.
        synth (SynthConfig): Synthetic corpus settings.
    """

    seed: int = config.SEED
    out_dir: str = config.OUT_DIR
    verbosity: int = 0
    threads: int = 0
    train_fraction: float = config.TRAIN_FRACTION
    n_components: int = config.N_COMPONENTS
    models: tuple[ModelKind, ...] = tuple(ModelKind.parse(m) for m in config.MODELS)
    protocol_b_reselect: bool = config.PROTOCOL_B_RESELECT
    dump_scores: bool = config.DUMP_SCORES
    filter: FilterConfig = field(default_factory=FilterConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    grid: HyperGrid = field(default_factory=HyperGrid)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self) -> None:
        validate_count(self.seed, "seed", minimum=0)
        validate_count(self.threads, "threads", minimum=0)
        validate_count(self.n_components, "n_components")
        validate_fraction(self.train_fraction, "train_fraction")
        if not self.models:
            raise ValueError("At least one model is required")
        object.__setattr__(
            self, "models", tuple(dict.fromkeys(ModelKind(m) for m in self.models))
        )

    def items(self) -> Iterator[tuple[str, str]]:
        """Yield ``(key, value)`` pairs in file order."""
        for item in fields(self):
            value = getattr(self, item.name)
            if is_dataclass(value):
                for sub in fields(value):
                    yield f"{item.name}.{sub.name}", _format(getattr(value, sub.name))
            else:
                yield item.name, _format(value)

    def dumps(self, digest_only: bool = False) -> str:
        lines = [
            f"{key}={value}"
            for key, value in self.items()
            if not (digest_only and key in UNDIGESTED)
        ]
        return "\n".join(lines) + "\n"

    def dump(self, path: Path) -> None:
        """Write the configuration as flat ``key=value`` text."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = f"# ecgauth run configuration, digest {self.digest}\n"
        path.write_text(header + self.dumps(), encoding="utf-8")

    @property
    def digest(self) -> str:
        """SHA-256 prefix over every result-affecting setting."""
        return sha256_digest(self.dumps(digest_only=True))

    def merged(self, overrides: Mapping[str, Any]) -> RunConfig:
        """
        Return a copy with ``overrides`` applied.

        Keys use the file spelling (``seed``, ``grid.svm_c``). ``None`` values
        are ignored so unset CLI flags fall through to the file or default.
        Values may be text, parsed like the file form, or already typed.
        """
        top: Dict[str, Any] = {}
        nested: Dict[str, Dict[str, Any]] = {section: {} for section in SECTIONS}

        for key, value in overrides.items():
            if value is None:
                continue

            section, _, name = key.rpartition(".")
            if (section and section not in SECTIONS) or (not section and name in SECTIONS):
                raise ValueError(f"unknown configuration key {key!r}")

            owner = getattr(self, section) if section else self
            if name not in {item.name for item in fields(owner)}:
                raise ValueError(f"unknown configuration key {key!r}")

            if isinstance(value, str):
                value = _parse(value, getattr(owner, name))
            elif isinstance(getattr(owner, name), tuple) and not isinstance(value, tuple):
                value = tuple(value) if isinstance(value, list) else (value,)

            if section:
                nested[section][name] = value
            else:
                top[name] = value

        for section, changes in nested.items():
            if changes:
                top[section] = replace(getattr(self, section), **changes)

        return replace(self, **top)

    @classmethod
    def load(cls, path: Path, base: Optional[RunConfig] = None) -> RunConfig:
        """
        Read a ``key=value`` file over ``base`` (default settings if omitted).

        Raises:
            ConfigError: If a line is malformed, a key unknown or a value
                unparsable, naming the file and line.
        """
        path = Path(path)
        config_ = base or cls()

        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise ConfigError(f"cannot read configuration ({error})", path) from None

        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue

            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"expected key=value, got {line!r}", path, number)

            try:
                config_ = config_.merged({key.strip(): value.strip()})
            except (TypeError, ValueError) as error:
                raise ConfigError(str(error), path, number) from None

        return config_

    def eval_config(self, kind: ModelKind) -> EvalConfig:
        return EvalConfig(
            kind=kind,
            grid=self.grid,
            seed=self.seed,
            threads=self.threads,
            reselect=self.protocol_b_reselect,
        )


def resolve_run_config(
    config_path: Optional[Path],
    overrides: Mapping[str, Any],
    verbosity: int = 0,
) -> RunConfig:
    """
    Combine defaults, an optional configuration file and CLI flags.

    Flags win over the file, which wins over the defaults; flags left at
    ``None`` are ignored.
    """
    run_config = RunConfig(verbosity=verbosity)
    if config_path is not None:
        run_config = RunConfig.load(config_path, run_config)
    return run_config.merged(overrides)
