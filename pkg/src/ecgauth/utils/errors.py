from typing import Optional

from pathlib import Path


class EcgAuthError(Exception):
    """Base class for every error raised by the toolkit."""


class CorpusError(EcgAuthError, ValueError):
    """
    A corpus file is missing or malformed.

    Attributes:
        path (Optional[Path]): The offending file.
        line (Optional[int]): 1-based line number inside ``path``, when known.
    """

    def __init__(
        self, message: str, path: Optional[Path] = None, line: Optional[int] = None
    ) -> None:
        self.path = path
        self.line = line

        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "

        super().__init__(f"{location}{message}")


class ConfigError(CorpusError):
    """A run configuration file has an unknown key or an unparsable value."""


class FilterDesignError(EcgAuthError, ValueError):
    """A filter cannot be designed or safely applied."""


class SegmentationError(EcgAuthError, ValueError):
    """Heartbeat localisation or extraction failed."""


class FeatureError(EcgAuthError, ValueError):
    """Standardisation or PCA could not be fitted or applied."""


class ConvergenceError(EcgAuthError, RuntimeError):
    """
    An iterative solver stopped without meeting its tolerance.

    Attributes:
        residual (float): The optimality residual when the solver stopped.
    """

    def __init__(self, message: str, residual: float) -> None:
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class ProtocolViolation(EcgAuthError, AssertionError):
    """A protocol B training set still holds vectors of the excluded user."""


class StageError(EcgAuthError):
    """
    A pipeline stage failed.

    Attributes:
        stage (str): Name of the stage that raised.
    """

    def __init__(self, stage: str, cause: BaseException) -> None:
        self.stage = stage
        super().__init__(f"stage '{stage}' failed: {cause}")
