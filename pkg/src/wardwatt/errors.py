"""Exception and warning types shared across the package."""


class WardwattError(Exception):
    """Base class for domain errors; the CLI maps these to exit code 1."""


class IngestError(WardwattError):
    """Raised for unreadable or malformed input files.

    ``row`` is the 1-based data row that triggered the failure, when known.
    """

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class PreprocessError(WardwattError):
    """Raised when cleaning cannot produce a fully observed series."""


class DegenerateScaleError(WardwattError):
    """Raised when min-max scaling is requested on a constant series."""


class FitError(WardwattError):
    """Raised when a model fit cannot be completed."""


class TrainingDivergenceError(FitError):
    """Raised when a training loss becomes non-finite.

    ``epoch`` is the 1-based epoch in which divergence was detected.
    """

    def __init__(self, message: str, epoch: int):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


class ShapError(WardwattError):
    """Raised for unusable attribution systems (e.g. singular WLS)."""


class ConfigError(WardwattError):
    """Raised for invalid pipeline configuration; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class StageError(WardwattError):
    """Raised when a CLI stage fails; names the stage for the error line."""

    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


class DataGapWarning(UserWarning):
    """Structured warning for missing values found at ingestion.

    Carries the count and the 1-based data rows of the gaps so callers can
    log or surface them without re-parsing the message.
    """

    def __init__(self, count: int, rows: tuple[int, ...]):
        shown = ", ".join(str(r) for r in rows[:8])
        tail = "" if count <= 8 else f", ... ({count - 8} more)"
        super().__init__(f"{count} missing value(s) at data row(s) {shown}{tail}")
        self.count = count
        self.rows = rows
