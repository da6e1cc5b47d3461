"""Exception taxonomy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 2,
MissingDependencyError -> 3, DataError (and subclasses) -> 4.
"""


class TenkError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TenkError):
    """Invalid or inconsistent pipeline configuration."""


class MissingDependencyError(TenkError):
    """A stage was invoked before an upstream artifact exists."""

    def __init__(self, path, producing_stage: str):
        self.path = str(path)
        self.producing_stage = producing_stage
        super().__init__(
            f"missing artifact {self.path!r}; run the {producing_stage!r} stage first"
        )


class DataError(TenkError):
    """Input data violates a documented contract."""


class UniverseError(DataError):
    """Malformed or duplicated rows in a company universe file."""


class TransientFetchError(DataError):
    """Network fetch failed after retries."""

    def __init__(self, message: str, cik: str = ""):
        self.cik = cik
        super().__init__(message)


class CorruptDocumentError(DataError):
    """A fetched filing document is empty or unreadable."""

    def __init__(self, accession_id: str, message: str = ""):
        self.accession_id = accession_id
        super().__init__(message or f"corrupt document for accession {accession_id}")


class UnparseableFilingError(DataError):
    """No target item section could be extracted from a filing."""


class UnresolvableDateError(DataError):
    """No trading observation exists within the slip window of a date."""


class InvalidPriceError(DataError):
    """A price value is non-positive or a price file is malformed."""


class InfeasiblePlanError(DataError):
    """The universe is too small for the requested number of folds."""


class DegenerateTrainingError(DataError):
    """A training split contains a single class for the target horizon."""


class TrainingFailureError(DataError):
    """Training diverged (non-finite loss)."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"non-finite training loss at epoch {epoch}")


class PredictionSchemaError(DataError):
    """A prediction file violates the exchange schema."""
