"""Exception hierarchy shared by every fairhealth module.

All errors derive from :class:`FairHealthError`, which is itself a
``ValueError`` so callers that only care about bad input can catch that.
"""


class FairHealthError(ValueError):
    """Base class for all library errors."""


class InvalidInputError(FairHealthError):
    """Malformed, misaligned, or non-finite input data."""


class InvalidConfigError(FairHealthError):
    """A configuration parameter is outside its valid range."""


class InsufficientGroupsError(FairHealthError):
    """Fewer than two non-empty groups are available for a pairwise metric."""


class MissingTruthsError(FairHealthError):
    """A metric needs ground-truth labels but none were supplied."""


class DegenerateGroupError(FairHealthError):
    """A group has no positives (TPR undefined) or no negatives (FPR undefined)."""

    def __init__(self, group, rate):
        self.group = group
        self.rate = rate
        missing = "positive" if rate == "TPR" else "negative"
        super().__init__(f"group {group!r} has no {missing} truths; {rate} is undefined")


class CorruptUpdateError(FairHealthError):
    """A sparse update references positions outside its declared length."""


class SchemaViolationError(FairHealthError):
    """A CSV header does not satisfy its schema."""


class RowError(FairHealthError):
    """A single CSV cell failed validation."""

    def __init__(self, line, column, message):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column!r}: {message}")


class TrainingDivergedError(FloatingPointError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, loss):
        self.epoch = epoch
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
