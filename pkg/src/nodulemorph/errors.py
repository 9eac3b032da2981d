"""Exception types raised by the nodulemorph package."""


class NoduleMorphError(Exception):
    """Base class for all package-specific errors."""


class FormatError(NoduleMorphError, ValueError):
    """A file or record does not match its expected format."""


class LabelError(NoduleMorphError, ValueError):
    """A TI-RADS category string cannot be mapped to a class label."""


class EmptyMaskError(NoduleMorphError, ValueError):
    """An operation requiring foreground pixels received an empty mask."""


class ShapeMismatchError(NoduleMorphError, ValueError):
    """Array dimensions do not match the operation's contract."""


class FitError(NoduleMorphError, ValueError):
    """Fitting a preprocessing step failed (e.g. empty training set)."""


class ResampleError(NoduleMorphError, ValueError):
    """SMOTE cannot run, e.g. fewer than two minority samples."""


class TrainingError(NoduleMorphError, ValueError):
    """Classifier training received unusable data (e.g. a single class)."""


class DivergenceError(NoduleMorphError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class StratificationError(NoduleMorphError, ValueError):
    """Stratified folding is impossible for the given labels and k."""


class EvaluationError(NoduleMorphError, ValueError):
    """An evaluation run has no usable inputs."""


class ConfigError(NoduleMorphError, ValueError):
    """A run configuration value or key is invalid."""
