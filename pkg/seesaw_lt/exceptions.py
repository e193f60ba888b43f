"""
Custom exceptions for the seesaw_lt project.

This module defines specific exception types for the different components
of the library, so callers (and the CLI) can map failures to actionable
messages and exit codes.
"""

from typing import List, Optional, Sequence


class NumericsError(Exception):
    """Base exception for linear-algebra and differentiable primitive errors."""
    pass


class DimensionMismatchError(NumericsError):
    """Raised when operand shapes are incompatible."""
    def __init__(self, operation: str, expected: Sequence[int], actual: Sequence[int]):
        self.operation = operation
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        super().__init__(f"{operation}: expected shape {self.expected}, got {self.actual}")


class DegenerateNormError(NumericsError):
    """Raised when a backward pass meets a vector whose norm is below epsilon."""
    def __init__(self, message: str = "Cannot differentiate L2 normalization at a zero-norm vector", norm: Optional[float] = None):
        self.norm = norm
        super().__init__(f"{message}{f' (norm={norm:.3e})' if norm is not None else ''}")


class LossError(Exception):
    """Base exception for loss evaluation errors."""
    pass


class LabelOutOfRangeError(LossError):
    """Raised when a class label does not index into the logits."""
    def __init__(self, label: int, num_classes: int):
        self.label = label
        self.num_classes = num_classes
        super().__init__(f"Label {label} out of range for {num_classes} classes")


class NonFiniteLogitsError(LossError):
    """Raised when logits contain NaN or Inf."""
    def __init__(self, message: str = "Logits contain non-finite values"):
        super().__init__(message)


class DataError(Exception):
    """Base exception for dataset generation and IO errors."""
    pass


class InvalidSpecError(DataError):
    """Raised when a synthetic dataset specification cannot be realised."""
    pass


class DatasetFormatError(DataError):
    """Raised when a dataset CSV file or in-memory dataset is malformed."""
    pass


class CountsFormatError(DataError):
    """Raised when a recorded class-count file cannot be parsed."""
    pass


class TrainingError(Exception):
    """Base exception for training loop errors."""
    pass


class DivergenceError(TrainingError):
    """Raised when the training loss becomes non-finite or explodes."""
    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(f"Training diverged at epoch {epoch}, batch {batch} (loss={loss})")


class ConfigurationError(Exception):
    """Raised when there's an error in the configuration."""

    def __init__(self, message: str, validation_errors: Optional[List[str]] = None):
        self.message = message
        self.validation_errors = validation_errors or []
        error_details = ""
        if validation_errors:
            error_details = "\n- " + "\n- ".join(validation_errors)
        super().__init__(f"{message}{error_details}")


class CheckpointError(Exception):
    """Raised when there's an error with checkpoint operations."""
    pass
