"""Exception types shared across the package."""


class BatsegError(Exception):
    """Base class for all batseg errors."""


class FormatError(BatsegError):
    """Malformed or truncated file."""


class UnsupportedError(BatsegError):
    """File uses a datatype or layout we do not handle."""


class IoError(BatsegError):
    """Underlying I/O failure while writing."""


class ShapeError(BatsegError):
    """Array dimensions do not match between operands."""


class ConfigError(BatsegError):
    """Invalid configuration or flag combination."""


class DomainError(BatsegError):
    """Input values outside the mathematical domain of an operation."""


class SizeError(BatsegError):
    """Input exceeds a hard size guard."""


class ManifestError(BatsegError):
    """Manifest refers to subjects that cannot be resolved, or is malformed."""


class DegenerateMaskError(BatsegError):
    """Binary mask with one side empty; distances to the opposite label are undefined.

    ``empty_side`` is ``"foreground"`` or ``"background"``.
    """

    def __init__(self, empty_side: str):
        self.empty_side = empty_side
        super().__init__(f"mask has no {empty_side} voxels")


class ClassAbsentError(BatsegError):
    """Ground truth does not contain the requested class."""

    def __init__(self, class_id: int):
        self.class_id = class_id
        super().__init__(f"ground truth contains no voxels of class {class_id}")
