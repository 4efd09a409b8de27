"""Exception hierarchy shared across the toolkit."""


class RgbdMassError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(RgbdMassError):
    """A mesh or data file could not be parsed."""


class MetadataError(RgbdMassError):
    """Model metadata is missing or invalid (mass, bounding box)."""


class DomainError(RgbdMassError):
    """An argument is outside the mathematical domain of an operation."""


class RenderError(RgbdMassError):
    """Camera/scene configuration is degenerate and cannot be rendered."""


class EmptyCorpusError(RgbdMassError):
    """No usable models were found in a model directory."""


class EmptyDepthError(RgbdMassError):
    """A depth image has no valid pixels to unproject."""


class DegenerateCloudError(RgbdMassError):
    """A point cloud has no real points left for the requested operation."""


class ShapeError(RgbdMassError):
    """Tensor or array shapes are inconsistent with the model contract."""


class EmptySetError(RgbdMassError):
    """A metric was asked to aggregate over an empty collection."""


class EmptyMaskError(RgbdMassError):
    """A depth metric mask selects no pixels."""


class EmptyDatasetError(RgbdMassError):
    """Batch construction was given no samples."""


class NonFiniteLossError(RgbdMassError):
    """Training produced a NaN or infinite loss."""


class VersionError(RgbdMassError):
    """A checkpoint file is unreadable or has an unsupported version."""


class CheckpointShapeError(ShapeError):
    """Checkpoint parameters do not match the model being loaded."""


class ConfigError(RgbdMassError):
    """An experiment config file contains unknown or malformed entries."""
