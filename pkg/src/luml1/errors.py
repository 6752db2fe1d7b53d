"""Exception types shared across the package."""


class LumL1Error(Exception):
    """Base class for all package errors."""


class InvalidInputError(LumL1Error):
    """An operation received arguments that violate its contract."""


class FormatError(LumL1Error):
    """An image or checkpoint file is malformed."""


class CorruptCheckpointError(FormatError):
    """A checkpoint payload failed its checksum."""


class NumericalError(LumL1Error):
    """Training or optimization produced non-finite values."""
