"""Exception types shared across the package."""


class RfDriftError(Exception):
    """Base class for all package errors."""


class ValidationError(RfDriftError):
    """A config/recipe field is missing or out of range."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class FramingError(RfDriftError):
    """Sample stream length is inconsistent with the requested framing."""


class CapacityError(RfDriftError):
    """Not enough frames available to build the requested dataset."""

    def __init__(self, device_id, requested, available):
        self.device_id = device_id
        self.requested = requested
        self.available = available
        super().__init__(
            f"device {device_id}: requested {requested} frames but only "
            f"{available} available (short by {requested - available})"
        )


class StorageError(RfDriftError):
    """I/O failure while writing a recording."""


class TruncatedDataError(RfDriftError):
    """Recording data file ends mid-sample."""


class UnsupportedDatatypeError(RfDriftError):
    """Metadata names a datatype this reader does not handle."""


class TrainingDivergedError(RfDriftError):
    """Loss became NaN/Inf during training."""


class MergeError(RfDriftError):
    """Result bundles are incompatible and cannot be aggregated."""
