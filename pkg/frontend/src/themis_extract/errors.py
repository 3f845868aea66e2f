"""Error taxonomy for the extractor."""


class ExtractError(Exception):
    """Base class for all extractor failures."""


class InputError(ExtractError):
    """Bad series file, channel, or parameters."""


class SeriesTooShort(InputError):
    """The series has no usable points (T < 1)."""


class ModelLoadFailure(ExtractError):
    """The encoder checkpoint could not be loaded."""


class DeviceUnavailable(ExtractError):
    """The requested torch device is not usable."""
