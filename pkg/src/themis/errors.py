"""Exception hierarchy.

Input/format problems map to CLI exit code 1, numerical failures to exit
code 2 (see :mod:`themis.cli`).
"""


class ThemisError(Exception):
    """Base class for all package errors."""


class InputError(ThemisError):
    """Bad input data, files, or configuration."""


class NumericalError(ThemisError):
    """A numerical routine failed."""


# --- dataset_io ---------------------------------------------------------

class MissingFile(InputError):
    pass


class BadHeader(InputError):
    pass


class ChannelOutOfRange(InputError):
    pass


class NonFiniteValue(InputError):
    def __init__(self, row: int, detail: str = ""):
        self.row = row
        super().__init__(f"non-finite or unparsable value at data row {row}"
                         + (f": {detail}" if detail else ""))


class NonBinaryLabel(InputError):
    def __init__(self, row: int, value=None):
        self.row = row
        super().__init__(f"label at data row {row} is not 0/1"
                         + (f" (got {value!r})" if value is not None else ""))


# --- embedding_store ----------------------------------------------------

class BadMagic(InputError):
    pass


class UnsupportedVersion(InputError):
    pass


class UnsupportedDtype(InputError):
    pass


class TruncatedPayload(InputError):
    pass


class DimensionOverflow(InputError):
    pass


# --- similarity / adapters ----------------------------------------------

class DegenerateBatch(InputError):
    pass


class TooFewPoints(InputError):
    pass


class TrimExhaustsData(InputError):
    pass


class PartitionMismatch(InputError):
    pass


class EigensolveFailure(NumericalError):
    pass


# --- thresholding / evaluation / cli -------------------------------------

class TooFewPeaks(InputError):
    pass


class EmptyTruth(InputError):
    """Ground truth contains no anomalous point; recall is undefined."""


class EmptySeries(InputError):
    pass


class MissingArtifacts(InputError):
    pass
