"""Frozen encoder embedding extractor writing THEM files."""

from .errors import (
    DeviceUnavailable,
    ExtractError,
    InputError,
    ModelLoadFailure,
    SeriesTooShort,
)
from .extractor import ExtractorConfig, extract, load_series, plan_windows
from .them_format import write_them
from .tokenizer import TokenizerConfig, mean_scale, tokenize_window

__version__ = "0.1.0"

__all__ = [
    "DeviceUnavailable",
    "ExtractError",
    "ExtractorConfig",
    "InputError",
    "ModelLoadFailure",
    "SeriesTooShort",
    "TokenizerConfig",
    "extract",
    "load_series",
    "mean_scale",
    "plan_windows",
    "tokenize_window",
    "write_them",
    "__version__",
]
