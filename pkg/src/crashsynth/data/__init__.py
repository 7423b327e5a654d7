"""Sample-window data model: ingestion, windowing, normalization, splits."""

from crashsynth.data.ndjson import read_samples, write_samples
from crashsynth.data.normalize import (
    NormalizationSpec,
    denormalize_sample,
    fit_spec,
    normalize_sample,
)
from crashsynth.data.schema import CRASH_SCHEMA, SampleSchema
from crashsynth.data.split import DatasetSplit, required_generated, split_and_balance
from crashsynth.data.windows import SampleWindow, build_window, make_flags, trim

__all__ = [
    "CRASH_SCHEMA",
    "DatasetSplit",
    "NormalizationSpec",
    "SampleSchema",
    "SampleWindow",
    "build_window",
    "denormalize_sample",
    "fit_spec",
    "make_flags",
    "normalize_sample",
    "read_samples",
    "required_generated",
    "split_and_balance",
    "trim",
    "write_samples",
]
