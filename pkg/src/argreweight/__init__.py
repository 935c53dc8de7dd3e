"""Argument-reweighting post-selection decoding for stabilizer codes."""

__version__ = "0.1.0"

from .error_model import (  # noqa: E402
    DetectorErrorModel,
    ErrorMechanism,
    build_repetition_code,
    build_surface_code_phenomenological,
    canonicalize,
    check_matrices,
    format_dem,
    parse_dem,
)
from .estimator import ArgumentReweighting  # noqa: E402
from .reweighting import (  # noqa: E402
    Criterion,
    ReweightRule,
    Verdict,
    argument_reweighting,
    post_select,
    reweight_gap,
    reweight_ratio,
)
from .windowing import WindowLayout, decode_sliding_window  # noqa: E402

__all__ = [
    "ArgumentReweighting",
    "Criterion",
    "DetectorErrorModel",
    "ErrorMechanism",
    "ReweightRule",
    "Verdict",
    "WindowLayout",
    "argument_reweighting",
    "build_repetition_code",
    "build_surface_code_phenomenological",
    "canonicalize",
    "check_matrices",
    "decode_sliding_window",
    "format_dem",
    "parse_dem",
    "post_select",
    "reweight_gap",
    "reweight_ratio",
]
