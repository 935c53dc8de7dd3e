from .base import (
    BaseDecoder,
    BruteForceCapError,
    DecodingError,
    NotMatchableError,
    SyndromeTooDenseError,
    UnsolvableSyndromeError,
    log_probability,
)
from .bp import BpConfig, BpOsdDecoder, BpResult, decode_bp, decode_bp_osd, decode_osd0, tanner_graph
from .brute_force import BruteForceMLDecoder, MLResult, decode_ml_bruteforce
from .matching import MatchingGraph, MwpmDecoder, build_matching_graph, decode_mwpm, edge_weight

DECODERS = {
    "bposd": BpOsdDecoder,
    "mwpm": MwpmDecoder,
    "ml": BruteForceMLDecoder,
}

__all__ = [
    "BaseDecoder",
    "BpConfig",
    "BpOsdDecoder",
    "BpResult",
    "BruteForceCapError",
    "BruteForceMLDecoder",
    "DECODERS",
    "DecodingError",
    "MLResult",
    "MatchingGraph",
    "MwpmDecoder",
    "NotMatchableError",
    "SyndromeTooDenseError",
    "UnsolvableSyndromeError",
    "build_matching_graph",
    "decode_bp",
    "decode_bp_osd",
    "decode_ml_bruteforce",
    "decode_mwpm",
    "decode_osd0",
    "edge_weight",
    "log_probability",
    "tanner_graph",
]
