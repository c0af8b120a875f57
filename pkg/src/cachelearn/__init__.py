"""Online-learning cache policies under full and partial observation."""
from .core import (CacheSet, InvariantViolation, Mode, Observation, Policy, Request,
                   StaticPolicy, observe_signal, step)
from .policies_full import LFU, LRU, WLFU, LFULite, default_window
from .policies_partial import CBFPS, CBMPS, CBSI, CBSILite, StructuralInfo
from .workloads import (ChangeSchedule, PopularityProfile, RequestTrace, TraceParseError,
                        change_trace, load_trace, profile_sequence_trace, sample_irm,
                        save_trace, zipf_profile)

POLICIES = {
    "lfu": LFU,
    "wlfu": WLFU,
    "lfulite": LFULite,
    "lru": LRU,
    "mps": CBMPS,
    "si": CBSI,
    "silite": CBSILite,
    "fps": CBFPS,
}

__version__ = "0.1.0"

__all__ = [
    "CacheSet", "InvariantViolation", "Mode", "Observation", "Policy", "Request",
    "StaticPolicy", "observe_signal", "step",
    "LFU", "LRU", "WLFU", "LFULite", "default_window",
    "CBFPS", "CBMPS", "CBSI", "CBSILite", "StructuralInfo",
    "ChangeSchedule", "PopularityProfile", "RequestTrace", "TraceParseError",
    "change_trace", "load_trace", "profile_sequence_trace", "sample_irm", "save_trace",
    "zipf_profile", "POLICIES",
]
