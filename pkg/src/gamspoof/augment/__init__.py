from .policy import (
    FILTER_SET,
    MIX_SET,
    NOISE_SET,
    PRESETS,
    AugmentPolicy,
    TransformSpec,
    apply_policy,
    cascade,
    random_set,
    single,
    utterance_rng,
)
from .primitives import (
    CATALOG,
    AugmentContext,
    ConfigurationError,
    RirBank,
    amplitude_mix,
    apply_rir,
    compand,
    compress,
    expand,
    mixup,
    rawboost,
    time_mask,
)

__all__ = [
    "AugmentContext",
    "AugmentPolicy",
    "CATALOG",
    "ConfigurationError",
    "FILTER_SET",
    "MIX_SET",
    "NOISE_SET",
    "PRESETS",
    "RirBank",
    "TransformSpec",
    "amplitude_mix",
    "apply_policy",
    "apply_rir",
    "cascade",
    "compand",
    "compress",
    "expand",
    "mixup",
    "random_set",
    "rawboost",
    "single",
    "time_mask",
    "utterance_rng",
]
