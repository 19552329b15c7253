from .core import (
    ETA_0,
    ETA_MIN,
    AdamState,
    FlatnessEstimate,
    GamConfig,
    GamNumericError,
    GamStepTrace,
    adam_step,
    cosine_lr,
    early_stop,
    estimate_flatness,
    gam_direction,
    gam_step,
    sample_ball,
)
from .trainer import Dataset, EpochRecord, TrainConfig, TrainingError, TrainResult, train, write_log

__all__ = [
    "ETA_0",
    "ETA_MIN",
    "AdamState",
    "Dataset",
    "EpochRecord",
    "FlatnessEstimate",
    "GamConfig",
    "GamNumericError",
    "GamStepTrace",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "adam_step",
    "cosine_lr",
    "early_stop",
    "estimate_flatness",
    "gam_direction",
    "gam_step",
    "sample_ball",
    "train",
    "write_log",
]
