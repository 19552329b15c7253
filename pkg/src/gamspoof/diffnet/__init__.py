from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .features import featurize
from .model import MLP, Batch, ModelSpec, NumericError, Objective, ParamLayout, fd_hvp, one_hot
from .toy import GaussianWells, Quadratic, two_well

__all__ = [
    "Batch",
    "CheckpointError",
    "MLP",
    "ModelSpec",
    "NumericError",
    "Objective",
    "ParamLayout",
    "Quadratic",
    "GaussianWells",
    "fd_hvp",
    "featurize",
    "load_checkpoint",
    "one_hot",
    "save_checkpoint",
    "two_well",
]
