"""liftguard: lifting-posture sequence classification and live risk feedback."""

from .estimator import LiftingPostureClassifier
from .network import ArchitectureConfig, ModelParams, init_model, model_forward, softmax
from .pose import (
    Label,
    LabeledSequence,
    Landmark,
    PoseFrame,
    SequenceWindow,
    build_windows,
    canonicalize,
    extract_features,
)
from .training import TrainingConfig, TrainingHistory, split_dataset, train

__version__ = "0.1.0"

__all__ = [
    "ArchitectureConfig",
    "Label",
    "LabeledSequence",
    "Landmark",
    "LiftingPostureClassifier",
    "ModelParams",
    "PoseFrame",
    "SequenceWindow",
    "TrainingConfig",
    "TrainingHistory",
    "build_windows",
    "canonicalize",
    "extract_features",
    "init_model",
    "model_forward",
    "softmax",
    "split_dataset",
    "train",
]
