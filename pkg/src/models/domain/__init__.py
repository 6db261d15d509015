"""Domain models shared by every layer: records, configurations and reports."""

from __future__ import annotations

from .configs import EvalConfig, GeneratorConfig, LossConfig, ModelConfig, TrainConfig
from .enums import Ablation, BetaOneMode, EvalTask, Modality, PairKind, Schedule, SimilarityMode
from .records import EOT_ID, PAD_ID, RelationEdge, Sample
from .reports import (
    ClipCheckReport,
    EpochRecord,
    GradCheckReport,
    MetricsReport,
    ParameterCheck,
    ParameterCount,
    TrainReport,
)

__all__ = [
    "EOT_ID",
    "PAD_ID",
    "Ablation",
    "BetaOneMode",
    "ClipCheckReport",
    "EpochRecord",
    "EvalConfig",
    "EvalTask",
    "GeneratorConfig",
    "GradCheckReport",
    "LossConfig",
    "MetricsReport",
    "Modality",
    "ModelConfig",
    "PairKind",
    "ParameterCheck",
    "ParameterCount",
    "RelationEdge",
    "Sample",
    "Schedule",
    "SimilarityMode",
    "TrainConfig",
    "TrainReport",
]
