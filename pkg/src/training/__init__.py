"""Training: positive pairs and negatives, the contrastive objective, AdamW and the fit loop."""

from __future__ import annotations

from .checks import clip_check, model_grad_check, random_samples
from .objective import BatchFeatures, batch_features, clip_reduction_loss, contrastive_term, loss_terms, total_loss
from .optimizer import AdamState, AdamW, clip_grad_norm, lr_schedule, optimizer_step
from .pairing import (
    BatchSampler,
    PairBatch,
    PositivePair,
    assemble_batch,
    build_positive_set,
    generic_intra_relation,
    sample_negatives,
)
from .trainer import FitResult, fit, make_sampler, validation_hit

__all__ = [
    "AdamState",
    "AdamW",
    "BatchFeatures",
    "BatchSampler",
    "FitResult",
    "PairBatch",
    "PositivePair",
    "assemble_batch",
    "batch_features",
    "clip_check",
    "build_positive_set",
    "clip_grad_norm",
    "clip_reduction_loss",
    "contrastive_term",
    "fit",
    "generic_intra_relation",
    "loss_terms",
    "lr_schedule",
    "make_sampler",
    "model_grad_check",
    "optimizer_step",
    "random_samples",
    "sample_negatives",
    "total_loss",
    "validation_hit",
]
