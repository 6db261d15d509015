"""Model layer: parameters, encoders, relation attention and checkpoints."""

from __future__ import annotations

from .checkpoint import load_checkpoint, save_checkpoint
from .encoders import (
    TokenMatrix,
    encode_image,
    encode_image_batch,
    encode_relation,
    encode_relation_batch,
    encode_text,
    encode_text_batch,
)
from .params import AttentionParams, ImageEncoderParams, MixerParams, ModelParams, TextEncoderParams
from .rcml import RCMLModel, RosterFeatures
from .relation_attention import (
    ContextualFeature,
    contextual_feature,
    relation_attention,
    relation_query,
    summary_mask,
)

__all__ = [
    "AttentionParams",
    "ContextualFeature",
    "ImageEncoderParams",
    "MixerParams",
    "ModelParams",
    "RCMLModel",
    "RosterFeatures",
    "TextEncoderParams",
    "TokenMatrix",
    "contextual_feature",
    "encode_image",
    "encode_image_batch",
    "encode_relation",
    "encode_relation_batch",
    "encode_text",
    "encode_text_batch",
    "load_checkpoint",
    "relation_attention",
    "relation_query",
    "save_checkpoint",
    "summary_mask",
]
