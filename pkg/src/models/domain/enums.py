"""Enumerations shared across layers."""

from __future__ import annotations

from enum import Enum


class PairKind(str, Enum):
    """Whether a positive pair links a sample to itself or to another sample."""

    INTRA = "intra"
    INTER = "inter"


class Modality(str, Enum):
    TEXT = "text"
    IMAGE = "image"


class BetaOneMode(str, Enum):
    """Attention behaviour when the balance coefficient is exactly 1.

    ``SOFT`` applies the softmax to the 0/1 summary mask literally; ``HARD``
    skips the softmax and returns an exact one-hot at the summary position.
    """

    SOFT = "soft"
    HARD = "hard"


class SimilarityMode(str, Enum):
    """Which relation-conditioned embeddings of two samples are compared."""

    TT = "TT"
    II = "II"
    TI = "TI"
    IT = "IT"
    AVG = "AVG"


class Schedule(str, Enum):
    COSINE = "cosine"
    CONSTANT = "constant"


class Ablation(str, Enum):
    """Training variants compared by the ablation runner."""

    FULL = "full"
    NO_INTER_EDGE = "no_inter_edge"
    NO_INTRA_LOSS = "no_intra_loss"
    NO_EDGE_DESCRIPTION = "no_edge_description"
    FROZEN_ENCODERS = "frozen_encoders"


class EvalTask(str, Enum):
    ALL = "all"
    RETRIEVAL = "retrieval"
    TYPE = "type"
    VALIDITY = "validity"
