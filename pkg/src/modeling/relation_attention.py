"""Relation-conditioned attention pooling.

Given a relation embedding ``h_E`` and a token matrix ``H`` of one modality,
pooling runs in three steps:

1. ``relation_query``: bilinear relevance of every token to the relation,
   ``q[t] = <W_Q h_E, W_K H[:, t]> / sqrt(d)``, padding set to ``-inf``.
2. ``relation_attention``: ``softmax((1 - beta) q + beta B)`` where ``B``
   is the summary mask (one-hot on the EOT / summary token for intra-sample
   pairs, zero for inter-sample pairs).
3. ``contextual_feature``: ``z = l2_normalize((A (W_V H)ᵀ) W_o)``.

All three accept leading batch dimensions that broadcast like
``numpy.matmul``. A ``(C, 1, d)`` stack of relation embeddings against an
``(N, d, L)`` token batch yields ``(C, N, 1, L)`` attention rows and
``(C, N, d)`` features.

.. code-block:: python

    h = encode_relation(params.text, relation_tokens)
    H = encode_text(params.text, item_tokens)
    q = relation_query(h, H, params.attention)
    B = summary_mask(PairKind.INTER, H.length, int(H.summary_index))
    A = relation_attention(q, B, params.attention)
    z = contextual_feature(A, H, params.attention).z

"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..exceptions import BoundsError, ContractError, EmptyAttentionError, ShapeError
from ..models.domain.enums import Modality, PairKind
from ..tensor_core import Tensor, ops
from ..types import BoolArray, FloatArray, IntArray
from .encoders import TokenMatrix
from .params import AttentionParams


@dataclass(frozen=True)
class ContextualFeature:
    """Unit-norm relation-conditioned embedding.

    Attributes
    ----------
    z : Tensor
        ``(..., d)`` unit vectors
    relation_id : str
        Label of the conditioning relation
    modality : Modality
        Which tower produced the token matrix

    """

    z: Tensor
    relation_id: str = ""
    modality: Modality = Modality.TEXT


def relation_query(h_e: Tensor, tokens: TokenMatrix, params: AttentionParams) -> Tensor:
    """Scaled bilinear relevance of each token to the relation: ``(..., 1, L)``.

    Raises
    ------
    ShapeError
        If the relation width differs from the token feature width

    """
    dim = tokens.dim
    if h_e.shape[-1] != dim or params.dim != dim:
        raise ShapeError(f"relation width {h_e.shape[-1]} does not match token width {dim}")
    projected = ops.matmul(params.w_q, ops.reshape(h_e, (*h_e.shape, 1)))
    keys = ops.matmul(params.w_k, tokens.features)
    scores = ops.mul(ops.matmul(ops.transpose(projected), keys), 1.0 / math.sqrt(dim))
    pad = tokens.pad_mask[..., None, :]
    return ops.masked_fill(scores, np.broadcast_to(pad, scores.shape), -np.inf)


def summary_mask(pair_kind: PairKind, length: int, summary_index: int) -> Tensor:
    """Binary ``(1, L)`` row: one-hot at ``summary_index`` for intra pairs, zeros for inter pairs.

    Raises
    ------
    BoundsError
        If ``summary_index`` is not in ``[0, L)``

    """
    if not 0 <= summary_index < length:
        raise BoundsError(f"summary index {summary_index} outside [0, {length})")
    row = np.zeros((1, length))
    if PairKind(pair_kind) is PairKind.INTRA:
        row[0, summary_index] = 1.0
    return Tensor(row)


def summary_masks(active: bool | BoolArray, summary_index: IntArray, length: int) -> FloatArray:
    """Batched summary masks ``(N, 1, L)`` with one-hot rows where ``active``."""
    index = np.asarray(summary_index, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= length):
        raise BoundsError(f"summary index outside [0, {length})")
    rows = np.zeros((index.size, 1, length))
    rows[np.arange(index.size), 0, index] = 1.0
    return rows * np.asarray(active, dtype=np.float64).reshape(-1, 1, 1)


def relation_attention(q: Tensor, mask: Tensor | FloatArray, params: AttentionParams) -> Tensor:
    """Attention weights ``softmax((1 - beta) q + beta B)``.

    Padded positions are the ``-inf`` entries of ``q`` and always receive
    exactly zero weight. With ``beta = 1`` and hard mode, the softmax is
    skipped and the weights are the exact one-hot of ``B``.

    Raises
    ------
    EmptyAttentionError
        If every position of some row is padded
    ContractError
        In hard mode, if a row of ``B`` has no active position

    """
    b = mask if isinstance(mask, Tensor) else Tensor(mask)
    pad = np.isneginf(q.data)
    if np.all(pad, axis=-1).any():
        raise EmptyAttentionError("attention row with every position padded")

    if params.hard_summary:
        hot = np.broadcast_to(b.data, q.shape) * ~pad
        if np.any(hot.sum(axis=-1) != 1.0):
            raise ContractError("hard summary attention needs exactly one active, unpadded mask position per row")
        return Tensor(hot)

    if params.beta == 0.0:
        return ops.softmax(q, axis=-1)
    finite_q = ops.masked_fill(q, pad, 0.0)
    logits = ops.add(ops.mul(finite_q, 1.0 - params.beta), ops.mul(b, params.beta))
    logits = ops.masked_fill(logits, np.broadcast_to(pad, logits.shape), -np.inf)
    return ops.softmax(logits, axis=-1)


def pool(attention: Tensor, tokens: TokenMatrix, params: AttentionParams) -> Tensor:
    """``l2_normalize((A (W_V H)ᵀ) W_o)`` for batched rows: ``(..., d)``."""
    values = ops.matmul(params.w_v, tokens.features)
    pooled = ops.matmul(ops.matmul(attention, ops.transpose(values)), params.w_o)
    squeezed = ops.reshape(pooled, (*pooled.shape[:-2], pooled.shape[-1]))
    return ops.l2_normalize(squeezed, axis=-1)


def contextual_feature(
    attention: Tensor,
    tokens: TokenMatrix,
    params: AttentionParams,
    relation_id: str = "",
    modality: Modality = Modality.TEXT,
) -> ContextualFeature:
    """Relation-conditioned unit embedding of one token matrix.

    Raises
    ------
    ShapeError
        If attention length and token length differ
    DegenerateVectorError
        If the pooled vector is (numerically) zero

    """
    if attention.shape[-1] != tokens.length:
        raise ShapeError(f"attention length {attention.shape[-1]} != token length {tokens.length}")
    return ContextualFeature(z=pool(attention, tokens, params), relation_id=relation_id, modality=modality)
