"""Token-level text and image encoders.

Both towers share one block shape, the *mixer*: single-head self-attention
over token positions (padding masked out as keys) with a residual connection,
followed by a residual feed-forward map ``d → 4d → d``.

- Text: ``embedding[token_t] + positional[t]`` per position, then the mixers.
  The summary position is the EOT token.
- Image: patches are projected by ``patch_projection``, a learned summary
  embedding is prepended as position 0, the mixers run, and a two-layer
  projector maps every column into the shared space.

The batched functions pad sequences to the longest member of the batch and
report padding in ``TokenMatrix.pad_mask``; padded columns never influence
unpadded ones.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..exceptions import FormatError, ShapeError, VocabularyError
from ..models.domain.records import EOT_ID, PAD_ID
from ..tensor_core import Tensor, ops
from ..types import BoolArray, FloatArray, IntArray
from .params import ImageEncoderParams, MixerParams, TextEncoderParams

_LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenMatrix:
    """Token features with their summary position and padding.

    Attributes
    ----------
    features : Tensor
        ``(d, L)`` for one sequence or ``(N, d, L)`` for a batch
    summary_index : IntArray
        EOT / summary position per sequence, shape ``()`` or ``(N,)``
    pad_mask : BoolArray
        True at padded positions, shape ``(L,)`` or ``(N, L)``

    """

    features: Tensor
    summary_index: IntArray
    pad_mask: BoolArray

    @property
    def length(self) -> int:
        return self.features.shape[-1]

    @property
    def dim(self) -> int:
        return self.features.shape[-2]

    def row(self, index: int) -> TokenMatrix:
        """Unbatched view of sequence ``index`` (not differentiable)."""
        return TokenMatrix(
            features=Tensor(self.features.data[index]),
            summary_index=np.asarray(self.summary_index[index]),
            pad_mask=self.pad_mask[index].copy(),
        )


def mixer_block(params: MixerParams, features: Tensor, pad_mask: BoolArray) -> Tensor:
    """Apply one residual self-attention + feed-forward block to ``(N, d, L)`` features."""
    dim = features.shape[-2]
    queries = ops.matmul(params.w_q, features)
    keys = ops.matmul(params.w_k, features)
    values = ops.matmul(params.w_v, features)
    scores = ops.mul(ops.matmul(ops.transpose(queries), keys), 1.0 / math.sqrt(dim))
    scores = ops.masked_fill(scores, pad_mask[:, None, :], -np.inf)
    weights = ops.softmax(scores, axis=-1)
    mixed = ops.matmul(values, ops.transpose(weights))
    features = ops.add(features, ops.matmul(params.w_o, mixed))

    hidden = ops.quick_gelu(ops.add(ops.matmul(params.ffn_in, features), params.ffn_in_bias))
    return ops.add(features, ops.add(ops.matmul(params.ffn_out, hidden), params.ffn_out_bias))


def _validate_tokens(params: TextEncoderParams, tokens: Sequence[int]) -> int:
    if len(tokens) == 0:
        raise FormatError("token list is empty")
    if len(tokens) > params.max_len:
        raise ShapeError(f"token list of length {len(tokens)} exceeds n_max={params.max_len}")
    ids = np.asarray(tokens, dtype=np.int64)
    bad = ids[(ids < 0) | (ids >= params.vocab_size)]
    if bad.size:
        raise VocabularyError(f"token ID {int(bad[0])} outside vocabulary of size {params.vocab_size}")
    if PAD_ID in tokens:
        raise FormatError(f"token list contains the PAD token ({PAD_ID})")
    eot_positions = np.flatnonzero(ids == EOT_ID)
    if eot_positions.size != 1:
        raise FormatError(f"token list must contain exactly one EOT, found {eot_positions.size}")
    return int(eot_positions[0])


def encode_text_batch(params: TextEncoderParams, token_lists: Sequence[Sequence[int]]) -> TokenMatrix:
    """Encode several token lists into one padded ``(N, d, L)`` TokenMatrix.

    Raises
    ------
    VocabularyError
        If a token ID is outside the vocabulary
    FormatError
        If a list is empty or does not hold exactly one EOT
    ShapeError
        If a list is longer than ``n_max``

    """
    if not token_lists:
        raise ShapeError("encode_text_batch needs at least one token list")
    summaries = np.asarray([_validate_tokens(params, tokens) for tokens in token_lists], dtype=np.int64)
    length = max(len(tokens) for tokens in token_lists)
    ids = np.full((len(token_lists), length), PAD_ID, dtype=np.int64)
    for row, tokens in enumerate(token_lists):
        ids[row, : len(tokens)] = tokens
    pad_mask = ids == PAD_ID

    positional = ops.index_select(params.positional_embedding, np.arange(length), axis=0)
    embedded = ops.add(ops.gather_rows(params.token_embedding, ids), positional)
    features = ops.transpose(embedded)
    for mixer in params.mixers:
        features = mixer_block(mixer, features, pad_mask)
    return TokenMatrix(features=features, summary_index=summaries, pad_mask=pad_mask)


def encode_text(params: TextEncoderParams, tokens: Sequence[int]) -> TokenMatrix:
    """Encode one token list into a ``(d, L)`` TokenMatrix whose summary is the EOT position.

    Examples
    --------
    .. code-block:: python

        matrix = encode_text(params.text, [70, 81, EOT_ID])
        matrix.features.shape  # (d, 3)
        int(matrix.summary_index)  # 2

    """
    batch = encode_text_batch(params, [tokens])
    return TokenMatrix(
        features=ops.reshape(batch.features, batch.features.shape[1:]),
        summary_index=batch.summary_index[0],
        pad_mask=batch.pad_mask[0],
    )


def _as_patch_array(params: ImageEncoderParams, patches: Sequence[Sequence[float]] | FloatArray) -> FloatArray:
    array = np.asarray(patches, dtype=np.float64)
    if array.ndim != 2 or array.shape[0] == 0:
        raise ShapeError(f"an image needs at least one patch vector, got array of shape {array.shape}")
    if array.shape[1] != params.patch_dim:
        raise ShapeError(f"patch width {array.shape[1]} != p={params.patch_dim}")
    if array.shape[0] > params.max_patches - 1:
        raise ShapeError(f"{array.shape[0]} patches exceed m_max - 1 = {params.max_patches - 1}")
    return array


def encode_image_batch(
    params: ImageEncoderParams, images: Sequence[Sequence[Sequence[float]] | FloatArray]
) -> TokenMatrix:
    """Encode several images into one padded ``(N, d, L)`` TokenMatrix; summary index is 0.

    Raises
    ------
    ShapeError
        If an image has no patches, too many patches, or the wrong patch width

    """
    if not images:
        raise ShapeError("encode_image_batch needs at least one image")
    arrays = [_as_patch_array(params, image) for image in images]
    count = max(a.shape[0] for a in arrays)
    patches = np.zeros((len(arrays), count, params.patch_dim))
    pad_mask = np.zeros((len(arrays), count + 1), dtype=bool)
    for row, array in enumerate(arrays):
        patches[row, : array.shape[0]] = array
        pad_mask[row, array.shape[0] + 1 :] = True

    dim = params.dim
    projected = ops.matmul(Tensor(patches), params.patch_projection)
    summary = ops.mul(Tensor(np.ones((len(arrays), 1, 1))), ops.reshape(params.summary_embedding, (1, 1, dim)))
    features = ops.transpose(ops.concat([summary, projected], axis=1))
    for mixer in params.mixers:
        features = mixer_block(mixer, features, pad_mask)

    hidden = ops.quick_gelu(ops.add(ops.matmul(params.projector_in, features), params.projector_in_bias))
    features = ops.add(ops.matmul(params.projector_out, hidden), params.projector_out_bias)
    return TokenMatrix(
        features=features,
        summary_index=np.zeros(len(arrays), dtype=np.int64),
        pad_mask=pad_mask,
    )


def encode_image(params: ImageEncoderParams, patches: Sequence[Sequence[float]] | FloatArray) -> TokenMatrix:
    """Encode one image (a list of p-vectors) into a ``(d, L)`` TokenMatrix with ``L = patches + 1``."""
    batch = encode_image_batch(params, [patches])
    return TokenMatrix(
        features=ops.reshape(batch.features, batch.features.shape[1:]),
        summary_index=batch.summary_index[0],
        pad_mask=batch.pad_mask[0],
    )


def summary_columns(matrix: TokenMatrix) -> Tensor:
    """Gather the summary column of every sequence of a batched TokenMatrix: ``(N, d)``."""
    count, dim, length = matrix.features.shape
    rows = np.arange(count) * length + matrix.summary_index
    flat = ops.reshape(ops.transpose(matrix.features), (count * length, dim))
    return ops.index_select(flat, rows, axis=0)


def encode_relation_batch(params: TextEncoderParams, relation_texts: Sequence[Sequence[int]]) -> Tensor:
    """Relation embeddings ``h_E`` of several descriptions: ``(R, d)``."""
    return summary_columns(encode_text_batch(params, relation_texts))


def encode_relation(params: TextEncoderParams, relation_tokens: Sequence[int]) -> Tensor:
    """EOT column of the encoded relation description, shape ``(d,)``.

    The same text-encoder parameters encode item texts and relation texts.
    """
    embedding = encode_relation_batch(params, [relation_tokens])
    return ops.reshape(embedding, (embedding.shape[-1],))
