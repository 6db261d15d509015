"""Relation-conditioned contrastive objective.

For a positive pair ``(i, j)`` under relation ``e`` with negatives ``N(i)``,
the term for modalities ``x -> y`` is

.. code-block:: text

    -log( exp(s(z_x^i, z_y^j) / tau) / sum_{k in {j} ∪ N(i)} exp(s(z_x^i, z_y^k) / tau) )

where every ``z`` is conditioned on ``e`` and ``s`` is the dot product of unit
vectors. The total loss combines four directions:

.. code-block:: text

    (L_text-image + L_image-text) / 2 + lambda (L_text-text + L_image-image)

Each direction is the mean of its terms over the positive pairs.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..dataio.table import SampleTable
from ..exceptions import ConfigurationError, ContractError
from ..modeling.rcml import RCMLModel, RelationContext
from ..models.domain.configs import LossConfig
from ..models.domain.enums import PairKind
from ..tensor_core import Tensor, ops
from ..types import BoolArray, IntArray
from .pairing import PairBatch

_LOG = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class BatchFeatures:
    """Relation-conditioned embeddings of a batch roster, indexed per positive.

    Attributes
    ----------
    z_text, z_image : Tensor
        ``(C, N, d)`` unit embeddings of the ``N`` roster members under each
        of ``C`` relation contexts
    context : IntArray
        ``(P,)`` context index of each positive pair
    anchor, partner : IntArray
        ``(P,)`` roster rows of each pair's anchor and partner
    negative_mask : BoolArray
        ``(P, N)``; ``True`` where a roster row is a negative of the pair's anchor
    kinds : tuple[PairKind, ...]
        Pair kind of each positive

    """

    z_text: Tensor
    z_image: Tensor
    context: IntArray
    anchor: IntArray
    partner: IntArray
    negative_mask: BoolArray
    kinds: tuple[PairKind, ...]

    @property
    def pair_count(self) -> int:
        return int(self.anchor.shape[0])

    @property
    def roster_size(self) -> int:
        return int(self.z_text.shape[1])


def _check_unit(z: Tensor, label: str) -> None:
    norms = np.linalg.norm(z.data, axis=-1)
    gap = float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0
    if gap > UNIT_TOLERANCE:
        raise ContractError(f"{label} embeddings are not unit norm (max deviation {gap:.3e})")


def contrastive_term(anchor: Tensor, positive: Tensor, negatives: Tensor | Sequence[Tensor], tau: float) -> Tensor:
    """InfoNCE term of one anchor against its positive and negatives.

    Parameters
    ----------
    anchor, positive : Tensor
        ``(d,)`` unit vectors
    negatives : Tensor | Sequence[Tensor]
        ``(k, d)`` unit vectors, ``k >= 1``
    tau : float
        Temperature

    Returns
    -------
    Tensor
        Scalar ``-log softmax`` of the positive among ``{positive} ∪ negatives``

    Raises
    ------
    ContractError
        If an input is not unit norm within ``1e-6``
    ConfigurationError
        If there is no negative or ``tau <= 0``

    """
    if tau <= 0.0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    stacked = negatives if isinstance(negatives, Tensor) else ops.stack(list(negatives))
    if stacked.ndim != 2 or stacked.shape[0] == 0:
        raise ConfigurationError("contrastive_term needs at least one negative")
    for label, z in (("anchor", anchor), ("positive", positive), ("negative", stacked)):
        _check_unit(z, label)

    s_pos = ops.dot(anchor, positive)
    s_neg = ops.reshape(ops.matmul(stacked, ops.reshape(anchor, (anchor.shape[0], 1))), (stacked.shape[0],))
    logits = ops.mul(ops.concat([ops.reshape(s_pos, (1,)), s_neg], axis=0), 1.0 / tau)
    return ops.sub(ops.logsumexp(logits, axis=0), ops.mul(s_pos, 1.0 / tau))


def _info_nce(z_x: Tensor, z_y: Tensor, features: BatchFeatures, tau: float, literal_denominator: bool) -> Tensor:
    """Mean InfoNCE over all positives for one modality direction."""
    contexts, size = z_x.shape[0], z_x.shape[1]
    similarities = ops.matmul(z_x, ops.transpose(z_y))  # (C, N, N)
    flat = ops.reshape(similarities, (contexts * size, size))
    rows = ops.index_select(flat, features.context * size + features.anchor, axis=0)
    logits = ops.mul(rows, 1.0 / tau)

    pair_index = np.arange(features.pair_count)
    positive = ops.pick(logits, pair_index, features.partner)
    keep = features.negative_mask.copy()
    if not literal_denominator:
        keep[pair_index, features.partner] = True
    denominator = ops.logsumexp(ops.masked_fill(logits, ~keep, -np.inf), axis=-1)
    return ops.mean(ops.sub(denominator, positive))


def loss_terms(features: BatchFeatures, cfg: LossConfig) -> dict[str, Tensor]:
    """The four directional losses; intra-modal ones only when enabled.

    Raises
    ------
    ConfigurationError
        If the batch has no positive pair
    ContractError
        If any embedding is not unit norm

    """
    if features.pair_count == 0:
        raise ConfigurationError("empty positive set: enable intra or inter pairs")
    _check_unit(features.z_text, "text")
    _check_unit(features.z_image, "image")
    tau, literal = cfg.tau, cfg.literal_denominator
    terms = {
        "text_image": _info_nce(features.z_text, features.z_image, features, tau, literal),
        "image_text": _info_nce(features.z_image, features.z_text, features, tau, literal),
    }
    if cfg.uses_intra_terms:
        terms["text_text"] = _info_nce(features.z_text, features.z_text, features, tau, literal)
        terms["image_image"] = _info_nce(features.z_image, features.z_image, features, tau, literal)
    return terms


def total_loss(features: BatchFeatures, cfg: LossConfig) -> Tensor:
    """Cross-modal mean plus ``lambda_intra`` times the intra-modal terms.

    Examples
    --------
    .. code-block:: python

        loss = total_loss(batch_features(model, table, batch), LossConfig(tau=0.1, lambda_intra=0.5))
        loss.item()

    """
    terms = loss_terms(features, cfg)
    loss = ops.mul(ops.add(terms["text_image"], terms["image_text"]), 0.5)
    if "text_text" in terms:
        intra = ops.add(terms["text_text"], terms["image_image"])
        loss = ops.add(loss, ops.mul(intra, cfg.lambda_intra))
    _LOG.debug("Batch loss %.6f over %d pairs", loss.item(), features.pair_count)
    return loss


def clip_reduction_loss(features: BatchFeatures, tau: float) -> Tensor:
    """Symmetric CLIP-style cross-entropy over self-pairs.

    Builds one ``(N, N)`` text-image similarity matrix under the shared
    intra relation and reads the text-to-image losses from its rows and the
    image-to-text losses from its columns.

    Raises
    ------
    ContractError
        If any positive is an inter-sample pair or pairs span several contexts

    """
    if features.pair_count == 0:
        raise ConfigurationError("empty positive set")
    if any(kind is PairKind.INTER for kind in features.kinds) or np.any(features.anchor != features.partner):
        raise ContractError("clip_reduction_loss accepts intra-sample pairs only")
    if np.unique(features.context).size != 1:
        raise ContractError("clip_reduction_loss needs every pair under one relation context")
    _check_unit(features.z_text, "text")
    _check_unit(features.z_image, "image")

    context = int(features.context[0])
    z_text = ops.index_select(features.z_text, [context], axis=0)
    z_image = ops.index_select(features.z_image, [context], axis=0)
    size, dim = z_text.shape[1], z_text.shape[2]
    text_matrix = ops.reshape(z_text, (size, dim))
    image_matrix = ops.reshape(z_image, (size, dim))
    logits = ops.mul(ops.matmul(text_matrix, ops.transpose(image_matrix)), 1.0 / tau)

    rows = features.anchor
    keep = features.negative_mask.copy()
    keep[np.arange(rows.shape[0]), rows] = True
    diagonal = ops.pick(logits, rows, rows)

    by_row = ops.index_select(logits, rows, axis=0)
    by_column = ops.index_select(ops.transpose(logits), rows, axis=0)
    text_image = ops.mean(ops.sub(ops.logsumexp(ops.masked_fill(by_row, ~keep, -np.inf), axis=-1), diagonal))
    image_text = ops.mean(ops.sub(ops.logsumexp(ops.masked_fill(by_column, ~keep, -np.inf), axis=-1), diagonal))
    return ops.mul(ops.add(text_image, image_text), 0.5)


def batch_contexts(batch: PairBatch) -> tuple[list[RelationContext], IntArray]:
    """Distinct relation contexts of a batch, in first-use order, and each pair's index into them."""
    index: dict[RelationContext, int] = {}
    per_pair = np.empty(len(batch.positives), dtype=np.int64)
    for n, pair in enumerate(batch.positives):
        per_pair[n] = index.setdefault(pair.context, len(index))
    return list(index), per_pair


def batch_features(model: RCMLModel, table: SampleTable, batch: PairBatch) -> BatchFeatures:
    """Encode a batch roster once and pool it under each of the batch's relation contexts."""
    roster = list(batch.roster)
    position = {sample_id: n for n, sample_id in enumerate(roster)}
    contexts, per_pair = batch_contexts(batch)
    token_lists, patch_arrays = table.gather(roster)
    pooled = model.roster_features(token_lists, patch_arrays, contexts)

    anchor = np.array([position[p.anchor] for p in batch.positives], dtype=np.int64)
    partner = np.array([position[p.partner] for p in batch.positives], dtype=np.int64)
    negative_mask = np.zeros((len(batch.positives), len(roster)), dtype=bool)
    for n, pair in enumerate(batch.positives):
        negative_mask[n, [position[k] for k in batch.negatives.get(pair.anchor, ())]] = True
    return BatchFeatures(
        z_text=pooled.z_text,
        z_image=pooled.z_image,
        context=per_pair,
        anchor=anchor,
        partner=partner,
        negative_mask=negative_mask,
        kinds=tuple(p.kind for p in batch.positives),
    )
