"""The relation-conditioned dual encoder as one object.

:class:`RCMLModel` wires the encoders and the relation attention together and
computes features for many relation contexts at once: one forward pass
encodes a sample roster and every relation description, then pools the
roster under each relation.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..models.domain.enums import PairKind
from ..models.domain.reports import ParameterCount
from ..tensor_core import Tensor, ops
from ..types import FloatArray
from .encoders import TokenMatrix, encode_image_batch, encode_relation_batch, encode_text_batch
from .params import ModelParams
from .relation_attention import pool, relation_attention, relation_query, summary_masks

_LOG = logging.getLogger(__name__)

type RelationContext = tuple[tuple[int, ...], PairKind]


@dataclass(frozen=True)
class RosterFeatures:
    """Relation-conditioned unit embeddings of a roster under several contexts.

    Attributes
    ----------
    z_text, z_image : Tensor
        ``(C, N, d)``; entry ``[c, n]`` is sample ``n`` under context ``c``
    relation_embeddings : Tensor
        ``(C, d)`` raw ``h_E`` of each context's description

    """

    z_text: Tensor
    z_image: Tensor
    relation_embeddings: Tensor


class RCMLModel:
    """Encoders plus relation-conditioned pooling over shared parameters.

    Parameters
    ----------
    params : ModelParams
        Parameters read (never copied) by every forward pass

    """

    def __init__(self, params: ModelParams) -> None:
        self.params = params

    @property
    def dim(self) -> int:
        return self.params.config.dim

    def parameter_count(self) -> ParameterCount:
        return self.params.parameter_count()

    def encode_roster(
        self, token_lists: Sequence[Sequence[int]], patch_arrays: Sequence[FloatArray]
    ) -> tuple[TokenMatrix, TokenMatrix]:
        return encode_text_batch(self.params.text, token_lists), encode_image_batch(self.params.image, patch_arrays)

    def _masks(self, kinds: Sequence[PairKind], tokens: TokenMatrix) -> FloatArray:
        # Hard summary pooling selects the summary token for every pair kind.
        hard = self.params.attention.hard_summary
        active = [hard or PairKind(kind) is PairKind.INTRA for kind in kinds]
        return np.stack([summary_masks(flag, tokens.summary_index, tokens.length) for flag in active])

    def pool_roster(self, tokens: TokenMatrix, h_e: Tensor, kinds: Sequence[PairKind]) -> Tensor:
        """Pool an ``(N, d, L)`` token batch under ``C`` relation embeddings: ``(C, N, d)``."""
        attention_params = self.params.attention
        queries = relation_query(ops.reshape(h_e, (h_e.shape[0], 1, h_e.shape[1])), tokens, attention_params)
        weights = relation_attention(queries, self._masks(kinds, tokens), attention_params)
        return pool(weights, tokens, attention_params)

    def roster_features(
        self,
        token_lists: Sequence[Sequence[int]],
        patch_arrays: Sequence[FloatArray],
        contexts: Sequence[RelationContext],
    ) -> RosterFeatures:
        """Encode a roster once and pool it under every ``(relation text, pair kind)`` context.

        Examples
        --------
        .. code-block:: python

            model = RCMLModel(params)
            out = model.roster_features(tokens, patches, [(generic_intra_tokens(), PairKind.INTRA)])
            out.z_text.shape  # (1, N, d)

        """
        text_tokens, image_tokens = self.encode_roster(token_lists, patch_arrays)
        return self.pool_contexts(text_tokens, image_tokens, contexts)

    def pool_contexts(
        self, text_tokens: TokenMatrix, image_tokens: TokenMatrix, contexts: Sequence[RelationContext]
    ) -> RosterFeatures:
        relation_texts = [text for text, _ in contexts]
        kinds = [kind for _, kind in contexts]
        h_e = encode_relation_batch(self.params.text, relation_texts)
        _LOG.debug("Pooling %d samples under %d relation contexts", text_tokens.features.shape[0], len(contexts))
        return RosterFeatures(
            z_text=self.pool_roster(text_tokens, h_e, kinds),
            z_image=self.pool_roster(image_tokens, h_e, kinds),
            relation_embeddings=h_e,
        )
