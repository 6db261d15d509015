"""Similarity modes over relation-conditioned embeddings, and the feature cache behind them.

A mode picks which embedding of each side is compared, with both sides
conditioned on the same relation:

======  ===============  ===============
mode    side A           side B
======  ===============  ===============
TT      text             text
II      image            image
TI      text             image
IT      image            text
AVG     unit mean        unit mean
======  ===============  ===============

The score is the dot product of the two unit vectors (cosine).
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..dataio.table import SampleTable
from ..exceptions import DegenerateVectorError
from ..modeling.encoders import TokenMatrix
from ..modeling.rcml import RCMLModel, RelationContext
from ..models.domain.enums import PairKind, SimilarityMode
from ..models.domain.records import Sample
from ..tensor_core.ops import NORM_EPS
from ..types import FloatArray, SampleId

_LOG = logging.getLogger(__name__)


def average_embedding(z_text: FloatArray, z_image: FloatArray) -> FloatArray:
    """``l2_normalize((z_text + z_image) / 2)`` along the last axis.

    Raises
    ------
    DegenerateVectorError
        If some mean vector has norm at most ``1e-12`` (``z_text = -z_image``)

    """
    mean = 0.5 * (z_text + z_image)
    norm = np.linalg.norm(mean, axis=-1, keepdims=True)
    if np.any(norm <= NORM_EPS):
        raise DegenerateVectorError("text and image embeddings cancel; AVG is undefined")
    return mean / norm


def mode_vectors(z_text: FloatArray, z_image: FloatArray, mode: SimilarityMode, side: int) -> FloatArray:
    """Embedding compared on ``side`` (0 = A, 1 = B) under ``mode``."""
    match SimilarityMode(mode):
        case SimilarityMode.TT:
            return z_text
        case SimilarityMode.II:
            return z_image
        case SimilarityMode.TI:
            return z_text if side == 0 else z_image
        case SimilarityMode.IT:
            return z_image if side == 0 else z_text
        case SimilarityMode.AVG:
            return average_embedding(z_text, z_image)


def pair_similarity(
    a_text: FloatArray, a_image: FloatArray, b_text: FloatArray, b_image: FloatArray, mode: SimilarityMode
) -> FloatArray:
    """Cosine of the ``mode`` embeddings of A and B; broadcasts over leading axes."""
    left = mode_vectors(a_text, a_image, mode, 0)
    right = mode_vectors(b_text, b_image, mode, 1)
    return np.sum(left * right, axis=-1)


def similarity(
    model: RCMLModel,
    a: Sample,
    b: Sample,
    relation_text: Sequence[int],
    mode: SimilarityMode,
    kind: PairKind = PairKind.INTER,
) -> float:
    """Similarity of samples ``a`` and ``b``, both conditioned on ``relation_text``.

    Examples
    --------
    .. code-block:: python

        similarity(model, a, a, generic_intra_tokens(), SimilarityMode.TT, PairKind.INTRA)  # 1.0

    """
    table = SampleTable([a] if a.id == b.id else [a, b])
    tokens, patches = table.gather([a.id, b.id])
    out = model.roster_features(tokens, patches, [(tuple(relation_text), PairKind(kind))])
    z_text, z_image = out.z_text.data[0], out.z_image.data[0]
    return float(pair_similarity(z_text[0], z_image[0], z_text[1], z_image[1], mode))


class FeatureBank:
    """Relation-conditioned embeddings of a fixed sample set, computed once per context.

    Token matrices are encoded once, in chunks of ``chunk_size`` samples;
    pooling under new relation contexts reuses them. Chunks are processed by
    up to ``workers`` threads and reassembled in sample order, so results do
    not depend on the worker count. Nothing here touches a gradient tape.

    Parameters
    ----------
    model : RCMLModel
        Model read, never modified
    table : SampleTable
        Samples that can be scored
    ids : Iterable[SampleId] | None, optional
        Restrict the bank to these samples; defaults to the whole table

    """

    def __init__(
        self,
        model: RCMLModel,
        table: SampleTable,
        ids: Iterable[SampleId] | None = None,
        chunk_size: int = 256,
        workers: int = 1,
    ) -> None:
        self.model = model
        self.ids = sorted(set(table.ids if ids is None else ids))
        self._row = {sample_id: n for n, sample_id in enumerate(self.ids)}
        self._table = table
        self.chunk_size = chunk_size
        self.workers = workers
        self._tokens: list[tuple[TokenMatrix, TokenMatrix]] | None = None
        self._text: dict[RelationContext, FloatArray] = {}
        self._image: dict[RelationContext, FloatArray] = {}
        self._relation: dict[RelationContext, FloatArray] = {}

    def __len__(self) -> int:
        return len(self.ids)

    def _chunks(self) -> list[list[SampleId]]:
        return [self.ids[i : i + self.chunk_size] for i in range(0, len(self.ids), self.chunk_size)]

    def _map[T, R](self, fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
        if self.workers <= 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))

    def _encoded(self) -> list[tuple[TokenMatrix, TokenMatrix]]:
        if self._tokens is None:

            def encode(chunk: list[SampleId]) -> tuple[TokenMatrix, TokenMatrix]:
                tokens, patches = self._table.gather(chunk)
                return self.model.encode_roster(tokens, patches)

            self._tokens = self._map(encode, self._chunks())
            _LOG.debug("Encoded %d samples in %d chunks", len(self.ids), len(self._tokens))
        return self._tokens

    def ensure(self, contexts: Iterable[RelationContext]) -> None:
        """Pool every sample under each context not yet cached."""
        keys = [(tuple(text), PairKind(kind)) for text, kind in contexts]
        missing = [c for c in dict.fromkeys(keys) if c not in self._text]
        if not missing:
            return
        encoded = self._encoded()

        def pool(chunk: tuple[TokenMatrix, TokenMatrix]) -> tuple[FloatArray, FloatArray, FloatArray]:
            out = self.model.pool_contexts(chunk[0], chunk[1], missing)
            return out.z_text.data, out.z_image.data, out.relation_embeddings.data

        parts = self._map(pool, encoded)
        z_text = np.concatenate([p[0] for p in parts], axis=1)
        z_image = np.concatenate([p[1] for p in parts], axis=1)
        for c, context in enumerate(missing):
            self._text[context] = z_text[c]
            self._image[context] = z_image[c]
            self._relation[context] = parts[0][2][c]
        _LOG.debug("Pooled %d samples under %d new relation contexts", len(self.ids), len(missing))

    def embeddings(self, context: RelationContext, ids: Sequence[SampleId]) -> tuple[FloatArray, FloatArray]:
        """``(len(ids), d)`` text and image embeddings under ``context``."""
        key = (tuple(context[0]), PairKind(context[1]))
        self.ensure([key])
        rows = [self._row[i] for i in ids]
        return self._text[key][rows], self._image[key][rows]

    def relation_embedding(self, context: RelationContext) -> FloatArray:
        key = (tuple(context[0]), PairKind(context[1]))
        self.ensure([key])
        return self._relation[key]

    def scores(
        self, context: RelationContext, anchor: SampleId, candidates: Sequence[SampleId], mode: SimilarityMode
    ) -> FloatArray:
        """Similarity of ``anchor`` to each candidate under ``context``."""
        a_text, a_image = self.embeddings(context, [anchor])
        b_text, b_image = self.embeddings(context, candidates)
        return pair_similarity(a_text, a_image, b_text, b_image, mode)

    def pair_scores(
        self, contexts: Sequence[RelationContext], a: SampleId, b: SampleId, mode: SimilarityMode
    ) -> FloatArray:
        """Similarity of one pair under each of ``contexts``: ``(len(contexts),)``."""
        self.ensure(contexts)
        values = []
        for context in contexts:
            z_text, z_image = self.embeddings(context, [a, b])
            values.append(float(pair_similarity(z_text[0], z_image[0], z_text[1], z_image[1], mode)))
        return np.asarray(values)
