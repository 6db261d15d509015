"""Relation type prediction for a known pair.

Every candidate type is represented by one canonical description; the pair
``(A, B)`` is scored under each description and the prediction hits when the
true type is among the ``top_k`` best. Ties are broken by ascending type id.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Collection, Sequence

import numpy as np

from ..dataio.generator import LatentOracle
from ..dataio.vocabulary import relation_text_tokens
from ..exceptions import ConfigurationError
from ..models.domain.enums import PairKind, SimilarityMode
from ..models.domain.records import RelationEdge
from ..types import FloatArray, SampleId
from .similarity import FeatureBank

_LOG = logging.getLogger(__name__)

type PairScorer = Callable[[SampleId, SampleId], FloatArray]


def relation_type_texts(edges: Sequence[RelationEdge], num_types: int) -> list[tuple[int, ...]]:
    """Canonical description per type: the first edge text seen for it, else the generator template."""
    texts: dict[int, tuple[int, ...]] = {}
    for edge in edges:
        texts.setdefault(edge.relation_type, edge.relation_text)
    return [texts.get(r) or relation_text_tokens(r) for r in range(num_types)]


def relation_type_predict(scores: FloatArray, true_type: int, top_k: int = 3) -> bool:
    """Whether ``true_type`` is among the ``top_k`` highest of ``scores`` (one per type).

    Raises
    ------
    ConfigurationError
        If fewer than ``top_k`` candidate types are scored

    """
    if scores.shape[0] < top_k:
        raise ConfigurationError(f"top_k={top_k} exceeds the {scores.shape[0]} candidate relation types")
    value = scores[true_type]
    types = np.arange(scores.shape[0])
    ahead = (scores > value) | ((scores == value) & (types < true_type))
    return int(np.count_nonzero(ahead)) < top_k


def bank_pair_scorer(bank: FeatureBank, texts: Sequence[tuple[int, ...]], mode: SimilarityMode) -> PairScorer:
    contexts = [(text, PairKind.INTER) for text in texts]

    def score(a: SampleId, b: SampleId) -> FloatArray:
        return bank.pair_scores(contexts, a, b, mode)

    return score


def random_pair_scorer(num_types: int, seed: int) -> PairScorer:
    rng = np.random.default_rng(seed)

    def score(a: SampleId, b: SampleId) -> FloatArray:
        return rng.random(num_types)

    return score


def oracle_pair_scorer(oracle: LatentOracle) -> PairScorer:
    return oracle.type_scores


def type_accuracy(edges: Sequence[RelationEdge], scorer: PairScorer, top_k: int = 3) -> float:
    """Top-k accuracy over ``edges``, each scored as the pair ``(src, dst)``.

    Raises
    ------
    ConfigurationError
        If ``edges`` is empty

    """
    if not edges:
        raise ConfigurationError("type prediction needs at least one edge")
    hits = sum(relation_type_predict(scorer(e.src, e.dst), e.relation_type, top_k) for e in edges)
    return hits / len(edges)


def type_prediction_report(
    bank: FeatureBank,
    edges: Sequence[RelationEdge],
    texts: Sequence[tuple[int, ...]],
    modes: Collection[SimilarityMode],
    top_k: int = 3,
) -> dict[str, float]:
    """Top-k type accuracy per similarity mode.

    Examples
    --------
    .. code-block:: python

        texts = relation_type_texts(split.all_edges, num_types=10)
        type_prediction_report(bank, split.test, texts, list(SimilarityMode))

    """
    if len(texts) < top_k:
        raise ConfigurationError(f"top_k={top_k} exceeds the {len(texts)} candidate relation types")
    bank.ensure([(text, PairKind.INTER) for text in texts])
    report = {
        SimilarityMode(mode).value: type_accuracy(edges, bank_pair_scorer(bank, texts, mode), top_k) for mode in modes
    }
    _LOG.info("Type prediction top-%d over %d pairs: %s", top_k, len(edges), report)
    return report
