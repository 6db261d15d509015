"""Relation-guided retrieval: rank one true target among unrelated candidates.

Each held-out edge ``(A, B, e)`` becomes a query: given A and the relation
``e``, score B together with ``num_negatives`` samples that are unrelated to
A under every relation type, and check whether B lands in the top ``k``.
Ties are broken by ascending candidate id.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Collection, Sequence
from dataclasses import dataclass

import numpy as np

from ..dataio.generator import LatentOracle
from ..exceptions import ConfigurationError, InsufficientNegativesError
from ..models.domain.enums import PairKind, SimilarityMode
from ..models.domain.records import RelationEdge
from ..types import FloatArray, SampleId
from .similarity import FeatureBank

_LOG = logging.getLogger(__name__)

type Scorer = Callable[[RetrievalQuery], FloatArray]


@dataclass(frozen=True)
class RetrievalQuery:
    """Anchor, query relation and the candidate list (target included).

    Raises
    ------
    ConfigurationError
        If the target is not exactly once among the candidates

    """

    anchor: SampleId
    edge: RelationEdge
    candidates: tuple[SampleId, ...]

    def __post_init__(self) -> None:
        if self.candidates.count(self.target) != 1:
            raise ConfigurationError(f"query anchored at {self.anchor} must list its target {self.target} exactly once")

    @property
    def target(self) -> SampleId:
        return self.edge.dst if self.anchor == self.edge.src else self.edge.src

    @property
    def context(self) -> tuple[tuple[int, ...], PairKind]:
        return (self.edge.relation_text, PairKind.INTER)


def related_partners(edges: Sequence[RelationEdge]) -> dict[SampleId, set[SampleId]]:
    """Every sample's neighbours under any relation type, in either direction."""
    partners: dict[SampleId, set[SampleId]] = {}
    for edge in edges:
        partners.setdefault(edge.src, set()).add(edge.dst)
        partners.setdefault(edge.dst, set()).add(edge.src)
    return partners


def build_queries(
    sample_ids: Sequence[SampleId],
    edges: Sequence[RelationEdge],
    known_edges: Sequence[RelationEdge],
    num_negatives: int = 20,
    seed: int = 42,
    limit: int | None = None,
) -> list[RetrievalQuery]:
    """One query per edge, anchored at its source.

    Parameters
    ----------
    sample_ids : Sequence[SampleId]
        Candidate pool
    edges : Sequence[RelationEdge]
        Edges to turn into queries
    known_edges : Sequence[RelationEdge]
        Every edge of the dataset; a negative is never linked to the anchor by any of them
    limit : int | None, optional
        Keep a seeded random subset of this many edges

    Raises
    ------
    InsufficientNegativesError
        If an anchor has fewer than ``num_negatives`` unrelated samples

    """
    rng = np.random.default_rng(seed)
    chosen = list(edges)
    if limit is not None and limit < len(chosen):
        keep = np.sort(rng.choice(len(chosen), size=limit, replace=False))
        chosen = [chosen[k] for k in keep]
    partners = related_partners(known_edges)
    pool = np.asarray(sorted(sample_ids), dtype=np.int64)

    queries = []
    for edge in chosen:
        excluded = partners.get(edge.src, set()) | {edge.src, edge.dst}
        eligible = pool[~np.isin(pool, list(excluded))]
        if eligible.size < num_negatives:
            raise InsufficientNegativesError(
                f"sample {edge.src} has {eligible.size} unrelated samples, {num_negatives} needed"
            )
        negatives = rng.choice(eligible, size=num_negatives, replace=False)
        candidates = tuple(sorted([edge.dst, *(int(n) for n in negatives)]))
        queries.append(RetrievalQuery(anchor=edge.src, edge=edge, candidates=candidates))
    _LOG.debug("Built %d retrieval queries with %d negatives each", len(queries), num_negatives)
    return queries


def query_rank(scores: FloatArray, candidates: Sequence[SampleId], target: SampleId) -> int:
    """0-based rank of ``target``: higher score first, then smaller id."""
    index = list(candidates).index(target)
    value = scores[index]
    ids = np.asarray(candidates)
    ahead = (scores > value) | ((scores == value) & (ids < target))
    return int(np.count_nonzero(ahead))


def is_hit(scores: FloatArray, candidates: Sequence[SampleId], target: SampleId, k: int) -> bool:
    return query_rank(scores, candidates, target) < k


def bank_scorer(bank: FeatureBank, mode: SimilarityMode) -> Scorer:
    def score(query: RetrievalQuery) -> FloatArray:
        return bank.scores(query.context, query.anchor, query.candidates, mode)

    return score


def random_scorer(seed: int) -> Scorer:
    """Uniform random scores; Hit@k converges to ``k / len(candidates)``."""
    rng = np.random.default_rng(seed)

    def score(query: RetrievalQuery) -> FloatArray:
        return rng.random(len(query.candidates))

    return score


def oracle_scorer(oracle: LatentOracle) -> Scorer:
    """Scores from the generating bilinear form of the query's relation type."""

    def score(query: RetrievalQuery) -> FloatArray:
        return oracle.scores(query.anchor, query.candidates, query.edge.relation_type)

    return score


def retrieval_eval(
    source: FeatureBank | Scorer,
    queries: Sequence[RetrievalQuery],
    mode: SimilarityMode = SimilarityMode.AVG,
    k: int = 5,
) -> float:
    """Hit@k: the fraction of queries whose target ranks in the top ``k``.

    Parameters
    ----------
    source : FeatureBank | Scorer
        Model features (scored under ``mode``) or any scoring callable

    Raises
    ------
    ConfigurationError
        If ``queries`` is empty

    Examples
    --------
    .. code-block:: python

        queries = build_queries(ids, split.test, split.all_edges, seed=42)
        retrieval_eval(FeatureBank(model, table), queries, SimilarityMode.AVG)

    """
    if not queries:
        raise ConfigurationError("retrieval_eval needs at least one query")
    scorer = bank_scorer(source, mode) if isinstance(source, FeatureBank) else source
    if isinstance(source, FeatureBank):
        source.ensure(dict.fromkeys(q.context for q in queries))
    hits = sum(is_hit(scorer(q), q.candidates, q.target, k) for q in queries)
    return hits / len(queries)


def retrieval_report(
    bank: FeatureBank, queries: Sequence[RetrievalQuery], modes: Collection[SimilarityMode], k: int = 5
) -> dict[str, float]:
    """Hit@k per similarity mode, keyed by mode value."""
    return {SimilarityMode(mode).value: retrieval_eval(bank, queries, mode, k) for mode in modes}
