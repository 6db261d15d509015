"""Positive pairs, in-batch negatives and the epoch batch sampler.

A batch is built around a *roster* of samples. Its positives are:

- one intra-sample pair ``(i, i)`` per roster member, under the generic
  relation "text and image describe the same item";
- both directions ``(i, j)`` and ``(j, i)`` of every training edge whose
  endpoints are both on the roster, under the edge's own description.

The negatives of anchor ``i`` are the roster members that are neither ``i``
nor one of its positive partners in the batch.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..dataio.vocabulary import generic_intra_tokens
from ..exceptions import InsufficientNegativesError, IntegrityError
from ..models.domain.enums import PairKind
from ..models.domain.records import RelationEdge, Sample
from ..types import SampleId

_LOG = logging.getLogger(__name__)


@dataclass(frozen=True)
class PositivePair:
    """One positive ``(anchor, partner)`` under a relation description.

    ``relation_type`` is ``None`` for intra-sample pairs.
    """

    anchor: SampleId
    partner: SampleId
    relation_text: tuple[int, ...]
    kind: PairKind
    relation_type: int | None = None

    @property
    def context(self) -> tuple[tuple[int, ...], PairKind]:
        """Relation context the pair's features are conditioned on."""
        return (self.relation_text, self.kind)


@dataclass(frozen=True)
class PairBatch:
    """Roster, positive pairs and per-anchor negatives of one training step.

    Attributes
    ----------
    roster : tuple[SampleId, ...]
        Samples encoded for this batch
    positives : tuple[PositivePair, ...]
        Pairs contributing a loss term each
    negatives : Mapping[SampleId, tuple[SampleId, ...]]
        Negative ids per anchor
    rng_state : tuple[int, ...]
        Seed material that reproduces this batch

    """

    roster: tuple[SampleId, ...]
    positives: tuple[PositivePair, ...]
    negatives: Mapping[SampleId, tuple[SampleId, ...]]
    rng_state: tuple[int, ...] = field(default=())

    @property
    def inter_count(self) -> int:
        return sum(1 for p in self.positives if p.kind is PairKind.INTER)


def generic_intra_relation() -> tuple[int, ...]:
    """Token IDs of the fixed intra-sample relation sentence (ends with EOT)."""
    return generic_intra_tokens()


def build_positive_set(
    samples: Sequence[Sample] | Sequence[SampleId],
    edges: Sequence[RelationEdge],
    include_intra: bool,
    include_inter: bool,
    relation_text_override: tuple[int, ...] | None = None,
) -> list[PositivePair]:
    """Expand samples and edges into positive pairs.

    Parameters
    ----------
    samples : Sequence[Sample] | Sequence[SampleId]
        Sample records or bare ids
    edges : Sequence[RelationEdge]
        Relations among ``samples``; each yields two directed pairs
    include_intra, include_inter : bool
        Which pair kinds to emit
    relation_text_override : tuple[int, ...] | None, optional
        Replace every edge description (connectivity is kept)

    Raises
    ------
    IntegrityError
        If an edge references a sample outside ``samples``

    Examples
    --------
    .. code-block:: python

        pairs = build_positive_set(samples[:2], [edge_0_1], include_intra=True, include_inter=True)
        len(pairs)  # 2 intra + 2 inter

    """
    ids = [s.id if isinstance(s, Sample) else int(s) for s in samples]
    known = set(ids)
    positives: list[PositivePair] = []
    if include_intra:
        intra = generic_intra_relation()
        positives.extend(PositivePair(i, i, intra, PairKind.INTRA) for i in ids)
    if include_inter:
        for edge in edges:
            for endpoint in (edge.src, edge.dst):
                if endpoint not in known:
                    raise IntegrityError(f"edge {edge.key} references unknown sample id {endpoint}")
            text = relation_text_override if relation_text_override is not None else edge.relation_text
            positives.append(PositivePair(edge.src, edge.dst, text, PairKind.INTER, edge.relation_type))
            positives.append(PositivePair(edge.dst, edge.src, text, PairKind.INTER, edge.relation_type))
    return positives


def sample_negatives(
    roster: Sequence[SampleId],
    anchor: SampleId,
    partners: set[SampleId] | frozenset[SampleId],
    count: int,
    rng: np.random.Generator,
) -> list[SampleId]:
    """Draw ``count`` distinct negatives uniformly from the roster.

    Eligible ids are ``roster - {anchor} - partners`` in roster order.

    Raises
    ------
    InsufficientNegativesError
        If fewer than ``count`` ids are eligible

    """
    eligible = [i for i in roster if i != anchor and i not in partners]
    if len(eligible) < count:
        raise InsufficientNegativesError(
            f"anchor {anchor}: {len(eligible)} eligible negatives in a roster of {len(roster)}, {count} required"
        )
    picks = rng.choice(len(eligible), size=count, replace=False)
    return [eligible[k] for k in picks]


def assemble_batch(
    roster: Sequence[SampleId],
    edges: Sequence[RelationEdge],
    include_intra: bool,
    include_inter: bool,
    rng: np.random.Generator,
    negative_cap: int | None = None,
    relation_text_override: tuple[int, ...] | None = None,
    rng_state: tuple[int, ...] = (),
) -> PairBatch:
    """Build the positives and negatives of one roster.

    ``edges`` may contain edges leaving the roster; only edges with both
    endpoints on the roster become positives. Without a cap every eligible
    roster member is a negative.

    Raises
    ------
    InsufficientNegativesError
        If some anchor has no eligible negative, or fewer than ``negative_cap``

    """
    members = set(roster)
    inside = [e for e in edges if e.src in members and e.dst in members]
    positives = build_positive_set(list(roster), inside, include_intra, include_inter, relation_text_override)

    partners: dict[SampleId, set[SampleId]] = {}
    for pair in positives:
        partners.setdefault(pair.anchor, set()).add(pair.partner)
    negatives: dict[SampleId, tuple[SampleId, ...]] = {}
    for anchor in sorted(partners):
        excluded = partners[anchor]
        if negative_cap is None:
            chosen = [i for i in roster if i != anchor and i not in excluded]
            if not chosen:
                raise InsufficientNegativesError(f"anchor {anchor} has no eligible negative in its roster")
        else:
            chosen = sample_negatives(roster, anchor, excluded, negative_cap, rng)
        negatives[anchor] = tuple(chosen)
    return PairBatch(roster=tuple(roster), positives=tuple(positives), negatives=negatives, rng_state=rng_state)


class BatchSampler:
    """Deterministic epoch batches over a training graph.

    With inter-sample edges, each batch starts from ``batch_size // 2``
    shuffled edges; their endpoints form the roster core, topped up with
    random samples to ``batch_size``. Without them, shuffled samples are
    chunked into rosters. Every batch also includes the training edges
    that happen to fall inside its roster.

    A roster whose anchors lack negatives is redrawn (new top-up samples) up
    to ``max_redraws`` times; each redraw is logged.

    Parameters
    ----------
    samples : Sequence[SampleId]
        Every sample id available for rosters
    edges : Sequence[RelationEdge]
        Training edges
    batch_size : int
        Roster size
    seed : int
        Epoch ``e`` uses the generator seeded with ``(seed, e)``

    """

    def __init__(
        self,
        samples: Sequence[SampleId],
        edges: Sequence[RelationEdge],
        batch_size: int,
        seed: int,
        include_intra: bool = True,
        include_inter: bool = True,
        negative_cap: int | None = None,
        relation_text_override: tuple[int, ...] | None = None,
        max_redraws: int = 10,
    ) -> None:
        if batch_size < 2:
            raise InsufficientNegativesError(f"batch_size must be at least 2, got {batch_size}")
        self.samples = tuple(samples)
        self.edges = tuple(edges)
        self.batch_size = min(batch_size, len(self.samples))
        self.seed = seed
        self.include_intra = include_intra
        self.include_inter = include_inter and bool(self.edges)
        self.negative_cap = negative_cap
        self.relation_text_override = relation_text_override
        self.max_redraws = max_redraws
        self.redraws = 0
        self._incident: dict[SampleId, list[RelationEdge]] = {}
        for edge in self.edges:
            self._incident.setdefault(edge.src, []).append(edge)
            if edge.dst != edge.src:
                self._incident.setdefault(edge.dst, []).append(edge)

    def __len__(self) -> int:
        if self.include_inter:
            per_batch = max(1, self.batch_size // 2)
            return -(-len(self.edges) // per_batch)
        return len(self.samples) // self.batch_size

    def _roster_edges(self, roster: Sequence[SampleId]) -> list[RelationEdge]:
        members = set(roster)
        seen: set[tuple[int, int, int]] = set()
        found: list[RelationEdge] = []
        for sample_id in roster:
            for edge in self._incident.get(sample_id, ()):
                if edge.key not in seen and edge.src in members and edge.dst in members:
                    seen.add(edge.key)
                    found.append(edge)
        return found

    def _assemble(self, roster: list[SampleId], rng: np.random.Generator, state: tuple[int, ...]) -> PairBatch:
        return assemble_batch(
            roster,
            self._roster_edges(roster) if self.include_inter else [],
            self.include_intra,
            self.include_inter,
            rng,
            negative_cap=self.negative_cap,
            relation_text_override=self.relation_text_override,
            rng_state=state,
        )

    def _top_up(self, core: list[SampleId], rng: np.random.Generator) -> list[SampleId]:
        members = set(core)
        pool = np.array([s for s in self.samples if s not in members], dtype=np.int64)
        extra = max(0, self.batch_size - len(core))
        if extra == 0 or pool.size == 0:
            return list(core)
        picks = rng.choice(pool.size, size=min(extra, pool.size), replace=False)
        return [*core, *(int(pool[k]) for k in picks)]

    def epoch(self, epoch: int) -> Iterator[PairBatch]:
        """Yield the batches of ``epoch`` (0-based), identical for identical seeds.

        Raises
        ------
        InsufficientNegativesError
            If a roster still lacks negatives after ``max_redraws`` redraws

        """
        rng = np.random.default_rng([self.seed, epoch])
        if not self.include_inter:
            order = rng.permutation(len(self.samples))
            for start in range(0, len(self) * self.batch_size, self.batch_size):
                roster = [self.samples[k] for k in order[start : start + self.batch_size]]
                yield self._assemble(roster, rng, (self.seed, epoch, start))
            return

        per_batch = max(1, self.batch_size // 2)
        order = rng.permutation(len(self.edges))
        for index, start in enumerate(range(0, len(self.edges), per_batch)):
            core: list[SampleId] = []
            for k in order[start : start + per_batch]:
                edge = self.edges[k]
                for endpoint in (edge.src, edge.dst):
                    if endpoint not in core:
                        core.append(endpoint)
            yield self._draw(core[: self.batch_size], rng, (self.seed, epoch, index))

    def _draw(self, core: list[SampleId], rng: np.random.Generator, state: tuple[int, ...]) -> PairBatch:
        for attempt in range(self.max_redraws + 1):
            roster = self._top_up(core, rng)
            try:
                return self._assemble(roster, rng, state)
            except InsufficientNegativesError as e:
                if attempt == self.max_redraws:
                    raise
                self.redraws += 1
                _LOG.warning("Redrawing batch %s (attempt %d): %s", state, attempt + 1, e)
        raise AssertionError("unreachable")
