"""Pair-disjoint edge splits.

Edges are grouped by their unordered endpoint pair, so every relation type
linking the same two samples lands on the same side. Samples are shared by
all partitions (transductive split); only edges are divided.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConfigurationError
from ..models.domain.records import RelationEdge, Sample

_LOG = logging.getLogger(__name__)

SPLIT_RULE = "floor(fraction * edges) held-out edges, drawn as whole unordered-pair groups"


@dataclass(frozen=True)
class EdgePartition:
    samples: tuple[Sample, ...]
    edges: tuple[RelationEdge, ...]

    @property
    def pairs(self) -> set[frozenset[int]]:
        return {edge.pair for edge in self.edges}


@dataclass(frozen=True)
class DatasetSplit:
    """Train / validation / test partitions over one sample set."""

    samples: tuple[Sample, ...]
    train: tuple[RelationEdge, ...]
    test: tuple[RelationEdge, ...]
    validation: tuple[RelationEdge, ...] = field(default=())

    @property
    def all_edges(self) -> tuple[RelationEdge, ...]:
        return (*self.train, *self.validation, *self.test)


def split(
    samples: Sequence[Sample], edges: Sequence[RelationEdge], test_fraction: float, seed: int
) -> tuple[EdgePartition, EdgePartition]:
    """Partition ``edges`` into train and test with disjoint endpoint pairs.

    The test side receives exactly ``floor(test_fraction * len(edges))`` edges
    whenever whole pair groups can reach that count, which they always can
    when every pair carries a single relation type.

    Raises
    ------
    ConfigurationError
        If ``test_fraction`` is outside ``(0, 1)`` or either side ends up empty

    Examples
    --------
    .. code-block:: python

        train, test = split(samples, edges, test_fraction=0.2, seed=42)
        assert not train.pairs & test.pairs

    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    target = math.floor(test_fraction * len(edges))

    groups: dict[frozenset[int], list[RelationEdge]] = {}
    for edge in edges:
        groups.setdefault(edge.pair, []).append(edge)
    keys = list(groups)
    order = np.random.default_rng(seed).permutation(len(keys))

    test_keys: set[frozenset[int]] = set()
    taken = 0
    for index in order:
        if taken == target:
            break
        size = len(groups[keys[index]])
        if taken + size <= target:
            test_keys.add(keys[index])
            taken += size

    test = tuple(e for e in edges if e.pair in test_keys)
    train = tuple(e for e in edges if e.pair not in test_keys)
    if not test or not train:
        raise ConfigurationError(
            f"split of {len(edges)} edges with fraction {test_fraction} leaves an empty partition "
            f"({len(train)} train, {len(test)} held out)"
        )
    _LOG.info("Split %d edges into %d train / %d held out (seed %d)", len(edges), len(train), len(test), seed)
    shared = tuple(samples)
    return EdgePartition(shared, train), EdgePartition(shared, test)


def split_for_training(
    samples: Sequence[Sample],
    edges: Sequence[RelationEdge],
    test_fraction: float,
    validation_fraction: float,
    seed: int,
) -> DatasetSplit:
    """Test split, then a validation slice carved from the training side.

    ``validation_fraction = 0`` disables the validation slice.
    """
    train, test = split(samples, edges, test_fraction, seed)
    validation: tuple[RelationEdge, ...] = ()
    train_edges = train.edges
    if validation_fraction > 0.0:
        fit_part, validation_part = split(samples, train.edges, validation_fraction, seed + 1)
        train_edges, validation = fit_part.edges, validation_part.edges
    return DatasetSplit(samples=tuple(samples), train=train_edges, test=test.edges, validation=validation)
