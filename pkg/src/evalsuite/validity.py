"""Relation validity: does relation ``r`` really hold between A and B?

A labelled example is a pair with a candidate relation type. Positives are
held-out edges. Negatives are, in equal numbers, true pairs carrying a wrong
relation type and pairs unrelated under every type. Each example becomes the
frozen feature ``[z_T^A, z_I^A, z_T^B, z_I^B, h_E]`` (width ``5d``),
conditioned on the candidate relation's description, and a logistic linear
probe is trained on a random 70% and scored on the rest.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..exceptions import ConfigurationError, InsufficientNegativesError
from ..models.domain.configs import EvalConfig
from ..models.domain.enums import PairKind
from ..models.domain.records import RelationEdge
from ..tensor_core import GradTape, Tensor, ops
from ..training.optimizer import AdamW
from ..types import FloatArray, SampleId
from .retrieval import related_partners
from .similarity import FeatureBank

_LOG = logging.getLogger(__name__)

MAX_MAJORITY_SHARE = 0.6


@dataclass(frozen=True)
class ValidityExample:
    a: SampleId
    b: SampleId
    relation_type: int
    label: bool


@dataclass(frozen=True)
class ValidityResult:
    accuracy: float
    train_count: int
    test_count: int


def build_validity_examples(
    edges: Sequence[RelationEdge],
    known_edges: Sequence[RelationEdge],
    sample_ids: Sequence[SampleId],
    num_types: int,
    seed: int,
) -> list[ValidityExample]:
    """Balanced positives and negatives from ``edges``.

    Corrupted-type negatives reuse a positive's pair with a type it does not
    carry; unrelated negatives pick two samples linked by no known edge.

    Raises
    ------
    InsufficientNegativesError
        If unrelated pairs cannot be found
    ConfigurationError
        If every pair already carries every type

    """
    rng = np.random.default_rng(seed)
    carried: dict[frozenset[int], set[int]] = {}
    for edge in known_edges:
        carried.setdefault(edge.pair, set()).add(edge.relation_type)
    partners = related_partners(known_edges)
    ids = np.asarray(sorted(sample_ids), dtype=np.int64)

    positives = [ValidityExample(e.src, e.dst, e.relation_type, True) for e in edges]
    corrupted_target = len(positives) // 2
    unrelated_target = len(positives) - corrupted_target

    corrupted: list[ValidityExample] = []
    for k in rng.permutation(len(edges)):
        if len(corrupted) == corrupted_target:
            break
        edge = edges[k]
        wrong = [r for r in range(num_types) if r not in carried.get(edge.pair, set())]
        if wrong:
            corrupted.append(ValidityExample(edge.src, edge.dst, int(rng.choice(wrong)), False))
    if len(corrupted) < corrupted_target:
        raise ConfigurationError("too few pairs leave a relation type free for corrupted negatives")

    unrelated: list[ValidityExample] = []
    attempts = 0
    while len(unrelated) < unrelated_target:
        attempts += 1
        if attempts > 100 * max(unrelated_target, 1):
            raise InsufficientNegativesError("could not draw enough unrelated pairs for validity negatives")
        a, b = (int(v) for v in rng.choice(ids, size=2, replace=False))
        if b in partners.get(a, set()):
            continue
        unrelated.append(ValidityExample(a, b, int(rng.integers(num_types)), False))
    return [*positives, *corrupted, *unrelated]


def check_balance(labels: FloatArray) -> None:
    """Raise ConfigurationError when the majority class exceeds 60% of the labels."""
    if labels.size == 0:
        raise ConfigurationError("no validity examples")
    share = float(np.mean(labels))
    if max(share, 1.0 - share) > MAX_MAJORITY_SHARE:
        raise ConfigurationError(f"validity labels are imbalanced: {share:.1%} positive")


def validity_features(
    bank: FeatureBank, examples: Sequence[ValidityExample], texts: Sequence[tuple[int, ...]]
) -> FloatArray:
    """``(n, 5d)`` frozen probe inputs, each conditioned on its candidate relation."""
    bank.ensure([(text, PairKind.INTER) for text in texts])
    rows = []
    for example in examples:
        context = (texts[example.relation_type], PairKind.INTER)
        z_text, z_image = bank.embeddings(context, [example.a, example.b])
        rows.append(np.concatenate([z_text[0], z_image[0], z_text[1], z_image[1], bank.relation_embedding(context)]))
    return np.stack(rows)


class LinearProbe:
    """Logistic regression on standardized features, fit with AdamW on the full batch."""

    def __init__(self, width: int, seed: int) -> None:
        rng = np.random.default_rng(seed)
        self.weight = Tensor(rng.normal(0.0, 0.01, size=(width, 1)), requires_grad=True, name="probe.weight")
        self.bias = Tensor(np.zeros((1, 1)), requires_grad=True, name="probe.bias")
        self.mean = np.zeros((1, width))
        self.scale = np.ones((1, width))

    def _logits(self, features: FloatArray) -> Tensor:
        standardized = Tensor((features - self.mean) / self.scale)
        return ops.add(ops.matmul(standardized, self.weight), self.bias)

    def fit(self, features: FloatArray, labels: FloatArray, epochs: int, lr: float) -> list[float]:
        self.mean = features.mean(axis=0, keepdims=True)
        self.scale = np.where((std := features.std(axis=0, keepdims=True)) > 1e-12, std, 1.0)
        signs = np.where(labels > 0.5, 1.0, -1.0)[:, None]
        optimizer = AdamW({"weight": self.weight, "bias": self.bias}, weight_decay=0.0)
        losses = []
        for _ in range(epochs):
            with GradTape() as tape:
                loss = ops.mean(ops.softplus(ops.mul(self._logits(features), Tensor(-signs))))
                tape.backward(loss)
            optimizer.step(lr)
            optimizer.zero_grad()
            losses.append(loss.item())
        return losses

    def predict(self, features: FloatArray) -> FloatArray:
        return (self._logits(features).data[:, 0] > 0.0).astype(np.float64)


def validity_eval(features: FloatArray, labels: FloatArray, cfg: EvalConfig) -> ValidityResult:
    """Train the probe on a seeded split and return held-out accuracy.

    ``cfg.shuffle_labels`` permutes the labels first (chance-level control);
    ``cfg.leak_label`` replaces the features by the label itself (the probe
    must then be perfect).

    Raises
    ------
    ConfigurationError
        If the labels are imbalanced beyond 60/40 or either part is empty

    """
    labels = np.asarray(labels, dtype=np.float64)
    check_balance(labels)
    rng = np.random.default_rng(cfg.seed)
    if cfg.shuffle_labels:
        labels = labels[rng.permutation(labels.size)]
    if cfg.leak_label:
        features = labels[:, None].copy()

    order = rng.permutation(labels.size)
    cut = int(round(cfg.validity_train_fraction * labels.size))
    train, test = order[:cut], order[cut:]
    if train.size == 0 or test.size == 0:
        raise ConfigurationError(f"validity split of {labels.size} examples leaves an empty part")

    probe = LinearProbe(features.shape[1], cfg.seed)
    losses = probe.fit(features[train], labels[train], cfg.validity_epochs, cfg.validity_lr)
    accuracy = float(np.mean(probe.predict(features[test]) == labels[test]))
    _LOG.info("Validity probe: final train loss %.4f, held-out accuracy %.4f", losses[-1], accuracy)
    return ValidityResult(accuracy=accuracy, train_count=int(train.size), test_count=int(test.size))
