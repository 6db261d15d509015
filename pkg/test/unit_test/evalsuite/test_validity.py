import numpy as np
import pytest

from src.dataio import SampleTable, relation_text_tokens
from src.evalsuite import (
    FeatureBank,
    LinearProbe,
    build_validity_examples,
    check_balance,
    relation_type_texts,
    validity_eval,
    validity_features,
)
from src.exceptions import ConfigurationError
from src.modeling import RCMLModel
from src.models.domain import EvalConfig, RelationEdge

NUM_TYPES = 3


def paired_edges(count: int) -> list[RelationEdge]:
    """Edges (0, 1), (2, 3), ... cycling through the relation types."""
    return [
        RelationEdge(
            src=2 * i,
            dst=2 * i + 1,
            relation_type=i % NUM_TYPES,
            relation_text_tokens=list(relation_text_tokens(i % NUM_TYPES)),
        )
        for i in range(count)
    ]


def balanced_labels(count: int) -> np.ndarray:
    return np.arange(count, dtype=np.float64) % 2


class TestBuildValidityExamples:
    """Balanced positive and negative examples."""

    def test_balance_and_composition(self) -> None:
        """Positives come first, then corrupted-type pairs, then unrelated pairs."""
        edges = paired_edges(10)
        examples = build_validity_examples(edges, edges, list(range(40)), NUM_TYPES, seed=2)
        assert len(examples) == 20
        positives, corrupted, unrelated = examples[:10], examples[10:15], examples[15:]
        assert all(e.label for e in positives)
        assert not any(e.label for e in corrupted + unrelated)

        carried = {frozenset((e.src, e.dst)): e.relation_type for e in edges}
        for example in corrupted:
            assert carried[frozenset((example.a, example.b))] != example.relation_type
        for example in unrelated:
            assert frozenset((example.a, example.b)) not in carried
            assert 0 <= example.relation_type < NUM_TYPES
        check_balance(np.array([e.label for e in examples], dtype=np.float64))

    def test_deterministic(self) -> None:
        edges = paired_edges(8)
        first = build_validity_examples(edges, edges, list(range(30)), NUM_TYPES, seed=5)
        assert first == build_validity_examples(edges, edges, list(range(30)), NUM_TYPES, seed=5)

    def test_every_type_already_carried(self) -> None:
        """With a single type no pair can be corrupted."""
        edges = [RelationEdge(src=0, dst=1, relation_type=0, relation_text_tokens=list(relation_text_tokens(0)))] * 2
        with pytest.raises(ConfigurationError):
            build_validity_examples(edges, edges, list(range(10)), num_types=1, seed=0)


class TestCheckBalance:
    """The 60/40 rule."""

    def test_accepts_sixty_percent(self) -> None:
        check_balance(np.array([1.0, 0.0, 1.0, 0.0, 1.0]))

    @pytest.mark.parametrize("labels", [[1.0, 1.0, 1.0, 0.0], [0.0, 0.0, 0.0], []])
    def test_rejects_imbalance(self, labels: list[float]) -> None:
        with pytest.raises(ConfigurationError):
            check_balance(np.array(labels))


class TestValidityEval:
    """The frozen-feature linear probe."""

    def test_leaked_label_is_learned_perfectly(self) -> None:
        """Replacing features by the label must give a perfect probe."""
        features = np.random.default_rng(0).standard_normal((200, 6))
        result = validity_eval(features, balanced_labels(200), EvalConfig(leak_label=True, seed=1))
        assert result.accuracy == 1.0
        assert result.train_count == 140
        assert result.test_count == 60

    def test_shuffled_labels_stay_near_chance(self) -> None:
        """Random features with permuted labels carry no signal."""
        features = np.random.default_rng(1).standard_normal((400, 5))
        cfg = EvalConfig(shuffle_labels=True, validity_epochs=100, seed=2)
        assert 0.3 < validity_eval(features, balanced_labels(400), cfg).accuracy < 0.7

    def test_separable_features(self) -> None:
        """A label-aligned feature direction is found."""
        rng = np.random.default_rng(3)
        labels = balanced_labels(200)
        features = rng.standard_normal((200, 4))
        features[:, 2] += 4.0 * (2.0 * labels - 1.0)
        assert validity_eval(features, labels, EvalConfig(seed=4)).accuracy > 0.95

    def test_imbalanced_labels(self) -> None:
        with pytest.raises(ConfigurationError):
            validity_eval(np.zeros((10, 2)), np.array([1.0] * 8 + [0.0] * 2), EvalConfig())

    def test_probe_loss_decreases(self) -> None:
        rng = np.random.default_rng(5)
        labels = balanced_labels(50)
        features = rng.standard_normal((50, 3)) + labels[:, None]
        losses = LinearProbe(3, seed=0).fit(features, labels, epochs=50, lr=0.05)
        assert losses[-1] < losses[0]


class TestValidityFeatures:
    """Probe inputs built from the model."""

    def test_width_and_rows(self, tiny_model: RCMLModel, tiny_table: SampleTable) -> None:
        """Each example gives both endpoints' text and image embeddings plus the relation embedding."""
        edges = paired_edges(6)
        examples = build_validity_examples(edges, edges, tiny_table.ids, NUM_TYPES, seed=0)
        bank = FeatureBank(tiny_model, tiny_table)
        features = validity_features(bank, examples, relation_type_texts(edges, NUM_TYPES))
        assert features.shape == (12, 5 * 8)
        np.testing.assert_allclose(np.linalg.norm(features[:, :8], axis=1), 1.0)
