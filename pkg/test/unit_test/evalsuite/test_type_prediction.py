import numpy as np
import pytest

from src.dataio import DatasetSplit, GeneratedDataset, SampleTable, relation_text_tokens
from src.evalsuite import (
    FeatureBank,
    oracle_pair_scorer,
    random_pair_scorer,
    relation_type_predict,
    relation_type_texts,
    type_accuracy,
    type_prediction_report,
)
from src.exceptions import ConfigurationError
from src.modeling import RCMLModel
from src.models.domain import RelationEdge, SimilarityMode


class TestRelationTypePredict:
    """Top-k membership of the true type."""

    def test_top_k(self) -> None:
        scores = np.array([0.2, 0.9, 0.4, 0.1])
        assert relation_type_predict(scores, 1, top_k=1)
        assert relation_type_predict(scores, 0, top_k=3)
        assert not relation_type_predict(scores, 3, top_k=3)

    def test_ties_go_to_smaller_type(self) -> None:
        """Equal scores rank the smaller type index first."""
        scores = np.array([0.1, 0.5, 0.5])
        assert relation_type_predict(scores, 1, top_k=1)
        assert not relation_type_predict(scores, 2, top_k=1)

    def test_more_slots_than_types(self) -> None:
        with pytest.raises(ConfigurationError):
            relation_type_predict(np.zeros(2), 0, top_k=3)


class TestTypeAccuracy:
    """Accuracy over held-out edges."""

    def test_oracle_with_every_type_allowed(self, tiny_dataset: GeneratedDataset) -> None:
        """Allowing as many guesses as there are types is always right."""
        oracle = oracle_pair_scorer(tiny_dataset.oracle())
        assert type_accuracy(tiny_dataset.edges, oracle, top_k=2) == 1.0

    def test_random_scorer_is_seeded(self, tiny_dataset: GeneratedDataset) -> None:
        first = type_accuracy(tiny_dataset.edges, random_pair_scorer(2, seed=5), top_k=1)
        second = type_accuracy(tiny_dataset.edges, random_pair_scorer(2, seed=5), top_k=1)
        assert first == second
        assert 0.0 <= first <= 1.0

    def test_random_scorer_near_chance(self) -> None:
        """Random scores over ten types put the true type in the top three about 30% of the time."""
        texts = {k: list(relation_text_tokens(k)) for k in range(10)}
        edges = [
            RelationEdge(src=i, dst=i + 1, relation_type=i % 10, relation_text_tokens=texts[i % 10])
            for i in range(10_000)
        ]
        accuracy = type_accuracy(edges, random_pair_scorer(10, seed=9), top_k=3)
        assert 0.27 <= accuracy <= 0.33

    def test_no_edges(self) -> None:
        with pytest.raises(ConfigurationError):
            type_accuracy([], random_pair_scorer(3, seed=0))

    def test_texts_fall_back_to_the_template(self) -> None:
        """Types without an edge use their generator description."""
        edge = RelationEdge(src=0, dst=1, relation_type=1, relation_text_tokens=list(relation_text_tokens(1)))
        texts = relation_type_texts([edge], 3)
        assert texts == [relation_text_tokens(0), relation_text_tokens(1), relation_text_tokens(2)]

    def test_report_per_mode(self, tiny_model: RCMLModel, tiny_split: DatasetSplit) -> None:
        """The model report has one accuracy per requested mode."""
        bank = FeatureBank(tiny_model, SampleTable(tiny_split.samples))
        texts = relation_type_texts(tiny_split.all_edges, 2)
        report = type_prediction_report(bank, tiny_split.test, texts, [SimilarityMode.TT, SimilarityMode.AVG], 1)
        assert set(report) == {"TT", "AVG"}
        assert all(0.0 <= value <= 1.0 for value in report.values())
        with pytest.raises(ConfigurationError):
            type_prediction_report(bank, tiny_split.test, texts, [SimilarityMode.TT], top_k=3)
