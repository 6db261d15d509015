import json

import numpy as np
import pytest

from src.dataio import GeneratedDataset, build_manifest, generate, load_directory, synthesize
from src.dataio.vocabulary import (
    EOT_ID,
    FIRST_CONTENT_ID,
    canonical_relation_texts,
    generic_intra_tokens,
    relation_text_tokens,
    tokenize,
)
from src.exceptions import ConfigurationError, VocabularyError
from test.unit_test.conftest import TINY_GENERATOR


class TestVocabulary:
    """Template sentences and their token IDs."""

    def test_relation_texts_are_distinct(self) -> None:
        """Every relation type has its own description ending in EOT."""
        texts = canonical_relation_texts(10)
        assert len(set(texts)) == 10
        assert all(text[-1] == EOT_ID and EOT_ID not in text[:-1] for text in texts)
        assert all(0 < token < FIRST_CONTENT_ID for text in texts for token in text)

    def test_generic_intra_sentence(self) -> None:
        """The intra sentence differs from every relation description."""
        assert generic_intra_tokens() not in canonical_relation_texts(16)
        assert len(relation_text_tokens(0)) == 9

    def test_unknown_word(self) -> None:
        """Only template words tokenize."""
        with pytest.raises(VocabularyError):
            tokenize("users interested in skateboarding")

    def test_relation_type_without_name(self) -> None:
        """At most sixteen relation types have descriptions."""
        with pytest.raises(ConfigurationError):
            relation_text_tokens(16)


class TestSynthesize:
    """The synthetic relational dataset."""

    def test_deterministic(self, tiny_dataset: GeneratedDataset) -> None:
        """The same configuration reproduces samples and edges."""
        again = synthesize(TINY_GENERATOR)
        assert again.samples == tiny_dataset.samples
        assert again.edges == tiny_dataset.edges

    def test_seed_changes_data(self, tiny_dataset: GeneratedDataset) -> None:
        """Another seed draws other samples."""
        other = synthesize(TINY_GENERATOR.model_copy(update={"seed": 8}))
        assert other.samples != tiny_dataset.samples

    def test_sample_shapes(self, tiny_dataset: GeneratedDataset) -> None:
        """Texts end in their single EOT and images have the configured patches."""
        for sample in tiny_dataset.samples:
            assert len(sample.text_tokens) == TINY_GENERATOR.tokens_per_item
            assert sample.text_tokens[-1] == EOT_ID
            assert all(FIRST_CONTENT_ID <= t < TINY_GENERATOR.vocab_size for t in sample.text_tokens[:-1])
            assert np.asarray(sample.image_patches).shape == (4, 4)

    def test_edges_follow_the_latent_forms(self, tiny_dataset: GeneratedDataset) -> None:
        """Every planted edge scores above its type's threshold and types respect the cap."""
        oracle = tiny_dataset.oracle()
        for edge in tiny_dataset.edges:
            assert edge.src < edge.dst
            assert oracle.score(edge.src, edge.dst, edge.relation_type) > TINY_GENERATOR.edge_threshold
            assert edge.relation_text == relation_text_tokens(edge.relation_type)
        counts = tiny_dataset.edges_per_type()
        assert all(0 < count <= TINY_GENERATOR.max_edges_per_type for count in counts)

    def test_forms_are_symmetric(self, tiny_dataset: GeneratedDataset) -> None:
        """Relation scores do not depend on endpoint order."""
        oracle = tiny_dataset.oracle()
        edge = tiny_dataset.edges[0]
        assert oracle.score(edge.dst, edge.src, edge.relation_type) == pytest.approx(
            oracle.score(edge.src, edge.dst, edge.relation_type)
        )
        assert oracle.type_scores(edge.src, edge.dst).shape == (2,)

    def test_vocabulary_too_small(self) -> None:
        """Topic bands must fit above the template IDs."""
        with pytest.raises(ConfigurationError):
            synthesize(TINY_GENERATOR.model_copy(update={"latent_dim": 20}))

    def test_unreachable_threshold(self) -> None:
        """A threshold no pair can exceed is a configuration error."""
        with pytest.raises(ConfigurationError, match="lower the threshold"):
            synthesize(TINY_GENERATOR.model_copy(update={"edge_threshold": 1.5}))


class TestGenerate:
    """Dataset files on disk."""

    def test_files_are_byte_identical(self, tmp_path) -> None:
        """Two runs with one configuration write the same bytes."""
        first = generate(TINY_GENERATOR, tmp_path / "a")
        second = generate(TINY_GENERATOR, tmp_path / "b")
        for name in ("samples_path", "edges_path", "manifest_path"):
            assert getattr(first, name).read_bytes() == getattr(second, name).read_bytes()

    def test_manifest_describes_the_data(self, tmp_path, tiny_dataset: GeneratedDataset) -> None:
        """Counts, relation names and split summary land in manifest.json."""
        files = generate(TINY_GENERATOR, tmp_path)
        manifest = json.loads(files.manifest_path.read_text())
        assert manifest == build_manifest(tiny_dataset)
        assert manifest["counts"]["samples"] == 60
        assert manifest["counts"]["edges"] == len(tiny_dataset.edges)
        assert manifest["relation_types"] == ["fishing", "camping"]
        assert manifest["split"]["test_edges"] == int(0.2 * len(tiny_dataset.edges))
        assert len(manifest["config_hash"]) == 64

    def test_written_files_load_back(self, tmp_path, tiny_dataset: GeneratedDataset) -> None:
        """The loader reads exactly what the generator wrote."""
        generate(TINY_GENERATOR, tmp_path)
        _, samples, edges = load_directory(tmp_path)
        assert tuple(samples) == tiny_dataset.samples
        assert tuple(edges) == tiny_dataset.edges
