"""Small datasets and models shared by the unit tests."""

import pytest

from src.dataio import DatasetSplit, GeneratedDataset, SampleTable, split_for_training, synthesize
from src.modeling import ModelParams, RCMLModel
from src.models.domain import GeneratorConfig, ModelConfig

TINY_GENERATOR = GeneratorConfig(
    num_samples=60,
    num_relation_types=2,
    vocab_size=96,
    latent_dim=4,
    max_edges_per_type=30,
    patches_per_item=4,
    patch_dim=4,
    tokens_per_item=6,
    noise_std=0.05,
    seed=7,
)

TINY_MODEL = ModelConfig(
    vocab_size=96,
    dim=8,
    max_text_len=12,
    max_patches=5,
    patch_dim=4,
    depth=1,
    init_std=0.3,
    seed=3,
)


@pytest.fixture(scope="session")
def tiny_dataset() -> GeneratedDataset:
    return synthesize(TINY_GENERATOR)


@pytest.fixture(scope="session")
def tiny_split(tiny_dataset: GeneratedDataset) -> DatasetSplit:
    return split_for_training(tiny_dataset.samples, tiny_dataset.edges, 0.2, 0.1, seed=7)


@pytest.fixture
def tiny_table(tiny_dataset: GeneratedDataset) -> SampleTable:
    return SampleTable(tiny_dataset.samples)


@pytest.fixture
def tiny_params() -> ModelParams:
    return ModelParams.init(TINY_MODEL)


@pytest.fixture
def tiny_model(tiny_params: ModelParams) -> RCMLModel:
    return RCMLModel(tiny_params)
