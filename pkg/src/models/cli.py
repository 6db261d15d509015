"""CLI models: the commands and the flat run configuration.

Every experiment knob lives in one flat :class:`RunConfig`. It is read from a
``key = value`` file (see ``docs/config.md``), overridden by command-line
flags, and projected onto the typed stage configurations that library code
receives.
"""

from __future__ import annotations

import tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from ..exceptions import ConfigurationError
from ..fingerprint import config_hash
from .domain.configs import EvalConfig, GeneratorConfig, LossConfig, ModelConfig, TrainConfig
from .domain.enums import BetaOneMode, EvalTask, Schedule, SimilarityMode

type ModeChoice = Literal["all", "TT", "II", "TI", "IT", "AVG"]

# Process tuning only; left out of the config hash.
_UNHASHED = frozenset({"workers", "chunk_size"})


class LogLevel(str, Enum):
    """Logging level enumeration."""

    DEBUG = "debug"
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
    CRITICAL = "critical"


class Command(str, Enum):
    GEN_DATA = "gen-data"
    TRAIN = "train"
    EVAL = "eval"
    GRADCHECK = "gradcheck"
    CLIP_CHECK = "clip-check"
    ABLATE = "ablate"
    BETA_SWEEP = "beta-sweep"
    DUMP_EMBEDDINGS = "dump-embeddings"


class RunConfig(BaseModel):
    """Flat table of every generator, model, loss, training and evaluation setting.

    A single ``seed`` drives generation, splitting, initialization, batching
    and evaluation. ``vocab_size`` and ``patch_dim`` are shared by the
    generator and the model.

    Examples
    --------
    .. code-block:: python

        cfg = RunConfig.from_file("paper.config").model_copy(update={"beta": 0.4})
        fit(split, cfg.to_train())

    """

    model_config = ConfigDict(use_enum_values=False, extra="forbid", frozen=True)

    # Data
    num_samples: int = Field(default=2000, description="Number of items")
    num_relation_types: int = Field(default=10, description="Relation types K")
    vocab_size: int = Field(default=1000, description="Vocabulary size V")
    latent_dim: int = Field(default=8, description="Latent dimension of the generator")
    edge_threshold: float = Field(default=0.7, description="Minimum bilinear score of a planted edge")
    max_edges_per_type: int = Field(default=400, description="Edges kept per relation type")
    patches_per_item: int = Field(default=16, description="Image patches per item")
    patch_dim: int = Field(default=16, description="Patch feature width")
    tokens_per_item: int = Field(default=12, description="Text length including EOT")
    noise_std: float = Field(default=0.1, description="Gaussian noise on patch features")
    test_fraction: float = Field(default=0.2, description="Held-out edge fraction")
    validation_fraction: float = Field(default=0.1, description="Validation slice of the training edges; 0 disables")
    seed: int = Field(default=42, description="Seed for every random draw")

    # Model
    dim: int = Field(default=32, description="Feature width d")
    max_text_len: int = Field(default=16, description="Longest token sequence")
    depth: int = Field(default=1, description="Mixer blocks per encoder")
    init_std: float = Field(default=0.02, description="Std of the normal initializer")
    beta: float = Field(default=0.6, description="Attention balance coefficient in [0, 1]")
    beta_one_mode: BetaOneMode = Field(default=BetaOneMode.SOFT, description="Attention at beta = 1")

    # Loss
    tau: float = Field(default=0.1, description="Temperature")
    lambda_intra: float = Field(default=0.5, description="Weight of the intra-modal terms")
    cross_modal_only: bool = Field(default=False, description="Keep only the text-image and image-text terms")
    literal_denominator: bool = Field(default=False, description="Exclude the positive from the denominator")

    # Training
    batch_size: int = Field(default=32, description="Samples per batch roster")
    learning_rate: float = Field(default=5e-4, description="Base learning rate")
    weight_decay: float = Field(default=0.01, description="Decoupled weight decay")
    max_epochs: int = Field(default=30, description="Epoch limit")
    patience: int = Field(default=5, description="Epochs without validation improvement before stopping")
    schedule: Schedule = Field(default=Schedule.COSINE, description="Learning-rate schedule")
    grad_clip: float = Field(default=1.0, description="Global gradient-norm bound; 0 disables")
    negative_cap: int | None = Field(default=None, description="Negatives per anchor; unset uses all eligible")
    max_redraws: int = Field(default=10, description="Batch redraws allowed for insufficient negatives")
    validation_queries: int | None = Field(default=None, description="Cap on validation retrieval queries")
    no_inter_edges: bool = Field(default=False, description="Drop all inter-sample positives")
    no_intra_loss: bool = Field(default=False, description="Drop the intra-modal loss terms")
    no_edge_description: bool = Field(default=False, description="Replace relation texts with the generic template")
    freeze_encoders: bool = Field(default=False, description="Train only the attention parameters")

    # Evaluation
    num_negatives: int = Field(default=20, description="Negatives per retrieval query")
    hit_k: int = Field(default=5, description="Cutoff of Hit@k")
    type_top_k: int = Field(default=3, description="Cutoff of type prediction")
    validity_train_fraction: float = Field(default=0.7, description="Probe training share")
    validity_epochs: int = Field(default=300, description="Probe optimization steps")
    validity_lr: float = Field(default=0.05, description="Probe learning rate")
    shuffle_labels: bool = Field(default=False, description="Shuffle probe training labels (chance control)")
    leak_label: bool = Field(default=False, description="Append the label to probe features (leakage canary)")
    chunk_size: int = Field(default=256, description="Samples encoded per chunk")
    workers: int | None = Field(default=None, description="Evaluation threads; unset reads RCML_WORKERS")
    task: EvalTask = Field(default=EvalTask.ALL, description="Evaluation task")
    mode: ModeChoice = Field(default="all", description="Similarity mode, or all five")

    # Experiments and checks
    betas: tuple[float, ...] = Field(default=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0), description="Beta sweep grid")
    gradcheck_dim: int = Field(default=8, description="Feature width of the gradient check model")
    gradcheck_batch: int = Field(default=4, description="Samples in the gradient check batch")
    clip_batches: int = Field(default=20, description="Random batches compared by clip-check")
    clip_batch_size: int = Field(default=8, description="Samples per clip-check batch")

    @classmethod
    def from_file(cls, path: str | Path, **overrides: Any) -> RunConfig:
        """Read a flat ``key = value`` file, then apply ``overrides``.

        Raises
        ------
        ConfigurationError
            If the file is missing or malformed, uses a table, or names an unknown key

        """
        source = Path(path)
        try:
            values = tomllib.loads(source.read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigurationError(f"config file not found: {source}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"{source}: {e}") from e
        for key, value in values.items():
            if isinstance(value, dict):
                raise ConfigurationError(f"{source}: tables are not supported, flatten [{key}]")
        return cls.resolve(values, overrides, origin=str(source))

    @classmethod
    def resolve(cls, values: dict[str, Any], overrides: dict[str, Any], origin: str = "config") -> RunConfig:
        unknown = sorted(set(values) - set(cls.model_fields))
        if unknown:
            raise ConfigurationError(f"{origin}: unknown config key {unknown[0]!r}")
        return cls.model_validate({**values, **overrides})

    def to_generator(self) -> GeneratorConfig:
        return GeneratorConfig(
            num_samples=self.num_samples,
            num_relation_types=self.num_relation_types,
            vocab_size=self.vocab_size,
            latent_dim=self.latent_dim,
            edge_threshold=self.edge_threshold,
            max_edges_per_type=self.max_edges_per_type,
            patches_per_item=self.patches_per_item,
            patch_dim=self.patch_dim,
            tokens_per_item=self.tokens_per_item,
            noise_std=self.noise_std,
            test_fraction=self.test_fraction,
            seed=self.seed,
        )

    def to_model(self) -> ModelConfig:
        return ModelConfig(
            vocab_size=self.vocab_size,
            dim=self.dim,
            max_text_len=max(self.max_text_len, self.tokens_per_item),
            max_patches=self.patches_per_item + 1,
            patch_dim=self.patch_dim,
            depth=self.depth,
            init_std=self.init_std,
            beta=self.beta,
            beta_one_mode=self.beta_one_mode,
            seed=self.seed,
        )

    def to_loss(self) -> LossConfig:
        return LossConfig(
            tau=self.tau,
            lambda_intra=self.lambda_intra,
            cross_modal_only=self.cross_modal_only,
            literal_denominator=self.literal_denominator,
        )

    def to_train(self, model: ModelConfig | None = None) -> TrainConfig:
        """Training settings; ``model`` replaces the model projection when given."""
        return TrainConfig(
            model=model if model is not None else self.to_model(),
            loss=self.to_loss(),
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            max_epochs=self.max_epochs,
            patience=self.patience,
            schedule=self.schedule,
            grad_clip=self.grad_clip,
            negative_cap=self.negative_cap,
            max_redraws=self.max_redraws,
            validation_queries=self.validation_queries,
            seed=self.seed,
            no_inter_edges=self.no_inter_edges,
            no_intra_loss=self.no_intra_loss,
            no_edge_description=self.no_edge_description,
            freeze_encoders=self.freeze_encoders,
        )

    def to_eval(self) -> EvalConfig:
        modes = tuple(SimilarityMode) if self.mode == "all" else (SimilarityMode(self.mode),)
        return EvalConfig(
            num_negatives=self.num_negatives,
            hit_k=self.hit_k,
            type_top_k=self.type_top_k,
            modes=modes,
            validity_train_fraction=self.validity_train_fraction,
            validity_epochs=self.validity_epochs,
            validity_lr=self.validity_lr,
            shuffle_labels=self.shuffle_labels,
            leak_label=self.leak_label,
            chunk_size=self.chunk_size,
            workers=self.workers or 1,
            seed=self.seed,
        )

    def config_hash(self) -> str:
        """SHA-256 of the sorted-key JSON of every result-affecting field."""
        return config_hash(self.model_dump(mode="json", exclude=set(_UNHASHED)))
