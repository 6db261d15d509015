"""Typed configuration models for each stage of a run.

These are projections of the flat :class:`~src.models.cli.RunConfig`; library
code only ever receives one of these. All are frozen so a configuration cannot
drift during a run.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .enums import Ablation, BetaOneMode, Schedule, SimilarityMode

_FROZEN = ConfigDict(use_enum_values=False, extra="forbid", frozen=True)


class GeneratorConfig(BaseModel):
    """Synthetic relational dataset parameters."""

    model_config = _FROZEN

    num_samples: int = Field(default=2000, ge=4, description="Number of items")
    num_relation_types: int = Field(default=10, ge=2, le=16, description="Relation types K")
    vocab_size: int = Field(default=1000, ge=96, description="Vocabulary size V, reserved IDs included")
    latent_dim: int = Field(default=8, ge=2, description="Latent dimension h")
    edge_threshold: float = Field(default=0.7, description="Minimum bilinear score of a planted edge")
    max_edges_per_type: int = Field(default=400, ge=1, description="Keep at most this many top-scoring edges per type")
    patches_per_item: int = Field(default=16, ge=1, description="Image patches per item")
    patch_dim: int = Field(default=16, ge=1, description="Patch feature width p")
    tokens_per_item: int = Field(default=12, ge=2, description="Text length including EOT")
    noise_std: float = Field(default=0.1, ge=0.0, description="Gaussian noise on patch features")
    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0, description="Held-out edge fraction")
    seed: int = Field(default=42, description="Generator seed")


class ModelConfig(BaseModel):
    """Encoder widths and relation-attention settings."""

    model_config = _FROZEN

    vocab_size: int = Field(default=1000, ge=2, description="Vocabulary size V")
    dim: int = Field(default=32, ge=1, description="Feature width d")
    max_text_len: int = Field(default=16, ge=1, description="Longest token sequence n_max")
    max_patches: int = Field(default=17, ge=2, description="Image positions m_max, summary slot included")
    patch_dim: int = Field(default=16, ge=1, description="Patch feature width p")
    depth: int = Field(default=1, ge=0, description="Mixer blocks per encoder")
    init_std: float = Field(default=0.02, gt=0.0, description="Std of the normal initializer")
    beta: float = Field(default=0.6, ge=0.0, le=1.0, description="Attention balance coefficient")
    beta_one_mode: BetaOneMode = Field(default=BetaOneMode.SOFT, description="Attention at beta = 1")
    seed: int = Field(default=42, description="Initialization seed")


class LossConfig(BaseModel):
    """Contrastive objective settings."""

    model_config = _FROZEN

    tau: float = Field(default=0.1, gt=0.0, description="Temperature")
    lambda_intra: float = Field(default=0.5, ge=0.0, description="Weight of the intra-modal terms")
    include_intra_terms: bool = Field(default=True, description="Add the text-text and image-image terms")
    cross_modal_only: bool = Field(default=False, description="Keep only text-image and image-text terms")
    literal_denominator: bool = Field(default=False, description="Exclude the positive from the denominator")

    @property
    def uses_intra_terms(self) -> bool:
        return self.include_intra_terms and not self.cross_modal_only


class TrainConfig(BaseModel):
    """Optimization loop settings, with the model and loss it trains."""

    model_config = _FROZEN

    model: ModelConfig = Field(default_factory=ModelConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    batch_size: int = Field(default=32, ge=2, description="Samples per batch roster")
    learning_rate: float = Field(default=5e-4, gt=0.0, description="Base learning rate")
    weight_decay: float = Field(default=0.01, ge=0.0, description="Decoupled weight decay")
    max_epochs: int = Field(default=30, ge=0, description="Epoch limit")
    patience: int = Field(default=5, ge=1, description="Epochs without validation improvement before stopping")
    schedule: Schedule = Field(default=Schedule.COSINE, description="Learning-rate schedule")
    grad_clip: float = Field(default=1.0, ge=0.0, description="Global gradient-norm bound; 0 disables")
    negative_cap: int | None = Field(default=None, ge=1, description="Negatives per anchor; None uses all eligible")
    max_redraws: int = Field(default=10, ge=0, description="Batch redraws allowed for insufficient negatives")
    validation_queries: int | None = Field(default=None, ge=1, description="Cap on validation retrieval queries")
    seed: int = Field(default=42, description="Batching seed")
    no_inter_edges: bool = Field(default=False, description="Drop all inter-sample positives")
    no_intra_loss: bool = Field(default=False, description="Drop the intra-modal loss terms")
    no_edge_description: bool = Field(default=False, description="Replace relation texts with the generic template")
    freeze_encoders: bool = Field(default=False, description="Train only the attention parameters")

    @property
    def include_inter(self) -> bool:
        return not self.no_inter_edges

    def effective_loss(self) -> LossConfig:
        """Loss settings with the ``no_intra_loss`` ablation applied."""
        if not self.no_intra_loss:
            return self.loss
        return self.loss.model_copy(update={"include_intra_terms": False})

    def with_ablation(self, setting: Ablation) -> TrainConfig:
        """Return a copy with exactly one ablation switched on."""
        flags = {
            Ablation.NO_INTER_EDGE: "no_inter_edges",
            Ablation.NO_INTRA_LOSS: "no_intra_loss",
            Ablation.NO_EDGE_DESCRIPTION: "no_edge_description",
            Ablation.FROZEN_ENCODERS: "freeze_encoders",
        }
        if setting is Ablation.FULL:
            return self
        return self.model_copy(update={flags[setting]: True})


class EvalConfig(BaseModel):
    """Evaluation task settings."""

    model_config = _FROZEN

    num_negatives: int = Field(default=20, ge=1, description="Negatives per retrieval query")
    hit_k: int = Field(default=5, ge=1, description="Cutoff of Hit@k")
    type_top_k: int = Field(default=3, ge=1, description="Cutoff of type prediction")
    modes: tuple[SimilarityMode, ...] = Field(default=tuple(SimilarityMode), description="Similarity modes")
    validity_train_fraction: float = Field(default=0.7, gt=0.0, lt=1.0, description="Probe training share")
    validity_epochs: int = Field(default=300, ge=1, description="Probe optimization steps")
    validity_lr: float = Field(default=0.05, gt=0.0, description="Probe learning rate")
    shuffle_labels: bool = Field(default=False, description="Chance-level control for the probe")
    leak_label: bool = Field(default=False, description="Leakage canary for the probe")
    chunk_size: int = Field(default=256, ge=1, description="Samples encoded per chunk")
    workers: int = Field(default=1, ge=1, description="Threads for relation-context fan-out")
    seed: int = Field(default=42, description="Query and probe seed")

    @model_validator(mode="after")
    def _modes_nonempty(self) -> EvalConfig:
        if not self.modes:
            raise ValueError("at least one similarity mode is required")
        return self
