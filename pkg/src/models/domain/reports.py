"""Serializable run reports."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator


class ParameterCount(BaseModel):
    """Learnable scalar count, total and per parameter group."""

    model_config = ConfigDict(extra="forbid")

    total: int = Field(ge=0)
    text_encoder: int = Field(ge=0)
    image_encoder: int = Field(ge=0)
    attention: int = Field(ge=0)


class EpochRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epoch: int = Field(ge=1)
    train_loss: float = Field(description="Mean batch loss over the epoch")
    validation_hit: float | None = Field(default=None, description="Validation Hit@k, AVG mode")
    learning_rate: float = Field(description="Learning rate at the last step of the epoch")
    batches: int = Field(ge=0)
    redraws: int = Field(default=0, ge=0, description="Batches redrawn for insufficient negatives")


class TrainReport(BaseModel):
    """Per-epoch trace of one ``fit`` call.

    ``wall_time_seconds`` is the only field that differs between two runs
    with the same seed.
    """

    model_config = ConfigDict(extra="forbid")

    epochs: list[EpochRecord] = Field(default_factory=list)
    initial_loss: float | None = Field(default=None, description="Loss of the first batch before any update")
    best_epoch: int = Field(default=0, ge=0, description="Epoch whose parameters were returned; 0 = initial")
    stopping_epoch: int = Field(default=0, ge=0)
    stopped_early: bool = False
    inter_pair_count: int = Field(default=0, ge=0, description="Inter-sample positives seen in the first epoch")
    learning_rates: list[float] = Field(default_factory=list, description="Per-step learning rate trace")
    parameter_count: ParameterCount | None = None
    wall_time_seconds: float = Field(default=0.0, ge=0.0)

    @property
    def final_loss(self) -> float | None:
        return self.epochs[-1].train_loss if self.epochs else None


def _check_unit_interval(values: dict[str, float]) -> dict[str, float]:
    for key, value in values.items():
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"metric {key}={value} outside [0, 1]")
    return values


class MetricsReport(BaseModel):
    """Evaluation metrics of one trained model.

    Attributes
    ----------
    hit_at_k : dict[str, float]
        Retrieval Hit@k per similarity mode
    type_top_k : dict[str, float]
        Relation type prediction accuracy per similarity mode
    validity_accuracy : float | None
        Held-out accuracy of the linear validity probe

    """

    model_config = ConfigDict(extra="forbid")

    ablation: str = "full"
    beta: float | None = None
    seed: int | None = None
    config_hash: str = ""
    hit_k: int = 5
    type_k: int = 3
    hit_at_k: dict[str, float] = Field(default_factory=dict)
    type_top_k: dict[str, float] = Field(default_factory=dict)
    validity_accuracy: float | None = Field(default=None, ge=0.0, le=1.0)
    query_count: int = Field(default=0, ge=0)
    type_query_count: int = Field(default=0, ge=0)
    validity_example_count: int = Field(default=0, ge=0)
    inter_pair_count: int | None = Field(default=None, ge=0)
    parameter_count: ParameterCount | None = None

    @field_validator("hit_at_k", "type_top_k")
    @classmethod
    def _unit_interval(cls, value: dict[str, float]) -> dict[str, float]:
        return _check_unit_interval(value)


class ParameterCheck(BaseModel):
    """Worst finite-difference disagreement within one parameter tensor."""

    model_config = ConfigDict(extra="forbid")

    max_relative_error: float = Field(ge=0.0)
    worst_index: int = Field(description="Flat index of the worst entry; -1 when nothing was checked")
    analytic: float
    numeric: float


class GradCheckReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    max_relative_error: float = Field(ge=0.0)
    worst_parameter: str
    step: float
    parameters: dict[str, ParameterCheck] = Field(default_factory=dict)
    tolerance: float | None = None

    @property
    def passed(self) -> bool:
        return self.tolerance is None or self.max_relative_error < self.tolerance


class ClipCheckReport(BaseModel):
    """Outcome of comparing the full objective against the CLIP-style loss."""

    model_config = ConfigDict(extra="forbid")

    batches: int = Field(ge=0)
    tolerance: float
    max_gap: float = Field(ge=0.0, description="Largest |total - clip| in hard mode")
    soft_gap: float = Field(ge=0.0, description="Largest |total - clip| with soft attention at beta = 1")
    passed: bool
