"""Learnable parameters of the encoders and the relation attention.

Conventions
===========

Token matrices are column-major in the feature sense: a sequence of ``L``
tokens is a ``(d, L)`` matrix, and a batch is ``(N, d, L)``. Every ``d × d``
weight therefore acts from the left (``W @ H``) and biases are stored as
``(k, 1)`` columns so they broadcast over token positions.

Parameter names are dotted paths (``text.mixer0.w_q``, ``attention.w_o``);
they key checkpoints, optimizer state and gradient-check reports.
"""

from __future__ import annotations

from collections.abc import Iterator
from copy import deepcopy
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import CheckpointError, ConfigurationError
from ..models.domain.configs import ModelConfig
from ..models.domain.enums import BetaOneMode
from ..models.domain.reports import ParameterCount
from ..tensor_core import Tensor
from ..types import FloatArray

FFN_EXPANSION = 4


def _param(rng: np.random.Generator, shape: tuple[int, ...], std: float, name: str) -> Tensor:
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True, name=name)


@dataclass
class MixerParams:
    """One self-attention block followed by a feed-forward block."""

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    ffn_in: Tensor
    ffn_in_bias: Tensor
    ffn_out: Tensor
    ffn_out_bias: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int, std: float, prefix: str) -> MixerParams:
        hidden = FFN_EXPANSION * dim
        return cls(
            w_q=_param(rng, (dim, dim), std, f"{prefix}.w_q"),
            w_k=_param(rng, (dim, dim), std, f"{prefix}.w_k"),
            w_v=_param(rng, (dim, dim), std, f"{prefix}.w_v"),
            w_o=_param(rng, (dim, dim), std, f"{prefix}.w_o"),
            ffn_in=_param(rng, (hidden, dim), std, f"{prefix}.ffn_in"),
            ffn_in_bias=_param(rng, (hidden, 1), std, f"{prefix}.ffn_in_bias"),
            ffn_out=_param(rng, (dim, hidden), std, f"{prefix}.ffn_out"),
            ffn_out_bias=_param(rng, (dim, 1), std, f"{prefix}.ffn_out_bias"),
        )

    def items(self, prefix: str) -> Iterator[tuple[str, Tensor]]:
        for key in ("w_q", "w_k", "w_v", "w_o", "ffn_in", "ffn_in_bias", "ffn_out", "ffn_out_bias"):
            yield f"{prefix}.{key}", getattr(self, key)


@dataclass
class TextEncoderParams:
    token_embedding: Tensor
    positional_embedding: Tensor
    mixers: list[MixerParams] = field(default_factory=list)

    @property
    def vocab_size(self) -> int:
        return self.token_embedding.shape[0]

    @property
    def max_len(self) -> int:
        return self.positional_embedding.shape[0]

    @property
    def dim(self) -> int:
        return self.token_embedding.shape[1]

    def items(self, prefix: str = "text") -> Iterator[tuple[str, Tensor]]:
        yield f"{prefix}.token_embedding", self.token_embedding
        yield f"{prefix}.positional_embedding", self.positional_embedding
        for i, mixer in enumerate(self.mixers):
            yield from mixer.items(f"{prefix}.mixer{i}")


@dataclass
class ImageEncoderParams:
    patch_projection: Tensor
    summary_embedding: Tensor
    projector_in: Tensor
    projector_in_bias: Tensor
    projector_out: Tensor
    projector_out_bias: Tensor
    max_patches: int
    mixers: list[MixerParams] = field(default_factory=list)

    @property
    def patch_dim(self) -> int:
        return self.patch_projection.shape[0]

    @property
    def dim(self) -> int:
        return self.patch_projection.shape[1]

    def items(self, prefix: str = "image") -> Iterator[tuple[str, Tensor]]:
        yield f"{prefix}.patch_projection", self.patch_projection
        yield f"{prefix}.summary_embedding", self.summary_embedding
        for i, mixer in enumerate(self.mixers):
            yield from mixer.items(f"{prefix}.mixer{i}")
        yield f"{prefix}.projector_in", self.projector_in
        yield f"{prefix}.projector_in_bias", self.projector_in_bias
        yield f"{prefix}.projector_out", self.projector_out
        yield f"{prefix}.projector_out_bias", self.projector_out_bias


@dataclass
class AttentionParams:
    """Relation-conditioned pooling weights plus the non-learnable balance settings."""

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    beta: float = 0.6
    beta_one_mode: BetaOneMode = BetaOneMode.SOFT

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must lie in [0, 1], got {self.beta}")

    @property
    def dim(self) -> int:
        return self.w_q.shape[0]

    @property
    def hard_summary(self) -> bool:
        """True when attention collapses to an exact one-hot on the summary token."""
        return self.beta == 1.0 and self.beta_one_mode == BetaOneMode.HARD

    def items(self, prefix: str = "attention") -> Iterator[tuple[str, Tensor]]:
        for key in ("w_q", "w_k", "w_v", "w_o"):
            yield f"{prefix}.{key}", getattr(self, key)


@dataclass
class ModelParams:
    """Every learnable tensor of the model.

    Examples
    --------
    .. code-block:: python

        params = ModelParams.init(ModelConfig(dim=8, vocab_size=80))
        for name, tensor in params.named_tensors().items():
            print(name, tensor.shape)

    """

    config: ModelConfig
    text: TextEncoderParams
    image: ImageEncoderParams
    attention: AttentionParams

    @classmethod
    def init(cls, config: ModelConfig) -> ModelParams:
        """Draw every parameter i.i.d. from ``N(0, init_std²)`` with ``config.seed``."""
        rng = np.random.default_rng(config.seed)
        d, std = config.dim, config.init_std
        text = TextEncoderParams(
            token_embedding=_param(rng, (config.vocab_size, d), std, "text.token_embedding"),
            positional_embedding=_param(rng, (config.max_text_len, d), std, "text.positional_embedding"),
            mixers=[MixerParams.init(rng, d, std, f"text.mixer{i}") for i in range(config.depth)],
        )
        image = ImageEncoderParams(
            patch_projection=_param(rng, (config.patch_dim, d), std, "image.patch_projection"),
            summary_embedding=_param(rng, (d,), std, "image.summary_embedding"),
            mixers=[MixerParams.init(rng, d, std, f"image.mixer{i}") for i in range(config.depth)],
            projector_in=_param(rng, (d, d), std, "image.projector_in"),
            projector_in_bias=_param(rng, (d, 1), std, "image.projector_in_bias"),
            projector_out=_param(rng, (d, d), std, "image.projector_out"),
            projector_out_bias=_param(rng, (d, 1), std, "image.projector_out_bias"),
            max_patches=config.max_patches,
        )
        attention = AttentionParams(
            w_q=_param(rng, (d, d), std, "attention.w_q"),
            w_k=_param(rng, (d, d), std, "attention.w_k"),
            w_v=_param(rng, (d, d), std, "attention.w_v"),
            w_o=_param(rng, (d, d), std, "attention.w_o"),
            beta=config.beta,
            beta_one_mode=BetaOneMode(config.beta_one_mode),
        )
        return cls(config=config, text=text, image=image, attention=attention)

    def named_tensors(self) -> dict[str, Tensor]:
        """All parameters keyed by dotted name, in a fixed order."""
        return dict((*self.text.items(), *self.image.items(), *self.attention.items()))

    def encoder_names(self) -> set[str]:
        return {name for name, _ in (*self.text.items(), *self.image.items())}

    def parameter_count(self) -> ParameterCount:
        text = sum(t.size for _, t in self.text.items())
        image = sum(t.size for _, t in self.image.items())
        attention = sum(t.size for _, t in self.attention.items())
        return ParameterCount(
            total=text + image + attention, text_encoder=text, image_encoder=image, attention=attention
        )

    def zero_grad(self) -> None:
        for tensor in self.named_tensors().values():
            tensor.zero_grad()

    def state(self) -> dict[str, FloatArray]:
        """Copies of every parameter array."""
        return {name: tensor.data.copy() for name, tensor in self.named_tensors().items()}

    def load_state(self, state: dict[str, FloatArray]) -> None:
        """Overwrite parameters in place from ``state``.

        Raises
        ------
        CheckpointError
            If a name is missing or a shape differs

        """
        tensors = self.named_tensors()
        missing = sorted(set(tensors) - set(state))
        if missing:
            raise CheckpointError(f"parameters missing from state: {', '.join(missing)}")
        for name, tensor in tensors.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise CheckpointError(f"parameter {name}: expected shape {tensor.shape}, got {value.shape}")
            tensor.data[...] = value

    def copy(self) -> ModelParams:
        """Deep copy with fresh tensors and zeroed gradients."""
        clone = deepcopy(self)
        clone.zero_grad()
        return clone

    def with_attention_mode(self, beta: float, beta_one_mode: BetaOneMode) -> ModelParams:
        """Copy sharing nothing, with different attention balance settings."""
        clone = self.copy()
        clone.attention = AttentionParams(
            w_q=clone.attention.w_q,
            w_k=clone.attention.w_k,
            w_v=clone.attention.w_v,
            w_o=clone.attention.w_o,
            beta=beta,
            beta_one_mode=beta_one_mode,
        )
        return clone
