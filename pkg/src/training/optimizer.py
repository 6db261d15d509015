"""AdamW with decoupled weight decay, the learning-rate schedule, and norm clipping."""

from __future__ import annotations

import logging
import math
from collections.abc import Collection, Mapping
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConfigurationError, NumericError, ShapeError
from ..models.domain.enums import Schedule
from ..tensor_core import Tensor
from ..types import FloatArray

_LOG = logging.getLogger(__name__)

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First and second moments per parameter name, plus the step counter."""

    step: int = 0
    first: dict[str, FloatArray] = field(default_factory=dict)
    second: dict[str, FloatArray] = field(default_factory=dict)


def optimizer_step(
    named: Mapping[str, Tensor],
    grads: Mapping[str, FloatArray | None],
    state: AdamState,
    lr: float,
    weight_decay: float,
    frozen: Collection[str] = (),
) -> None:
    """Apply one in-place AdamW update.

    ``theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)``
    with ``beta1 = 0.9``, ``beta2 = 0.999``, ``eps = 1e-8``. Parameters in
    ``frozen`` or without a gradient are left untouched and their moments
    do not advance.

    Raises
    ------
    NumericError
        If a gradient holds NaN or infinity; the message names the parameter
    ShapeError
        If a gradient's shape differs from its parameter's

    """
    for name, grad in grads.items():
        if grad is not None and not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")

    state.step += 1
    correction1 = 1.0 - BETA1**state.step
    correction2 = 1.0 - BETA2**state.step
    for name, param in named.items():
        grad = grads.get(name)
        if grad is None or name in frozen:
            continue
        if grad.shape != param.shape:
            raise ShapeError(f"gradient for {name!r} has shape {grad.shape}, parameter has {param.shape}")
        m = state.first.setdefault(name, np.zeros_like(param.data))
        v = state.second.setdefault(name, np.zeros_like(param.data))
        m *= BETA1
        m += (1.0 - BETA1) * grad
        v *= BETA2
        v += (1.0 - BETA2) * grad * grad
        update = (m / correction1) / (np.sqrt(v / correction2) + EPSILON)
        param.data -= lr * (update + weight_decay * param.data)


class AdamW:
    """Stateful wrapper over :func:`optimizer_step` for a fixed parameter set.

    Parameters
    ----------
    named : Mapping[str, Tensor]
        Parameters updated in place
    weight_decay : float
        Decoupled decay coefficient
    frozen : Collection[str], optional
        Names never updated

    Examples
    --------
    .. code-block:: python

        optimizer = AdamW(params.named_tensors(), weight_decay=0.01)
        with GradTape() as tape:
            tape.backward(loss_fn())
        optimizer.step(lr=5e-4)
        optimizer.zero_grad()

    """

    def __init__(self, named: Mapping[str, Tensor], weight_decay: float = 0.0, frozen: Collection[str] = ()) -> None:
        self.named = dict(named)
        self.weight_decay = weight_decay
        self.frozen = frozenset(frozen)
        self.state = AdamState()

    def grads(self) -> dict[str, FloatArray | None]:
        return {name: param.grad for name, param in self.named.items()}

    def step(self, lr: float) -> None:
        optimizer_step(self.named, self.grads(), self.state, lr, self.weight_decay, self.frozen)

    def zero_grad(self) -> None:
        for param in self.named.values():
            param.zero_grad()


def lr_schedule(step: int, total_steps: int, base_lr: float, schedule: Schedule = Schedule.COSINE) -> float:
    """Learning rate at ``step``: ``base_lr * (1 + cos(pi * step / total_steps)) / 2`` for cosine decay.

    Raises
    ------
    ConfigurationError
        If ``total_steps`` is not positive or ``step`` is outside ``[0, total_steps]``

    """
    if total_steps <= 0:
        raise ConfigurationError(f"total_steps must be positive, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ConfigurationError(f"step {step} outside [0, {total_steps}]")
    if Schedule(schedule) is Schedule.CONSTANT:
        return base_lr
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def global_grad_norm(grads: Mapping[str, FloatArray | None]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values() if g is not None))


def clip_grad_norm(named: Mapping[str, Tensor], max_norm: float) -> float:
    """Rescale every gradient in place so their global L2 norm is at most ``max_norm``.

    ``max_norm <= 0`` disables clipping. Returns the norm before clipping.
    """
    norm = global_grad_norm({name: p.grad for name, p in named.items()})
    if max_norm > 0.0 and norm > max_norm:
        scale = max_norm / norm
        for param in named.values():
            if param.grad is not None:
                param.grad *= scale
        _LOG.debug("Clipped gradient norm %.4f to %.4f", norm, max_norm)
    return norm
