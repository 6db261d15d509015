"""Dense tensors and the explicit gradient tape.

A :class:`Tensor` wraps a float64 numpy array. Primitive operations (see
:mod:`src.tensor_core.ops`) record themselves on the *active* :class:`GradTape`
whenever one of their inputs requires a gradient. Replaying the tape in reverse
order is a valid reverse topological order because nodes are appended in
execution order.

Tapes are per forward pass and bound to the current context (a
:class:`contextvars.ContextVar`), so independent threads may each run their own
tape over shared read-only parameters. Leaf tensors (parameters) outlive tapes;
intermediate activations are released when the tape is cleared.

Examples
--------
.. code-block:: python

    from src.tensor_core import GradTape, Tensor, ops

    w = Tensor([[1.0, 2.0], [3.0, 4.0]], requires_grad=True)
    with GradTape() as tape:
        loss = ops.sum(w)
        tape.backward(loss)
    w.grad  # all ones

"""

from __future__ import annotations

import contextvars
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from ..exceptions import ShapeError, TapeError

if TYPE_CHECKING:
    from ..types import FloatArray

_LOG = logging.getLogger(__name__)

type VJP = Callable[["FloatArray"], Sequence["FloatArray | None"]]

_ACTIVE_TAPE: contextvars.ContextVar[GradTape | None] = contextvars.ContextVar("rcml_active_tape", default=None)


class Tensor:
    """Dense float64 array with optional gradient participation.

    Parameters
    ----------
    data : array_like
        Values; always copied into a C-contiguous float64 array
    requires_grad : bool, optional
        Whether gradients should be accumulated into ``grad``
    name : str | None, optional
        Label used in diagnostics (parameter names)

    Attributes
    ----------
    data : FloatArray
        Row-major values
    grad : FloatArray | None
        Same-shape gradient buffer. Leaves that require a gradient start with
        zeros; intermediates receive theirs during ``backward``.

    """

    __slots__ = ("data", "grad", "name", "requires_grad")

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None) -> None:
        self.data: FloatArray = np.array(data, dtype=np.float64, order="C")
        self.requires_grad = requires_grad
        self.grad: FloatArray | None = np.zeros_like(self.data) if requires_grad else None
        self.name = name

    @classmethod
    def _wrap(cls, data: Any) -> Tensor:
        """Adopt an array produced by a primitive without copying it."""
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.requires_grad = False
        out.grad = None
        out.name = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def T(self) -> Tensor:  # noqa: N802
        from . import ops

        return ops.transpose(self)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> FloatArray:
        """Return a copy of the values, detached from any tape."""
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data) if self.requires_grad else None

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # Operator sugar; the primitives live in ops.

    def __add__(self, other: Tensor | float) -> Tensor:
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: float) -> Tensor:
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: Tensor | float) -> Tensor:
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: float) -> Tensor:
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: Tensor | float) -> Tensor:
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other: float) -> Tensor:
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other: float) -> Tensor:
        from . import ops

        return ops.mul(self, 1.0 / other)

    def __neg__(self) -> Tensor:
        from . import ops

        return ops.mul(self, -1.0)

    def __matmul__(self, other: Tensor) -> Tensor:
        from . import ops

        return ops.matmul(self, other)


@dataclass(slots=True)
class _Node:
    output: Tensor
    inputs: tuple[Tensor, ...]
    vjp: VJP
    op: str


class GradTape:
    """Ordered record of executed primitives for one forward pass.

    Use as a context manager: entering makes the tape active for the current
    context, leaving restores the previous tape and clears this one.

    Examples
    --------
    .. code-block:: python

        with GradTape() as tape:
            loss = model_loss(params)
            tape.backward(loss)
        optimizer.step()

    """

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self._outputs: set[int] = set()
        self._token: contextvars.Token[GradTape | None] | None = None

    def __enter__(self) -> GradTape:
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc_info: object) -> None:
        if self._token is not None:
            _ACTIVE_TAPE.reset(self._token)
            self._token = None
        self.clear()

    def __len__(self) -> int:
        return len(self._nodes)

    def record(self, output: Tensor, inputs: tuple[Tensor, ...], vjp: VJP, op: str) -> None:
        self._nodes.append(_Node(output, inputs, vjp, op))
        self._outputs.add(id(output))

    def clear(self) -> None:
        """Drop every recorded node and the activations they reference."""
        for node in self._nodes:
            node.output.grad = None
        self._nodes.clear()
        self._outputs.clear()

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``.

        Intermediates receive the gradient of this pass (overwritten);
        leaves accumulate across repeated calls until reset with ``zero_grad``.

        Raises
        ------
        ShapeError
            If ``loss`` is not a scalar

        """
        if loss.data.size != 1 or loss.ndim > 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not loss.requires_grad:
            return

        grads: dict[int, FloatArray] = {id(loss): np.ones_like(loss.data)}
        refs: dict[int, Tensor] = {id(loss): loss}
        for node in reversed(self._nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            node.output.grad = upstream
            for inp, contribution in zip(node.inputs, node.vjp(upstream), strict=True):
                if contribution is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + contribution
                else:
                    grads[key] = contribution
                    refs[key] = inp

        # Whatever is left was never produced on this tape: a leaf.
        for key, grad in grads.items():
            leaf = refs[key]
            leaf.grad = grad.copy() if leaf.grad is None else leaf.grad + grad
        _LOG.debug("Backward over %d tape nodes reached %d leaves", len(self._nodes), len(grads))


def active_tape() -> GradTape | None:
    """Return the tape recording in the current context, if any."""
    return _ACTIVE_TAPE.get()


def backward(loss: Tensor) -> None:
    """Run ``backward`` on the active tape.

    Raises
    ------
    TapeError
        If no tape is active in the current context
    ShapeError
        If ``loss`` is not a scalar

    """
    tape = active_tape()
    if tape is None:
        raise TapeError("backward() called without an active GradTape")
    tape.backward(loss)
