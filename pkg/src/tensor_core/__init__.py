"""Tensor core - dense float64 tensors with reverse-mode differentiation.

This package is the numeric substrate of every other layer: encoders,
relation-conditioned attention and the contrastive objective are written
entirely in terms of its primitives.

Components
==========

1. **tensor.py**
   - ``Tensor``: float64 array, ``requires_grad`` flag and ``grad`` buffer
   - ``GradTape``: explicit per-forward-pass record of executed primitives
   - ``backward``: replay the active tape from a scalar loss

2. **ops.py**
   - Primitives with hand-written vector-Jacobian products
     (``matmul``, ``softmax``, ``l2_normalize``, ``logsumexp`` ...)

3. **gradcheck.py**
   - ``grad_check``: central finite-difference verification harness

Concurrency
===========

The active tape is stored in a context variable, so each thread may record its
own tape over shared parameters. Accumulating gradients from several tapes into
the same parameters must be serialized by the caller.
"""

from __future__ import annotations

from . import ops
from .gradcheck import grad_check
from .tensor import GradTape, Tensor, active_tape, backward

__all__ = [
    "GradTape",
    "Tensor",
    "active_tape",
    "backward",
    "grad_check",
    "ops",
]
