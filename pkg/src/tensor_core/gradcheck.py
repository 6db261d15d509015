"""Central finite-difference verification of tape gradients."""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping
from typing import Protocol

import numpy as np

from ..exceptions import ConfigurationError, DeterminismError
from ..models.domain.reports import GradCheckReport, ParameterCheck
from .tensor import GradTape, Tensor

_LOG = logging.getLogger(__name__)

MIN_STEP = 1e-7
MAX_STEP = 1e-3
_FLOOR = 1e-8


class HasNamedTensors(Protocol):
    def named_tensors(self) -> dict[str, Tensor]: ...


def relative_error(analytic: float, numeric: float) -> float:
    """``|a - n| / max(|a|, |n|, 1e-8)``."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), _FLOOR)


def _evaluate(f: Callable[[], Tensor]) -> float:
    return f().item()


def grad_check(
    f: Callable[[], Tensor],
    params: Mapping[str, Tensor] | HasNamedTensors,
    step: float = 1e-5,
    max_entries_per_tensor: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare tape gradients of ``f`` against central differences.

    Parameters
    ----------
    f : Callable[[], Tensor]
        Deterministic scalar function reading the parameters in ``params``
    params : Mapping[str, Tensor] | HasNamedTensors
        Named parameters to perturb, or an object exposing ``named_tensors()``
    step : float, optional
        Finite-difference step, within ``[1e-7, 1e-3]``
    max_entries_per_tensor : int | None, optional
        Check a seeded random subset of at most this many entries per tensor;
        ``None`` checks every entry
    seed : int, optional
        Seed for the entry subset

    Returns
    -------
    GradCheckReport
        Maximum relative error overall and per parameter

    Raises
    ------
    ConfigurationError
        If ``step`` is outside its allowed range
    DeterminismError
        If ``f`` returns different values on re-evaluation

    Examples
    --------
    .. code-block:: python

        w = Tensor(rng.standard_normal(5), requires_grad=True, name="w")
        report = grad_check(lambda: ops.sum(ops.mul(w, w)), {"w": w})
        assert report.max_relative_error < 1e-9

    """
    if not MIN_STEP <= step <= MAX_STEP:
        raise ConfigurationError(f"grad_check step must lie in [{MIN_STEP}, {MAX_STEP}], got {step}")
    named = dict(params) if isinstance(params, Mapping) else params.named_tensors()

    first, second = _evaluate(f), _evaluate(f)
    if first != second:
        raise DeterminismError(f"f is not deterministic: {first!r} != {second!r}")

    for tensor in named.values():
        tensor.zero_grad()
    with GradTape() as tape:
        tape.backward(f())
    analytic = {name: np.zeros_like(t.data) if t.grad is None else t.grad.copy() for name, t in named.items()}

    rng = np.random.default_rng(seed)
    checks: dict[str, ParameterCheck] = {}
    for name, tensor in named.items():
        flat = tensor.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries_per_tensor is not None and flat.size > max_entries_per_tensor:
            entries = np.sort(rng.choice(flat.size, size=max_entries_per_tensor, replace=False))

        worst = ParameterCheck(max_relative_error=0.0, worst_index=-1, analytic=0.0, numeric=0.0)
        for index in entries:
            original = flat[index]
            flat[index] = original + step
            upper = _evaluate(f)
            flat[index] = original - step
            lower = _evaluate(f)
            flat[index] = original
            numeric = (upper - lower) / (2.0 * step)
            grad_value = float(analytic[name].reshape(-1)[index])
            error = relative_error(grad_value, numeric)
            if error > worst.max_relative_error or worst.worst_index < 0:
                worst = ParameterCheck(
                    max_relative_error=error, worst_index=int(index), analytic=grad_value, numeric=numeric
                )
        checks[name] = worst
        _LOG.debug("grad_check %s: %d entries, max rel. err %.3e", name, entries.size, worst.max_relative_error)

    worst_name = max(checks, key=lambda n: checks[n].max_relative_error) if checks else ""
    max_error = checks[worst_name].max_relative_error if checks else 0.0
    _LOG.info("grad_check max relative error %.3e (worst parameter: %s)", max_error, worst_name)
    return GradCheckReport(
        max_relative_error=max_error,
        worst_parameter=worst_name,
        step=step,
        parameters=checks,
    )
