import itertools

import numpy as np
import pytest

from src.exceptions import ConfigurationError, DeterminismError
from src.tensor_core import Tensor, grad_check, ops
from src.tensor_core.gradcheck import relative_error


def faulty_square(x: Tensor) -> Tensor:
    """x**2 whose recorded VJP forgets the factor 2."""
    return ops._result(x.data * x.data, (x,), lambda g: (g * x.data,), "faulty_square")


class TestGradCheck:
    """The finite-difference verification harness."""

    def test_quadratic_passes(self) -> None:
        """A correct composite function has a tiny relative error."""
        rng = np.random.default_rng(0)
        w = Tensor(rng.standard_normal((3, 4)), requires_grad=True, name="w")
        v = Tensor(rng.standard_normal(4), requires_grad=True, name="v")
        report = grad_check(lambda: ops.sum(ops.softmax(ops.mul(w, v)) * w), {"w": w, "v": v})
        assert report.max_relative_error < 1e-5
        assert set(report.parameters) == {"w", "v"}
        assert report.step == 1e-5

    def test_faulty_vjp_is_caught(self) -> None:
        """A wrong VJP shows up as a relative error near one half."""
        w = Tensor([0.7, -1.3, 2.1], requires_grad=True)
        report = grad_check(lambda: ops.sum(faulty_square(w)), {"w": w})
        assert report.max_relative_error > 0.4
        assert report.worst_parameter == "w"

    def test_nondeterministic_function_raises(self) -> None:
        """Re-evaluating f must reproduce the same value."""
        w = Tensor([1.0], requires_grad=True)
        counter = itertools.count()
        with pytest.raises(DeterminismError):
            grad_check(lambda: ops.sum(w * float(next(counter))), {"w": w})

    @pytest.mark.parametrize("step", [1e-8, 1e-2])
    def test_step_out_of_range(self, step: float) -> None:
        """Steps outside [1e-7, 1e-3] are configuration errors."""
        w = Tensor([1.0], requires_grad=True)
        with pytest.raises(ConfigurationError):
            grad_check(lambda: ops.sum(w * w), {"w": w}, step=step)

    def test_entry_subset_is_bounded(self) -> None:
        """A subset check still reports the tensor and stays accurate."""
        w = Tensor(np.linspace(-1.0, 1.0, 50), requires_grad=True)
        report = grad_check(lambda: ops.sum(ops.exp(w)), {"w": w}, max_entries_per_tensor=5, seed=3)
        assert report.parameters["w"].worst_index in range(50)
        assert report.max_relative_error < 1e-7

    def test_parameters_restored(self) -> None:
        """Perturbations are undone after the check."""
        values = np.array([0.25, -0.5])
        w = Tensor(values, requires_grad=True)
        grad_check(lambda: ops.sum(w * w * w), {"w": w})
        np.testing.assert_array_equal(w.data, values)

    def test_relative_error_floor(self) -> None:
        """Both gradients near zero do not blow the ratio up."""
        assert relative_error(0.0, 0.0) == 0.0
        assert relative_error(1e-12, 0.0) == pytest.approx(1e-4)
        assert relative_error(2.0, 1.0) == pytest.approx(0.5)
