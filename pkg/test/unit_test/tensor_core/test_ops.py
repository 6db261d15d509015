from collections.abc import Callable

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.exceptions import BoundsError, DegenerateVectorError, NumericError, ShapeError
from src.tensor_core import GradTape, Tensor, ops
from test.oracles import numeric_gradient

finite = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False, allow_infinity=False)


def tape_gradient(loss: Callable[[], Tensor], wrt: Tensor) -> np.ndarray:
    wrt.zero_grad()
    with GradTape() as tape:
        tape.backward(loss())
    assert wrt.grad is not None
    return wrt.grad.copy()


def assert_matches_numeric(loss: Callable[[], Tensor], *leaves: Tensor, atol: float = 1e-6) -> None:
    for leaf in leaves:
        analytic = tape_gradient(loss, leaf)
        numeric = numeric_gradient(lambda: loss().item(), leaf.data)
        np.testing.assert_allclose(analytic, numeric, atol=atol, rtol=1e-5)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(11)


class TestElementwise:
    """Gradients of the elementwise primitives, including broadcasting."""

    def test_broadcast_add_mul_sub(self, rng: np.random.Generator) -> None:
        """A (3, 4) operand combined with a (4,) operand reduces the gradient back to (4,)."""
        a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        b = Tensor(rng.standard_normal(4), requires_grad=True)

        def loss() -> Tensor:
            return ops.sum(ops.mul(ops.add(a, b), ops.sub(a, b)) * 0.5 + a * 3.0)

        assert_matches_numeric(loss, a, b)
        assert tape_gradient(loss, b).shape == (4,)

    def test_smooth_activations(self, rng: np.random.Generator) -> None:
        """exp, sigmoid, softplus and quick_gelu agree with central differences."""
        x = Tensor(rng.standard_normal((2, 5)), requires_grad=True)

        def loss() -> Tensor:
            return ops.sum(ops.exp(x * 0.3) + ops.sigmoid(x) + ops.softplus(x) + ops.quick_gelu(x))

        assert_matches_numeric(loss, x)

    def test_log_of_non_positive_raises(self) -> None:
        """log(0) is a numeric failure rather than -inf."""
        with pytest.raises(NumericError):
            ops.log(Tensor([1.0, 0.0]))

    def test_incompatible_broadcast_raises(self) -> None:
        """Shapes that numpy cannot broadcast raise ShapeError."""
        with pytest.raises(ShapeError):
            ops.add(Tensor(np.ones((2, 3))), Tensor(np.ones(4)))

    def test_masked_fill_blocks_gradient(self) -> None:
        """Masked entries take the fill value and receive zero gradient."""
        x = Tensor([1.0, 2.0, 3.0], requires_grad=True)
        mask = np.array([False, True, False])
        out = ops.masked_fill(x, mask, -5.0)
        assert out.data.tolist() == [1.0, -5.0, 3.0]
        grad = tape_gradient(lambda: ops.sum(ops.masked_fill(x, mask, -5.0) * 2.0), x)
        assert grad.tolist() == [2.0, 0.0, 2.0]


class TestShapeOps:
    """Gather, concatenation and matrix products."""

    def test_matmul_batched_gradient(self, rng: np.random.Generator) -> None:
        """Batched (2, 3, 4) @ (4, 5) products broadcast the right operand."""
        a = Tensor(rng.standard_normal((2, 3, 4)), requires_grad=True)
        b = Tensor(rng.standard_normal((4, 5)), requires_grad=True)
        assert_matches_numeric(lambda: ops.sum(ops.matmul(a, b) * ops.matmul(a, b)), a, b, atol=1e-5)

    def test_matmul_inner_mismatch_raises(self) -> None:
        """Inner dimensions must agree."""
        with pytest.raises(ShapeError):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((4, 2))))

    def test_index_select_accumulates_repeats(self) -> None:
        """Selecting row 1 twice doubles its gradient."""
        x = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
        grad = tape_gradient(lambda: ops.sum(ops.index_select(x, [1, 1, 2], axis=0)), x)
        np.testing.assert_array_equal(grad, [[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]])

    def test_index_select_out_of_range(self) -> None:
        """An index past the axis size raises BoundsError."""
        with pytest.raises(BoundsError):
            ops.index_select(Tensor(np.ones((3, 2))), [3], axis=0)

    def test_concat_stack_pick_gradients(self, rng: np.random.Generator) -> None:
        """Gradients route back through concat, stack, pick, reshape and transpose."""
        a = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
        b = Tensor(rng.standard_normal((2, 3)), requires_grad=True)

        def loss() -> Tensor:
            joined = ops.concat([a, b], axis=0)
            stacked = ops.stack([a, b], axis=1)
            picked = ops.pick(joined, [0, 3, 3], [2, 1, 1])
            return ops.sum(picked * picked) + ops.sum(ops.reshape(stacked, (4, 3)).T * 0.5)

        assert_matches_numeric(loss, a, b)

    def test_gather_rows_gradient(self, rng: np.random.Generator) -> None:
        """Embedding lookup scatters gradients back into the table."""
        table = Tensor(rng.standard_normal((5, 3)), requires_grad=True)
        ids = np.array([[0, 4], [4, 2]])
        assert_matches_numeric(lambda: ops.sum(ops.exp(ops.gather_rows(table, ids))), table)


class TestNormalizers:
    """softmax, logsumexp and l2_normalize."""

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (3, 6), elements=finite))
    def test_softmax_rows_sum_to_one(self, values: np.ndarray) -> None:
        """Rows of a softmax are non-negative and sum to one."""
        out = ops.softmax(Tensor(values)).data
        assert np.all(out >= 0.0)
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-12)

    def test_softmax_ignores_negative_infinity(self) -> None:
        """-inf entries get exactly zero weight and the rest renormalize."""
        out = ops.softmax(Tensor([[0.0, -np.inf, 0.0]])).data
        np.testing.assert_array_equal(out, [[0.5, 0.0, 0.5]])

    def test_softmax_all_masked_row_raises(self) -> None:
        """A row with no finite entry cannot be normalized."""
        with pytest.raises(NumericError):
            ops.softmax(Tensor([[1.0, 2.0], [-np.inf, -np.inf]]))

    def test_softmax_nan_raises(self) -> None:
        """NaN input is rejected."""
        with pytest.raises(NumericError):
            ops.softmax(Tensor([[np.nan, 1.0]]))

    def test_softmax_gradient(self, rng: np.random.Generator) -> None:
        """Softmax VJP matches central differences under a weighted readout."""
        x = Tensor(rng.standard_normal((2, 4)), requires_grad=True)
        weights = rng.standard_normal((2, 4))
        assert_matches_numeric(lambda: ops.sum(ops.softmax(x) * weights), x)

    def test_logsumexp_skips_masked_entries(self, rng: np.random.Generator) -> None:
        """logsumexp equals the plain formula over finite entries and differentiates correctly."""
        values = np.array([[1.0, -np.inf, 2.0]])
        out = ops.logsumexp(Tensor(values)).data
        np.testing.assert_allclose(out, [np.log(np.e + np.e**2)])

        x = Tensor(rng.standard_normal((3, 5)) * 10.0, requires_grad=True)
        assert_matches_numeric(lambda: ops.sum(ops.logsumexp(x, axis=1)), x)

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(np.float64, (4,), elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3),
        st.floats(min_value=0.01, max_value=100.0),
    )
    def test_l2_normalize_unit_and_scale_invariant(self, vector: np.ndarray, scale: float) -> None:
        """Normalized vectors have unit norm and do not depend on positive scaling."""
        unit = ops.l2_normalize(Tensor(vector)).data
        np.testing.assert_allclose(np.linalg.norm(unit), 1.0, atol=1e-12)
        np.testing.assert_allclose(ops.l2_normalize(Tensor(vector * scale)).data, unit, atol=1e-12)

    def test_l2_normalize_zero_vector_raises(self) -> None:
        """A zero vector has no direction."""
        with pytest.raises(DegenerateVectorError):
            ops.l2_normalize(Tensor(np.zeros((2, 3))))

    def test_l2_normalize_gradient(self, rng: np.random.Generator) -> None:
        """The tangential projection VJP matches central differences."""
        x = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        target = rng.standard_normal((3, 4))
        assert_matches_numeric(lambda: ops.sum(ops.l2_normalize(x) * target), x)
