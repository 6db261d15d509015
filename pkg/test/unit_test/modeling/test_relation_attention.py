from dataclasses import replace

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.dataio.vocabulary import EOT_ID
from src.exceptions import BoundsError, ConfigurationError, ContractError, EmptyAttentionError, ShapeError
from src.models.domain import BetaOneMode, PairKind
from src.modeling import (
    AttentionParams,
    ModelParams,
    TokenMatrix,
    contextual_feature,
    encode_relation,
    encode_text,
    encode_text_batch,
    relation_attention,
    relation_query,
    summary_mask,
)
from src.modeling.relation_attention import summary_masks
from src.tensor_core import Tensor
from test.oracles import relation_pooling_loop


def attention_params(beta: float, mode: BetaOneMode = BetaOneMode.SOFT) -> AttentionParams:
    eye = np.eye(3)
    return AttentionParams(
        w_q=Tensor(eye), w_k=Tensor(eye), w_v=Tensor(eye), w_o=Tensor(eye), beta=beta, beta_one_mode=mode
    )


class TestSummaryMask:
    """The binary summary row B."""

    def test_intra_is_one_hot(self) -> None:
        """Intra pairs mark the summary position."""
        assert summary_mask(PairKind.INTRA, 4, 2).data.tolist() == [[0.0, 0.0, 1.0, 0.0]]

    def test_inter_is_zero(self) -> None:
        """Inter pairs leave the mask empty."""
        assert summary_mask(PairKind.INTER, 3, 0).data.tolist() == [[0.0, 0.0, 0.0]]

    @pytest.mark.parametrize("index", [-1, 4])
    def test_index_out_of_range(self, index: int) -> None:
        """The summary index must address a position."""
        with pytest.raises(BoundsError):
            summary_mask(PairKind.INTRA, 4, index)


class TestRelationAttention:
    """Softmax of the balanced relevance and summary mask."""

    def test_beta_zero_is_plain_softmax(self) -> None:
        """With beta = 0 the mask is ignored."""
        q = Tensor([[0.3, -1.0, 2.0]])
        weights = relation_attention(q, summary_mask(PairKind.INTRA, 3, 0), attention_params(0.0)).data
        expected = np.exp(q.data) / np.exp(q.data).sum()
        np.testing.assert_allclose(weights, expected)

    def test_padding_gets_zero_weight(self) -> None:
        """-inf query entries stay masked for every beta."""
        q = Tensor([[0.5, 0.1, -np.inf]])
        for beta in (0.0, 0.6, 1.0):
            weights = relation_attention(q, summary_mask(PairKind.INTRA, 3, 1), attention_params(beta)).data
            assert weights[0, 2] == 0.0
            assert weights.sum() == pytest.approx(1.0)

    def test_soft_beta_one_is_softmax_of_mask(self) -> None:
        """Soft mode at beta = 1 applies softmax to the 0/1 mask literally."""
        q = Tensor([[4.0, -3.0, 1.0]])
        weights = relation_attention(q, summary_mask(PairKind.INTRA, 3, 1), attention_params(1.0)).data
        e = np.e
        np.testing.assert_allclose(weights, [[1 / (e + 2), e / (e + 2), 1 / (e + 2)]])

    def test_hard_beta_one_is_exact_one_hot(self) -> None:
        """Hard mode returns the summary indicator itself."""
        q = Tensor([[4.0, -3.0, 1.0]])
        weights = relation_attention(
            q, summary_mask(PairKind.INTRA, 3, 1), attention_params(1.0, BetaOneMode.HARD)
        ).data
        assert weights.tolist() == [[0.0, 1.0, 0.0]]

    def test_hard_mode_needs_active_position(self) -> None:
        """An all-zero mask cannot be hard-selected."""
        q = Tensor([[0.0, 0.0]])
        with pytest.raises(ContractError):
            relation_attention(q, summary_mask(PairKind.INTER, 2, 0), attention_params(1.0, BetaOneMode.HARD))

    def test_all_padded_row(self) -> None:
        """A row with nothing to attend to is rejected."""
        q = Tensor([[-np.inf, -np.inf]])
        with pytest.raises(EmptyAttentionError):
            relation_attention(q, np.zeros((1, 2)), attention_params(0.5))

    def test_beta_range(self) -> None:
        """beta lives in [0, 1]."""
        with pytest.raises(ConfigurationError):
            attention_params(1.5)


class TestContextualFeature:
    """Query, attention and pooling on encoder output."""

    def test_query_width_mismatch(self, tiny_params: ModelParams) -> None:
        """The relation embedding must match the token width."""
        tokens = encode_text(tiny_params.text, [70, EOT_ID])
        with pytest.raises(ShapeError):
            relation_query(Tensor(np.ones(5)), tokens, tiny_params.attention)

    def test_unit_norm_output(self, tiny_params: ModelParams) -> None:
        """Pooled embeddings are unit vectors."""
        tokens = encode_text(tiny_params.text, [70, 71, 72, EOT_ID])
        h_e = encode_relation(tiny_params.text, [5, 6, EOT_ID])
        q = relation_query(h_e, tokens, tiny_params.attention)
        a = relation_attention(q, summary_mask(PairKind.INTER, tokens.length, 3), tiny_params.attention)
        feature = contextual_feature(a, tokens, tiny_params.attention, relation_id="r0")
        assert feature.z.shape == (8,)
        assert np.linalg.norm(feature.z.data) == pytest.approx(1.0)
        assert feature.relation_id == "r0"

    def test_attention_length_mismatch(self, tiny_params: ModelParams) -> None:
        """Attention must cover exactly the token positions."""
        tokens = encode_text(tiny_params.text, [70, EOT_ID])
        with pytest.raises(ShapeError):
            contextual_feature(Tensor([[0.2, 0.3, 0.5]]), tokens, tiny_params.attention)

    def test_matches_scalar_loop(self, tiny_params: ModelParams) -> None:
        """Query, attention and pooled vector agree with the loop reference, padding included."""
        params = tiny_params.attention
        batch = encode_text_batch(tiny_params.text, [[70, 71, EOT_ID], [72, 73, 74, 75, EOT_ID]])
        h_e = encode_relation(tiny_params.text, [5, 6, EOT_ID])
        q = relation_query(h_e, batch, params)
        masks = summary_masks(True, batch.summary_index, batch.length)
        a = relation_attention(q, masks, params)
        z = contextual_feature(a, batch, params).z.data
        weights = {key: getattr(params, key).data for key in ("w_q", "w_k", "w_v", "w_o")}

        for row in range(2):
            expected_q, expected_a, expected_z = relation_pooling_loop(
                h_e.data, batch.features.data[row], batch.pad_mask[row], masks[row, 0], weights, params.beta
            )
            np.testing.assert_allclose(q.data[row, 0], expected_q, atol=1e-10)
            np.testing.assert_allclose(a.data[row, 0], expected_a, atol=1e-10)
            np.testing.assert_allclose(z[row], expected_z, atol=1e-10)

    @pytest.mark.parametrize("scale", [0.5, 2.0, 100.0])
    def test_output_projection_scale_invariance(self, tiny_params: ModelParams, scale: float) -> None:
        """Scaling W_o by a positive constant leaves the unit embedding unchanged."""
        params = tiny_params.attention
        scaled = replace(params, w_o=Tensor(scale * params.w_o.data))
        tokens = encode_text(tiny_params.text, [70, 71, 72, EOT_ID])
        q = relation_query(encode_relation(tiny_params.text, [5, EOT_ID]), tokens, params)
        a = relation_attention(q, summary_mask(PairKind.INTRA, tokens.length, 3), params)
        z = contextual_feature(a, tokens, params).z.data
        assert np.max(np.abs(contextual_feature(a, tokens, scaled).z.data - z)) < 1e-9


def random_pooling(seed: int, dim: int = 4, length: int = 5) -> tuple[TokenMatrix, Tensor, AttentionParams]:
    rng = np.random.default_rng(seed)
    tokens = TokenMatrix(
        features=Tensor(rng.standard_normal((dim, length))),
        summary_index=np.asarray(0),
        pad_mask=np.zeros(length, dtype=bool),
    )
    params = AttentionParams(*(Tensor(rng.standard_normal((dim, dim))) for _ in range(4)), beta=float(rng.random()))
    return tokens, Tensor(rng.standard_normal(dim)), params


class TestAttentionContract:
    """Randomized checks of the attention row and the pooled vector."""

    @settings(max_examples=1000, deadline=None)
    @given(
        arrays(np.float64, (1, 5), elements=st.floats(min_value=-10.0, max_value=10.0)),
        arrays(np.bool_, 5),
        st.floats(min_value=0.0, max_value=1.0),
        st.integers(min_value=0, max_value=4),
        st.sampled_from(PairKind),
    )
    def test_rows_are_distributions(
        self, values: np.ndarray, pad: np.ndarray, beta: float, index: int, kind: PairKind
    ) -> None:
        """Weights are non-negative, zero on padding and sum to one for every beta and pair kind."""
        assume(not pad.all())
        q = np.where(pad[None], -np.inf, values)
        weights = relation_attention(Tensor(q), summary_mask(kind, 5, index), attention_params(beta)).data
        assert np.all(weights >= 0.0)
        assert np.all(weights[0, pad] == 0.0)
        assert abs(weights.sum() - 1.0) <= 1e-9

    @settings(max_examples=1000, deadline=None)
    @given(arrays(np.float64, (1, 5), elements=st.floats(min_value=-10.0, max_value=10.0)), arrays(np.bool_, 5))
    def test_beta_zero_is_softmax_of_query(self, values: np.ndarray, pad: np.ndarray) -> None:
        """With beta = 0 the weights are the softmax of the relevance scores."""
        assume(not pad.all())
        q = np.where(pad[None], -np.inf, values)
        weights = relation_attention(Tensor(q), summary_mask(PairKind.INTRA, 5, 0), attention_params(0.0)).data
        shifted = np.exp(q - q.max())
        np.testing.assert_allclose(weights, shifted / shifted.sum(), rtol=0.0, atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, (1, 4), elements=st.floats(min_value=-10.0, max_value=10.0)),
        st.floats(min_value=0.0, max_value=0.99),
    )
    def test_inter_pairs_scale_the_query(self, values: np.ndarray, beta: float) -> None:
        """Without a summary position the mask only tempers the relevance scores."""
        weights = relation_attention(Tensor(values), summary_mask(PairKind.INTER, 4, 0), attention_params(beta)).data
        scaled = np.exp((1.0 - beta) * (values - values.max()))
        np.testing.assert_allclose(weights, scaled / scaled.sum(), atol=1e-12)

    @settings(max_examples=1000, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([0.5, 2.0, 100.0]))
    def test_pooled_vector_is_unit_and_scale_free(self, seed: int, scale: float) -> None:
        """z has unit norm and does not move when W_o is scaled by a positive constant."""
        tokens, h_e, params = random_pooling(seed)
        a = relation_attention(relation_query(h_e, tokens, params), summary_mask(PairKind.INTRA, 5, 0), params)
        z = contextual_feature(a, tokens, params).z.data
        scaled = replace(params, w_o=Tensor(scale * params.w_o.data))
        assert abs(np.linalg.norm(z) - 1.0) <= 1e-9
        assert np.max(np.abs(contextual_feature(a, tokens, scaled).z.data - z)) < 1e-9

    @pytest.mark.parametrize("kind", list(PairKind))
    def test_soft_mode_is_continuous_at_beta_one(self, kind: PairKind) -> None:
        """Soft weights just below beta = 1 approach the weights at beta = 1."""
        q = Tensor([[2.5, -1.0, 0.3, 4.0]])
        mask = summary_mask(kind, 4, 2)
        at_one = relation_attention(q, mask, attention_params(1.0)).data
        for gap in (1e-3, 1e-5, 1e-7):
            near = relation_attention(q, mask, attention_params(1.0 - gap)).data
            assert np.max(np.abs(near - at_one)) < 10.0 * gap
