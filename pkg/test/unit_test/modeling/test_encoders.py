import numpy as np
import pytest

from src.dataio.vocabulary import EOT_ID, PAD_ID
from src.exceptions import FormatError, ShapeError, VocabularyError
from src.modeling import ModelParams, encode_image, encode_image_batch, encode_relation, encode_text, encode_text_batch


class TestTextEncoder:
    """Token lists to (d, L) feature matrices."""

    def test_shape_and_summary_index(self, tiny_params: ModelParams) -> None:
        """The summary position is the EOT position."""
        matrix = encode_text(tiny_params.text, [70, 81, 90, EOT_ID])
        assert matrix.features.shape == (8, 4)
        assert int(matrix.summary_index) == 3
        assert not matrix.pad_mask.any()

    def test_batch_pads_shorter_lists(self, tiny_params: ModelParams) -> None:
        """A padded row keeps the features it has when encoded alone."""
        short = [70, EOT_ID]
        batch = encode_text_batch(tiny_params.text, [short, [72, 73, 74, 75, EOT_ID]])
        alone = encode_text(tiny_params.text, short)
        assert batch.features.shape == (2, 8, 5)
        assert batch.pad_mask[0].tolist() == [False, False, True, True, True]
        np.testing.assert_allclose(batch.features.data[0][:, :2], alone.features.data, atol=1e-12)

    @pytest.mark.parametrize(
        ("tokens", "error"),
        [
            ([], FormatError),
            ([70, 71], FormatError),
            ([70, EOT_ID, EOT_ID], FormatError),
            ([70, PAD_ID, EOT_ID], FormatError),
            ([96, EOT_ID], VocabularyError),
            ([-1, EOT_ID], VocabularyError),
            ([70] * 12 + [EOT_ID], ShapeError),
        ],
    )
    def test_invalid_token_lists(self, tiny_params: ModelParams, tokens: list[int], error: type[Exception]) -> None:
        """Malformed, out-of-vocabulary and over-long lists are rejected."""
        with pytest.raises(error):
            encode_text(tiny_params.text, tokens)

    def test_empty_batch(self, tiny_params: ModelParams) -> None:
        """A batch needs at least one list."""
        with pytest.raises(ShapeError):
            encode_text_batch(tiny_params.text, [])

    def test_relation_embedding_is_eot_column(self, tiny_params: ModelParams) -> None:
        """h_E is the EOT column of the encoded relation description."""
        tokens = [5, 6, 7, EOT_ID]
        h_e = encode_relation(tiny_params.text, tokens)
        matrix = encode_text(tiny_params.text, tokens)
        assert h_e.shape == (8,)
        np.testing.assert_allclose(h_e.data, matrix.features.data[:, 3])

    def test_token_order_matters(self, tiny_params: ModelParams) -> None:
        """Swapping two content tokens changes the summary column."""
        forward = encode_text(tiny_params.text, [70, 81, 90, EOT_ID])
        swapped = encode_text(tiny_params.text, [81, 70, 90, EOT_ID])
        assert not np.allclose(forward.features.data[:, 3], swapped.features.data[:, 3])


class TestImageEncoder:
    """Patch sets to (d, patches + 1) feature matrices."""

    def test_summary_slot_first(self, tiny_params: ModelParams) -> None:
        """The learnable summary embedding occupies position 0."""
        patches = np.random.default_rng(0).standard_normal((3, 4))
        matrix = encode_image(tiny_params.image, patches)
        assert matrix.features.shape == (8, 4)
        assert int(matrix.summary_index) == 0

    def test_batch_masks_missing_patches(self, tiny_params: ModelParams) -> None:
        """Images with fewer patches are padded after their last patch."""
        rng = np.random.default_rng(1)
        batch = encode_image_batch(tiny_params.image, [rng.standard_normal((2, 4)), rng.standard_normal((4, 4))])
        assert batch.features.shape == (2, 8, 5)
        assert batch.pad_mask[0].tolist() == [False, False, False, True, True]
        assert batch.summary_index.tolist() == [0, 0]

    def test_too_many_patches(self, tiny_params: ModelParams) -> None:
        """At most max_patches - 1 patches fit next to the summary slot."""
        with pytest.raises(ShapeError):
            encode_image(tiny_params.image, np.ones((5, 4)))

    @pytest.mark.parametrize("shape", [(0, 4), (2, 3), (4,)])
    def test_bad_patch_arrays(self, tiny_params: ModelParams, shape: tuple[int, ...]) -> None:
        """Empty images and wrong patch widths are shape errors."""
        with pytest.raises(ShapeError):
            encode_image(tiny_params.image, np.ones(shape))
