"""Dataset records: samples and relation edges.

Both records mirror one line of their JSONL file exactly, so
``Sample.model_validate_json(line)`` is the whole parser and
``sample.model_dump_json()`` the whole writer.

Samples file, one object per line:

.. code-block:: json

    {"id": 0, "text_tokens": [71, 300, 1], "image_patches": [[0.1, -0.4]], "category": 3}

Edges file, one object per line:

.. code-block:: json

    {"src": 0, "dst": 5, "relation_type": 2, "relation_text_tokens": [2, 3, 4, 1]}

"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ...types import SampleId

# Reserved token IDs, identical for every vocabulary.
PAD_ID = 0
EOT_ID = 1


def check_eot_format(tokens: list[int] | tuple[int, ...]) -> None:
    """Raise ``ValueError`` unless ``tokens`` holds exactly one EOT and no PAD."""
    eot_count = sum(1 for t in tokens if t == EOT_ID)
    if eot_count != 1:
        raise ValueError(f"token list must contain exactly one EOT ({EOT_ID}), found {eot_count}")
    if PAD_ID in tokens:
        raise ValueError(f"token list must not contain the PAD token ({PAD_ID})")


class Sample(BaseModel):
    """One item: a token sequence and a list of image patch vectors.

    Attributes
    ----------
    id : int
        Unique, non-negative sample identifier
    text_tokens : list[int]
        Token IDs with exactly one EOT
    image_patches : list[list[float]]
        Precomputed patch feature vectors, all of the same width
    category : int
        Coarse label used for stratified reporting

    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    id: SampleId = Field(ge=0, description="Unique sample identifier")
    text_tokens: list[int] = Field(min_length=1, description="Token IDs ending in exactly one EOT")
    image_patches: list[list[float]] = Field(min_length=1, description="Patch feature vectors")
    category: int = Field(default=0, ge=0, description="Coarse category label")

    @field_validator("text_tokens")
    @classmethod
    def _single_eot(cls, value: list[int]) -> list[int]:
        check_eot_format(value)
        return value

    @field_validator("image_patches")
    @classmethod
    def _rectangular(cls, value: list[list[float]]) -> list[list[float]]:
        widths = {len(patch) for patch in value}
        if len(widths) != 1 or 0 in widths:
            raise ValueError(f"image patches must share one non-zero width, got widths {sorted(widths)}")
        return value


class RelationEdge(BaseModel):
    """A typed, described relation between two samples."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    src: SampleId = Field(ge=0, description="Source sample id")
    dst: SampleId = Field(ge=0, description="Destination sample id")
    relation_type: int = Field(ge=0, description="Relation type in [0, K)")
    relation_text_tokens: list[int] = Field(min_length=1, description="Tokenized relation description")

    @field_validator("relation_text_tokens")
    @classmethod
    def _single_eot(cls, value: list[int]) -> list[int]:
        check_eot_format(value)
        return value

    @property
    def relation_text(self) -> tuple[int, ...]:
        return tuple(self.relation_text_tokens)

    @property
    def pair(self) -> frozenset[int]:
        """Unordered endpoint pair."""
        return frozenset((self.src, self.dst))

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.src, self.dst, self.relation_type)
