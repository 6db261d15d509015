"""Array view of a sample list, indexed by sample id."""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np

from ..exceptions import IntegrityError
from ..models.domain.records import Sample
from ..types import FloatArray, SampleId


class SampleTable:
    """Samples with their tokens and patch arrays materialized once.

    Parameters
    ----------
    samples : Sequence[Sample]
        Records with unique ids

    Raises
    ------
    IntegrityError
        If two samples share an id

    """

    def __init__(self, samples: Sequence[Sample]) -> None:
        self.samples = tuple(samples)
        self._row: dict[SampleId, int] = {}
        for row, sample in enumerate(self.samples):
            if sample.id in self._row:
                raise IntegrityError(f"duplicate sample id {sample.id}")
            self._row[sample.id] = row
        self.tokens: list[tuple[int, ...]] = [tuple(s.text_tokens) for s in self.samples]
        self.patches: list[FloatArray] = [np.asarray(s.image_patches, dtype=np.float64) for s in self.samples]

    def __len__(self) -> int:
        return len(self.samples)

    def __contains__(self, sample_id: object) -> bool:
        return sample_id in self._row

    @property
    def ids(self) -> list[SampleId]:
        return [s.id for s in self.samples]

    def row(self, sample_id: SampleId) -> int:
        try:
            return self._row[sample_id]
        except KeyError as e:
            raise IntegrityError(f"unknown sample id {sample_id}") from e

    def rows(self, sample_ids: Iterable[SampleId]) -> list[int]:
        return [self.row(i) for i in sample_ids]

    def gather(self, sample_ids: Sequence[SampleId]) -> tuple[list[tuple[int, ...]], list[FloatArray]]:
        """Token lists and patch arrays of ``sample_ids``, in order."""
        rows = self.rows(sample_ids)
        return [self.tokens[r] for r in rows], [self.patches[r] for r in rows]
