"""Base experiment runner abstraction.

This module provides the abstract base class for every runner that trains and
evaluates several variants of one configuration on one fixed dataset split
(ablations, the beta sweep). It fixes the iteration order and the logging
around each variant so that all runners behave alike.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence

_LOG = logging.getLogger(__name__)


class BaseExperimentRunner[VariantT, RowT](ABC):
    """Abstract base class for multi-variant experiment runners.

    A runner owns a list of variants and turns each into one result row. All
    variants share the dataset, base configuration and seed; only what
    :meth:`run_variant` switches differs between rows.

    Implementation Requirements
    ===========================
    Concrete implementations must:

    1. Return the variants, in report order, from :meth:`variants`
    2. Train and evaluate one variant in :meth:`run_variant`
    3. Name a variant for logs and reports in :meth:`label`

    Examples
    --------
    **Basic Implementation:**

    .. code-block:: python

        class SeedRunner(BaseExperimentRunner[int, MetricsReport]):
            def variants(self) -> list[int]:
                return [1, 2, 3]

            def label(self, variant: int) -> str:
                return f"seed={variant}"

            def run_variant(self, variant: int) -> MetricsReport:
                return evaluate_with_seed(variant)

    **Usage:**

    .. code-block:: python

        rows = SeedRunner().run()

    """

    @abstractmethod
    def variants(self) -> Sequence[VariantT]:
        """Variants to run, in the order their rows are reported.

        Returns
        -------
        Sequence[VariantT]
            Non-empty sequence of variants

        """

    @abstractmethod
    def run_variant(self, variant: VariantT) -> RowT:
        """Train and evaluate a single variant.

        Parameters
        ----------
        variant : VariantT
            One element of :meth:`variants`

        Returns
        -------
        RowT
            The variant's result row

        """

    @abstractmethod
    def label(self, variant: VariantT) -> str:
        """Short human-readable name of ``variant``."""

    def run(self) -> list[RowT]:
        """Run every variant sequentially and collect the rows in variant order."""
        variants = list(self.variants())
        rows: list[RowT] = []
        for index, variant in enumerate(variants, 1):
            _LOG.info("Running variant %d/%d: %s", index, len(variants), self.label(variant))
            rows.append(self.run_variant(variant))
        _LOG.info("Finished %d variants", len(rows))
        return rows
