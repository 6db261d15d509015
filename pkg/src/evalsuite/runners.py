"""Evaluation of a trained model, and the multi-variant experiment runners.

:func:`evaluate` runs the three tasks on the held-out edges of a split.
:class:`AblationRunner` and :class:`BetaSweepRunner` retrain on the same split
once per variant and evaluate each the same way.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .._base import BaseExperimentRunner
from ..dataio.split import DatasetSplit
from ..dataio.table import SampleTable
from ..exceptions import ConfigurationError
from ..modeling.params import ModelParams
from ..modeling.rcml import RCMLModel
from ..models.domain.configs import EvalConfig, TrainConfig
from ..models.domain.enums import Ablation, EvalTask
from ..models.domain.reports import MetricsReport
from ..training.trainer import fit
from .retrieval import build_queries, retrieval_report
from .similarity import FeatureBank
from .type_prediction import relation_type_texts, type_prediction_report
from .validity import build_validity_examples, validity_eval, validity_features

_LOG = logging.getLogger(__name__)

DEFAULT_BETAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def _wants(tasks: EvalTask, task: EvalTask) -> bool:
    return EvalTask(tasks) in (EvalTask.ALL, task)


def evaluate(
    params: ModelParams,
    split: DatasetSplit,
    cfg: EvalConfig,
    tasks: EvalTask = EvalTask.ALL,
    num_types: int | None = None,
    config_hash: str = "",
) -> MetricsReport:
    """Retrieval, type prediction and validity on ``split.test``.

    Parameters
    ----------
    params : ModelParams
        Model to evaluate; never modified
    split : DatasetSplit
        Samples and edges; queries come from ``split.test`` and negatives avoid every edge
    num_types : int | None, optional
        Relation type count; inferred from the edges when omitted

    Raises
    ------
    ConfigurationError
        If the split has no held-out edge, or fewer types than ``cfg.type_top_k``

    """
    if not split.test:
        raise ConfigurationError("evaluation needs held-out edges")
    known = split.all_edges
    types = num_types if num_types is not None else max(e.relation_type for e in known) + 1
    ids = [s.id for s in split.samples]
    bank = FeatureBank(RCMLModel(params), SampleTable(split.samples), chunk_size=cfg.chunk_size, workers=cfg.workers)
    texts = relation_type_texts(known, types)
    report = MetricsReport(
        beta=params.attention.beta,
        seed=cfg.seed,
        config_hash=config_hash,
        hit_k=cfg.hit_k,
        type_k=cfg.type_top_k,
        parameter_count=params.parameter_count(),
    )

    if _wants(tasks, EvalTask.RETRIEVAL):
        queries = build_queries(ids, split.test, known, cfg.num_negatives, cfg.seed)
        report.hit_at_k = retrieval_report(bank, queries, cfg.modes, cfg.hit_k)
        report.query_count = len(queries)
        _LOG.info("Retrieval Hit@%d over %d queries: %s", cfg.hit_k, len(queries), report.hit_at_k)
    if _wants(tasks, EvalTask.TYPE):
        report.type_top_k = type_prediction_report(bank, split.test, texts, cfg.modes, cfg.type_top_k)
        report.type_query_count = len(split.test)
    if _wants(tasks, EvalTask.VALIDITY):
        examples = build_validity_examples(split.test, known, ids, types, cfg.seed)
        labels = np.array([e.label for e in examples], dtype=np.float64)
        result = validity_eval(validity_features(bank, examples, texts), labels, cfg)
        report.validity_accuracy = result.accuracy
        report.validity_example_count = len(examples)
    return report


@dataclass(frozen=True)
class ExperimentSetup:
    """What every variant of an experiment shares."""

    split: DatasetSplit
    train: TrainConfig
    evaluation: EvalConfig
    config_hash: str = ""
    num_types: int | None = None


def ablation_run(setup: ExperimentSetup, setting: Ablation) -> MetricsReport:
    """Train with exactly one component switched off, then evaluate.

    ``Ablation.FULL`` is a plain ``fit`` followed by :func:`evaluate`.
    """
    result = fit(setup.split, setup.train.with_ablation(Ablation(setting)))
    report = evaluate(
        result.params, setup.split, setup.evaluation, num_types=setup.num_types, config_hash=setup.config_hash
    )
    report.ablation = Ablation(setting).value
    report.inter_pair_count = result.report.inter_pair_count
    return report


def with_beta(cfg: TrainConfig, beta: float) -> TrainConfig:
    if not 0.0 <= beta <= 1.0:
        raise ConfigurationError(f"beta must lie in [0, 1], got {beta}")
    return cfg.model_copy(update={"model": cfg.model.model_copy(update={"beta": beta})})


class AblationRunner(BaseExperimentRunner[Ablation, MetricsReport]):
    """One row per ablation setting, the full model first."""

    def __init__(self, setup: ExperimentSetup, settings: Sequence[Ablation] = tuple(Ablation)) -> None:
        self.setup = setup
        self.settings = tuple(Ablation(s) for s in settings)

    def variants(self) -> Sequence[Ablation]:
        return self.settings

    def label(self, variant: Ablation) -> str:
        return variant.value

    def run_variant(self, variant: Ablation) -> MetricsReport:
        return ablation_run(self.setup, variant)


class BetaSweepRunner(BaseExperimentRunner[float, MetricsReport]):
    """One row per attention balance coefficient, everything else fixed.

    Raises
    ------
    ConfigurationError
        If a coefficient is outside ``[0, 1]``

    """

    def __init__(self, setup: ExperimentSetup, betas: Sequence[float] = DEFAULT_BETAS) -> None:
        self.setup = setup
        self.configs = [with_beta(setup.train, float(b)) for b in betas]
        self.betas = tuple(float(b) for b in betas)

    def variants(self) -> Sequence[float]:
        return self.betas

    def label(self, variant: float) -> str:
        return f"beta={variant:g} ({self.setup.train.model.beta_one_mode.value} at 1)"

    def run_variant(self, variant: float) -> MetricsReport:
        result = fit(self.setup.split, self.configs[self.betas.index(variant)])
        report = evaluate(
            result.params,
            self.setup.split,
            self.setup.evaluation,
            num_types=self.setup.num_types,
            config_hash=self.setup.config_hash,
        )
        report.inter_pair_count = result.report.inter_pair_count
        return report


def beta_sweep(setup: ExperimentSetup, betas: Sequence[float] = DEFAULT_BETAS) -> list[MetricsReport]:
    """Train and evaluate once per ``beta``; one report per value, in order."""
    return BetaSweepRunner(setup, betas).run()
