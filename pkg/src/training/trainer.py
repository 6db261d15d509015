"""The training loop: batches, tape, AdamW, schedule, early stopping.

.. code-block:: python

    from src.dataio import load_directory, split_for_training
    from src.training import fit

    _, samples, edges = load_directory("data")
    split = split_for_training(samples, edges, test_fraction=0.2, validation_fraction=0.1, seed=42)
    result = fit(split, TrainConfig())
    result.report.best_epoch

Every random choice derives from ``TrainConfig.seed`` (batching) and
``ModelConfig.seed`` (initialization), so two runs with the same
configuration produce identical parameter bytes and identical reports apart
from wall time.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

from ..dataio.split import DatasetSplit
from ..dataio.table import SampleTable
from ..exceptions import ConfigurationError, NumericError, TrainingDivergedError
from ..evalsuite.retrieval import RetrievalQuery, build_queries, retrieval_eval
from ..evalsuite.similarity import FeatureBank
from ..modeling.params import ModelParams
from ..modeling.rcml import RCMLModel
from ..models.domain.configs import TrainConfig
from ..models.domain.enums import SimilarityMode
from ..models.domain.reports import EpochRecord, TrainReport
from ..tensor_core import GradTape
from .objective import batch_features, total_loss
from .optimizer import AdamW, clip_grad_norm, lr_schedule
from .pairing import BatchSampler, generic_intra_relation

_LOG = logging.getLogger(__name__)

VALIDATION_NEGATIVES = 20
VALIDATION_K = 5


@dataclass(frozen=True)
class FitResult:
    """Best-validation parameters and the trace that produced them."""

    params: ModelParams
    report: TrainReport


def _validation_queries(split: DatasetSplit, cfg: TrainConfig) -> list[RetrievalQuery]:
    if not split.validation:
        return []
    ids = [s.id for s in split.samples]
    return build_queries(
        ids, split.validation, split.all_edges, VALIDATION_NEGATIVES, cfg.seed, limit=cfg.validation_queries
    )


def validation_hit(params: ModelParams, table: SampleTable, queries: list[RetrievalQuery]) -> float:
    """Hit@5 (AVG mode) of ``params`` on ``queries``, computed without a tape."""
    ids = {q.anchor for q in queries} | {c for q in queries for c in q.candidates}
    bank = FeatureBank(RCMLModel(params), table, ids)
    return retrieval_eval(bank, queries, SimilarityMode.AVG, VALIDATION_K)


def make_sampler(split: DatasetSplit, cfg: TrainConfig) -> BatchSampler:
    """Epoch batches over the training edges with the configured ablations applied."""
    return BatchSampler(
        [s.id for s in split.samples],
        split.train,
        cfg.batch_size,
        cfg.seed,
        include_intra=True,
        include_inter=cfg.include_inter,
        negative_cap=cfg.negative_cap,
        relation_text_override=generic_intra_relation() if cfg.no_edge_description else None,
        max_redraws=cfg.max_redraws,
    )


def fit(split: DatasetSplit, cfg: TrainConfig) -> FitResult:
    """Train a fresh model on ``split.train`` and return its best-validation parameters.

    Early stopping watches validation Hit@5 (AVG) on ``split.validation``
    after every epoch and stops after ``cfg.patience`` epochs without a strict
    improvement. Without a validation slice, every epoch runs and the final
    parameters are returned.

    Raises
    ------
    TrainingDivergedError
        On a non-finite loss or gradient; ``last_good`` holds the best
        parameters seen so far
    ConfigurationError
        If the training split yields no batch

    """
    started = time.perf_counter()
    params = ModelParams.init(cfg.model)
    model = RCMLModel(params)
    table = SampleTable(split.samples)
    loss_cfg = cfg.effective_loss()
    report = TrainReport(parameter_count=params.parameter_count())
    if cfg.max_epochs == 0:
        _LOG.info("max_epochs = 0; returning the initialized parameters")
        return FitResult(params, report)

    sampler = make_sampler(split, cfg)
    steps_per_epoch = len(sampler)
    if steps_per_epoch == 0:
        raise ConfigurationError(f"{len(table)} samples with batch_size {cfg.batch_size} yield no training batch")
    total_steps = cfg.max_epochs * steps_per_epoch
    frozen = params.encoder_names() if cfg.freeze_encoders else set()
    named = params.named_tensors()
    trainable = {name: t for name, t in named.items() if name not in frozen}
    optimizer = AdamW(named, weight_decay=cfg.weight_decay, frozen=frozen)

    queries = _validation_queries(split, cfg)
    best_params = params.copy()
    best_hit = validation_hit(params, table, queries) if queries else -math.inf
    if queries:
        _LOG.info("Initial validation Hit@%d (AVG): %.4f over %d queries", VALIDATION_K, best_hit, len(queries))
    _LOG.info(
        "Training %d parameters for up to %d epochs of %d batches (%d frozen tensors)",
        report.parameter_count.total if report.parameter_count else 0,
        cfg.max_epochs,
        steps_per_epoch,
        len(frozen),
    )

    step = 0
    stale = 0
    for epoch in range(1, cfg.max_epochs + 1):
        losses: list[float] = []
        clipped = 0
        redraws_before = sampler.redraws
        for batch in sampler.epoch(epoch - 1):
            lr = lr_schedule(step, total_steps, cfg.learning_rate, cfg.schedule)
            with GradTape() as tape:
                loss = total_loss(batch_features(model, table, batch), loss_cfg)
                value = loss.item()
                if not math.isfinite(value):
                    raise TrainingDivergedError(f"non-finite loss {value} at epoch {epoch}, step {step}", best_params)
                tape.backward(loss)
                _LOG.debug("Epoch %d step %d: loss %.6f, %d tape nodes", epoch, step, value, len(tape))
            if report.initial_loss is None:
                report.initial_loss = value
            if epoch == 1:
                report.inter_pair_count += batch.inter_count
            norm = clip_grad_norm(trainable, cfg.grad_clip)
            clipped += int(cfg.grad_clip > 0.0 and norm > cfg.grad_clip)
            try:
                optimizer.step(lr)
            except NumericError as e:
                raise TrainingDivergedError(f"epoch {epoch}, step {step}: {e}", best_params) from e
            optimizer.zero_grad()
            report.learning_rates.append(lr)
            losses.append(value)
            step += 1

        if clipped:
            _LOG.warning("Epoch %d: clipped the gradient norm on %d of %d batches", epoch, clipped, len(losses))
        hit = validation_hit(params, table, queries) if queries else None
        record = EpochRecord(
            epoch=epoch,
            train_loss=math.fsum(losses) / len(losses),
            validation_hit=hit,
            learning_rate=report.learning_rates[-1],
            batches=len(losses),
            redraws=sampler.redraws - redraws_before,
        )
        report.epochs.append(record)
        report.stopping_epoch = epoch
        _LOG.info(
            "Epoch %d: train loss %.5f, validation Hit@%d %s, lr %.3e",
            epoch,
            record.train_loss,
            VALIDATION_K,
            "n/a" if hit is None else f"{hit:.4f}",
            record.learning_rate,
        )

        if hit is None:
            best_params, report.best_epoch = params.copy(), epoch
            continue
        if hit > best_hit:
            best_hit, best_params, report.best_epoch = hit, params.copy(), epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                report.stopped_early = True
                _LOG.info("Early stopping after epoch %d; best epoch %d", epoch, report.best_epoch)
                break

    report.wall_time_seconds = time.perf_counter() - started
    _LOG.info(
        "Training finished: loss %.5f -> %.5f, best epoch %d, %.1fs",
        report.initial_loss,
        report.final_loss,
        report.best_epoch,
        report.wall_time_seconds,
    )
    return FitResult(best_params, report)
