"""Self-checks of the training objective on small random batches.

- :func:`model_grad_check` compares tape gradients of the full four-term loss
  with central finite differences on a tiny model.
- :func:`clip_check` confirms that hard summary pooling over self-pairs with
  cross-modal terms only reproduces the symmetric CLIP-style loss, and
  measures how far soft pooling at ``beta = 1`` departs from it.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from ..dataio.table import SampleTable
from ..dataio.vocabulary import FIRST_CONTENT_ID, RELATION_TYPE_NAMES, generic_intra_tokens, relation_text_tokens
from ..exceptions import ConfigurationError
from ..modeling.params import ModelParams
from ..modeling.rcml import RCMLModel
from ..models.domain.configs import LossConfig, ModelConfig
from ..models.domain.enums import BetaOneMode
from ..models.domain.records import EOT_ID, RelationEdge, Sample
from ..models.domain.reports import ClipCheckReport, GradCheckReport
from ..tensor_core import Tensor, active_tape, grad_check
from .objective import batch_features, clip_reduction_loss, total_loss
from .pairing import assemble_batch

_LOG = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-4
CLIP_TOLERANCE = 1e-12
GRADCHECK_VOCAB = FIRST_CONTENT_ID + 16
GRADCHECK_TOKENS = 5
GRADCHECK_PATCHES = 4
GRADCHECK_PATCH_DIM = 4


def _faulty_identity(x: Tensor) -> Tensor:
    """Identity whose recorded gradient is doubled; the gradient check must reject it."""
    out = Tensor(x.data)
    tape = active_tape()
    if tape is not None and x.requires_grad:
        out.requires_grad = True
        tape.record(out, (x,), lambda g: (2.0 * g,), "faulty_identity")
    return out


def random_samples(count: int, vocab_size: int, tokens: int, patches: int, patch_dim: int, seed: int) -> list[Sample]:
    """Samples with random content tokens (plus EOT) and Gaussian patches."""
    rng = np.random.default_rng(seed)
    return [
        Sample(
            id=i,
            text_tokens=[*rng.integers(FIRST_CONTENT_ID, vocab_size, size=tokens - 1).tolist(), EOT_ID],
            image_patches=rng.standard_normal((patches, patch_dim)).tolist(),
            category=0,
        )
        for i in range(count)
    ]


def model_grad_check(
    dim: int = 8,
    batch_size: int = 4,
    beta: float = 0.6,
    seed: int = 42,
    step: float = 1e-5,
    tolerance: float = GRADCHECK_TOLERANCE,
    inject_fault: bool = False,
    max_entries_per_tensor: int | None = None,
) -> GradCheckReport:
    """Finite-difference check of the full loss on a ``dim``-wide model and one batch.

    The batch holds ``batch_size`` samples, intra pairs for each and one
    inter-sample edge per consecutive pair, so all four loss terms and every
    parameter group receive gradient.

    Raises
    ------
    ConfigurationError
        If ``batch_size`` is below 4 (an anchor would run out of negatives)

    """
    if batch_size < 4:
        raise ConfigurationError(f"gradcheck needs batch_size >= 4, got {batch_size}")
    config = ModelConfig(
        vocab_size=GRADCHECK_VOCAB,
        dim=dim,
        max_text_len=max(GRADCHECK_TOKENS, len(generic_intra_tokens()), len(relation_text_tokens(0))),
        max_patches=GRADCHECK_PATCHES + 1,
        patch_dim=GRADCHECK_PATCH_DIM,
        depth=1,
        init_std=0.3,
        beta=beta,
        seed=seed,
    )
    samples = random_samples(
        batch_size, GRADCHECK_VOCAB, GRADCHECK_TOKENS, GRADCHECK_PATCHES, GRADCHECK_PATCH_DIM, seed
    )
    edges: list[RelationEdge] = []
    for i in range(0, batch_size - 1, 2):
        kind = (i // 2) % len(RELATION_TYPE_NAMES)
        edges.append(
            RelationEdge(src=i, dst=i + 1, relation_type=kind, relation_text_tokens=list(relation_text_tokens(kind)))
        )
    batch = assemble_batch([s.id for s in samples], edges, True, True, np.random.default_rng(seed))
    params = ModelParams.init(config)
    model = RCMLModel(params)
    table = SampleTable(samples)
    loss_cfg = LossConfig()

    def loss() -> Tensor:
        value = total_loss(batch_features(model, table, batch), loss_cfg)
        return _faulty_identity(value) if inject_fault else value

    report = grad_check(loss, params, step=step, max_entries_per_tensor=max_entries_per_tensor, seed=seed)
    report = report.model_copy(update={"tolerance": tolerance})
    _LOG.info(
        "gradcheck d=%d batch=%d beta=%.2f: max relative error %.3e (%s)",
        dim,
        batch_size,
        beta,
        report.max_relative_error,
        "pass" if report.passed else "FAIL",
    )
    return report


def clip_check(
    samples: Sequence[Sample],
    model_config: ModelConfig,
    tau: float = 0.1,
    batches: int = 20,
    batch_size: int = 8,
    seed: int = 42,
    tolerance: float = CLIP_TOLERANCE,
) -> ClipCheckReport:
    """Compare ``total_loss`` (cross-modal only) with ``clip_reduction_loss`` on random batches.

    Batch ``b`` draws ``batch_size`` samples and fresh parameters from the
    seed ``(seed, b)``. The hard-mode gap must stay within ``tolerance``;
    the soft-mode gap is measured against the same CLIP loss and reported.

    Examples
    --------
    .. code-block:: python

        report = clip_check(samples, ModelConfig(), batches=20)
        assert report.passed

    """
    if len(samples) < batch_size:
        raise ConfigurationError(f"clip-check needs at least {batch_size} samples, got {len(samples)}")
    table = SampleTable(samples)
    ids = np.asarray(table.ids)
    loss_cfg = LossConfig(tau=tau, cross_modal_only=True)
    max_gap = soft_gap = 0.0
    for b in range(batches):
        rng = np.random.default_rng([seed, b])
        roster = [int(i) for i in rng.choice(ids, size=batch_size, replace=False)]
        batch = assemble_batch(roster, [], include_intra=True, include_inter=False, rng=rng)
        config = model_config.model_copy(
            update={"beta": 1.0, "beta_one_mode": BetaOneMode.HARD, "seed": int(rng.integers(2**31))}
        )
        hard = ModelParams.init(config)
        soft = hard.with_attention_mode(1.0, BetaOneMode.SOFT)

        hard_features = batch_features(RCMLModel(hard), table, batch)
        clip = clip_reduction_loss(hard_features, tau).item()
        gap = abs(total_loss(hard_features, loss_cfg).item() - clip)
        soft_value = total_loss(batch_features(RCMLModel(soft), table, batch), loss_cfg).item()
        max_gap = max(max_gap, gap)
        soft_gap = max(soft_gap, abs(soft_value - clip))
        _LOG.debug("clip-check batch %d: hard gap %.3e, soft gap %.3e", b, gap, abs(soft_value - clip))

    passed = max_gap <= tolerance
    _LOG.info(
        "clip-check over %d batches: hard gap %.3e (tolerance %.0e, %s); soft beta=1 gap %.3e",
        batches,
        max_gap,
        tolerance,
        "pass" if passed else "FAIL",
        soft_gap,
    )
    return ClipCheckReport(batches=batches, tolerance=tolerance, max_gap=max_gap, soft_gap=soft_gap, passed=passed)
