"""Synthetic relational multimodal dataset.

Every item ``i`` has a latent unit vector ``u_i`` in ``R^h``. Both modalities
are noisy views of it:

- **Text.** Content tokens are drawn from ``2h`` topic bands, one per latent
  axis and sign, with band probabilities ``softmax(4 [u_i, -u_i])``. EOT
  closes the sequence.
- **Image.** Patch slot ``s`` reads latent axis ``s mod h`` through a fixed
  random vector in ``R^p``; Gaussian noise of std ``noise_std`` is added.

Each relation type ``r`` owns a bilinear form ``M_r`` supported on two latent
axes. Pair ``(i, j)``, ``i < j``, becomes an edge of type ``r`` when
``u_iᵀ M_r u_j`` exceeds the edge threshold; when more pairs qualify than
``max_edges_per_type``, the threshold is raised to keep only the top-scoring
pairs and the effective value is recorded in the manifest. A type left
without edges is redrawn from a derived seed.

Because type ``r`` only reads two latent axes, relation-aware pooling that
focuses on the matching tokens and patches can recover the edges far better
than a single global embedding.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..exceptions import ConfigurationError
from ..fingerprint import config_hash
from ..models.domain.configs import GeneratorConfig
from ..models.domain.records import EOT_ID, RelationEdge, Sample
from ..types import FloatArray, SampleId
from .loader import EDGES_FILE, MANIFEST_FILE, SAMPLES_FILE, DatasetFiles, write_json, write_jsonl
from .split import SPLIT_RULE, split
from .vocabulary import FIRST_CONTENT_ID, relation_text_tokens, relation_type_name

_LOG = logging.getLogger(__name__)

MANIFEST_VERSION = 1
TOPIC_SHARPNESS = 4.0
FORM_WEIGHT_RANGE = (0.6, 1.0)
MAX_FORM_ATTEMPTS = 25


class LatentOracle:
    """Scores pairs with the generating bilinear forms.

    Parameters
    ----------
    latents : FloatArray
        ``(N, h)`` unit latent vectors, row ``n`` belonging to ``ids[n]``
    forms : FloatArray
        ``(K, h, h)`` relation bilinear forms
    ids : Sequence[SampleId]
        Sample id of each latent row

    """

    def __init__(self, latents: FloatArray, forms: FloatArray, ids: Sequence[SampleId]) -> None:
        self.latents = latents
        self.forms = forms
        self._row = {sample_id: row for row, sample_id in enumerate(ids)}

    @property
    def num_types(self) -> int:
        return self.forms.shape[0]

    def score(self, a: SampleId, b: SampleId, relation_type: int) -> float:
        u_a, u_b = self.latents[self._row[a]], self.latents[self._row[b]]
        return float(u_a @ self.forms[relation_type] @ u_b)

    def scores(self, anchor: SampleId, candidates: Sequence[SampleId], relation_type: int) -> FloatArray:
        rows = [self._row[c] for c in candidates]
        return self.latents[rows] @ self.forms[relation_type] @ self.latents[self._row[anchor]]

    def type_scores(self, a: SampleId, b: SampleId) -> FloatArray:
        """Score of every relation type for the pair ``(a, b)``: ``(K,)``."""
        u_a, u_b = self.latents[self._row[a]], self.latents[self._row[b]]
        return np.einsum("i,kij,j->k", u_a, self.forms, u_b)


@dataclass(frozen=True)
class GeneratedDataset:
    """In-memory result of :func:`synthesize`."""

    config: GeneratorConfig
    samples: tuple[Sample, ...]
    edges: tuple[RelationEdge, ...]
    latents: FloatArray
    forms: FloatArray
    effective_thresholds: tuple[float, ...]
    regenerations: tuple[int, ...]

    def oracle(self) -> LatentOracle:
        return LatentOracle(self.latents, self.forms, [s.id for s in self.samples])

    def edges_per_type(self) -> list[int]:
        counts = [0] * self.config.num_relation_types
        for edge in self.edges:
            counts[edge.relation_type] += 1
        return counts


def _latents(rng: np.random.Generator, cfg: GeneratorConfig) -> FloatArray:
    raw = rng.standard_normal((cfg.num_samples, cfg.latent_dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def _texts(rng: np.random.Generator, cfg: GeneratorConfig, latents: FloatArray) -> np.ndarray:
    bands = 2 * cfg.latent_dim
    band_size = (cfg.vocab_size - FIRST_CONTENT_ID) // bands
    if band_size < 1:
        raise ConfigurationError(
            f"vocab_size={cfg.vocab_size} leaves no room for {bands} topic bands above ID {FIRST_CONTENT_ID}"
        )
    logits = TOPIC_SHARPNESS * np.concatenate([latents, -latents], axis=1)
    weights = np.exp(logits - logits.max(axis=1, keepdims=True))
    cumulative = np.cumsum(weights / weights.sum(axis=1, keepdims=True), axis=1)

    content = cfg.tokens_per_item - 1
    draws = rng.random((cfg.num_samples, content))
    band = np.minimum((draws[..., None] > cumulative[:, None, :]).sum(axis=-1), bands - 1)
    offset = rng.integers(0, band_size, size=(cfg.num_samples, content))
    tokens = FIRST_CONTENT_ID + band * band_size + offset
    return np.concatenate([tokens, np.full((cfg.num_samples, 1), EOT_ID)], axis=1)


def _patches(rng: np.random.Generator, cfg: GeneratorConfig, latents: FloatArray) -> FloatArray:
    readouts = rng.standard_normal((cfg.patches_per_item, cfg.patch_dim))
    axes = np.arange(cfg.patches_per_item) % cfg.latent_dim
    clean = latents[:, axes, None] * readouts[None, :, :]
    noise = rng.standard_normal(clean.shape) * cfg.noise_std
    return clean + noise


def _relation_edges(
    cfg: GeneratorConfig, latents: FloatArray, relation_type: int
) -> tuple[FloatArray, list[tuple[int, int]], float, int]:
    """Draw the form of one relation type until it yields at least one edge."""
    count = latents.shape[0]
    lower = np.tril_indices(count)
    for attempt in range(MAX_FORM_ATTEMPTS):
        rng = np.random.default_rng([cfg.seed, relation_type, attempt])
        axes = rng.choice(cfg.latent_dim, size=2, replace=False)
        weights = rng.uniform(*FORM_WEIGHT_RANGE, size=2)
        form = np.zeros((cfg.latent_dim, cfg.latent_dim))
        form[axes, axes] = weights

        projected = latents[:, axes] * np.sqrt(weights)
        scores = projected @ projected.T
        scores[lower] = -np.inf
        flat = scores.ravel()
        qualifying = int(np.count_nonzero(flat > cfg.edge_threshold))
        if qualifying == 0:
            _LOG.warning(
                "Relation type %d (%s) has no pair above threshold %.3f on attempt %d; redrawing its form",
                relation_type,
                relation_type_name(relation_type),
                cfg.edge_threshold,
                attempt,
            )
            continue
        threshold = cfg.edge_threshold
        if qualifying > cfg.max_edges_per_type:
            # Largest excluded score becomes the effective threshold.
            threshold = float(np.partition(flat, -(cfg.max_edges_per_type + 1))[-(cfg.max_edges_per_type + 1)])
        pairs = [(int(i), int(j)) for i, j in np.argwhere(scores > threshold)]
        return form, pairs, threshold, attempt
    raise ConfigurationError(
        f"relation type {relation_type} has no edge above edge_threshold={cfg.edge_threshold} "
        f"after {MAX_FORM_ATTEMPTS} attempts; lower the threshold"
    )


def synthesize(cfg: GeneratorConfig) -> GeneratedDataset:
    """Generate samples, planted edges and the latent structure behind them.

    Deterministic given ``cfg``.

    Raises
    ------
    ConfigurationError
        If the vocabulary is too small for the topic bands, or a relation type
        stays without edges after every redraw

    """
    rng = np.random.default_rng(cfg.seed)
    latents = _latents(rng, cfg)
    tokens = _texts(rng, cfg, latents)
    patches = _patches(rng, cfg, latents)
    categories = np.argmax(np.concatenate([latents, -latents], axis=1), axis=1)
    samples = tuple(
        Sample(
            id=i,
            text_tokens=tokens[i].tolist(),
            image_patches=patches[i].tolist(),
            category=int(categories[i]),
        )
        for i in range(cfg.num_samples)
    )

    forms, edges, thresholds, redraws = [], [], [], []
    for relation_type in range(cfg.num_relation_types):
        form, pairs, threshold, attempt = _relation_edges(cfg, latents, relation_type)
        text = list(relation_text_tokens(relation_type))
        edges.extend(
            RelationEdge(src=i, dst=j, relation_type=relation_type, relation_text_tokens=text) for i, j in pairs
        )
        forms.append(form)
        thresholds.append(threshold)
        redraws.append(attempt)
    dataset = GeneratedDataset(
        config=cfg,
        samples=samples,
        edges=tuple(edges),
        latents=latents,
        forms=np.stack(forms),
        effective_thresholds=tuple(thresholds),
        regenerations=tuple(redraws),
    )
    _LOG.info(
        "Generated %d samples and %d edges over %d relation types (per type: %s)",
        len(samples),
        len(edges),
        cfg.num_relation_types,
        dataset.edges_per_type(),
    )
    return dataset


def build_manifest(dataset: GeneratedDataset) -> dict[str, object]:
    cfg = dataset.config
    train, test = split(dataset.samples, dataset.edges, cfg.test_fraction, cfg.seed)
    return {
        "format_version": MANIFEST_VERSION,
        "seed": cfg.seed,
        "config": cfg.model_dump(mode="json"),
        "config_hash": config_hash(cfg),
        "counts": {
            "samples": len(dataset.samples),
            "edges": len(dataset.edges),
            "edges_per_type": dataset.edges_per_type(),
        },
        "relation_types": [relation_type_name(r) for r in range(cfg.num_relation_types)],
        "effective_thresholds": list(dataset.effective_thresholds),
        "regenerations": list(dataset.regenerations),
        "split": {
            "rule": SPLIT_RULE,
            "seed": cfg.seed,
            "test_fraction": cfg.test_fraction,
            "train_edges": len(train.edges),
            "test_edges": len(test.edges),
        },
    }


def generate(cfg: GeneratorConfig, out_dir: str | Path) -> DatasetFiles:
    """Write ``samples.jsonl``, ``edges.jsonl`` and ``manifest.json`` into ``out_dir``.

    The same configuration always produces byte-identical files.

    Examples
    --------
    .. code-block:: python

        files = generate(GeneratorConfig(seed=42), "data/")
        files.manifest["counts"]["edges"]

    """
    dataset = synthesize(cfg)
    files = DatasetFiles.in_directory(out_dir)
    write_jsonl(dataset.samples, files.samples_path)
    write_jsonl(dataset.edges, files.edges_path)
    files.manifest = build_manifest(dataset)
    write_json(files.manifest, files.manifest_path)
    _LOG.info("Wrote dataset files to %s", Path(out_dir))
    return files


__all__ = [
    "EDGES_FILE",
    "MANIFEST_FILE",
    "SAMPLES_FILE",
    "GeneratedDataset",
    "LatentOracle",
    "build_manifest",
    "generate",
    "synthesize",
]
