"""RCML - relation-conditioned multimodal contrastive learning at desk scale.

Samples carry a token sequence and a set of image patches; typed relation
edges between samples carry a short description. The model encodes both
modalities, pools each sample's tokens with attention queried by the
relation description, and is trained so that related samples agree under
that relation while unrelated ones do not.

Architecture Overview
=====================

1. **Tensor core** (src/tensor_core/)
   - Dense float64 tensors over numpy with a reverse-mode gradient tape
   - Finite-difference gradient checking

2. **Modeling** (src/modeling/)
   - Text, image and relation encoders, relation-conditioned attention pooling
   - Parameter containers and deterministic checkpoints

3. **Training** (src/training/)
   - Positive pairs and negatives, the contrastive objective, AdamW and the fit loop
   - Gradient and CLIP-reduction self-checks

4. **Data** (src/dataio/)
   - Synthetic relational dataset generator, JSONL loader, pair-disjoint splits

5. **Evaluation** (src/evalsuite/)
   - Relation-guided retrieval, relation type prediction, relation validity probe
   - Ablation and beta-sweep runners, report files

6. **Models** (src/models/)
   - Pydantic records, stage configurations, reports and the flat run configuration

7. **Configuration and entry point** (src/config.py, src/entry.py)
   - Process settings from ``RCML_*`` environment variables
   - The ``rcml`` command line

Quick Start
===========

.. code-block:: bash

    rcml gen-data --out data/
    rcml train --data data/ --out runs/full
    rcml eval --data data/ --out runs/full
"""

from __future__ import annotations

from .config import Settings, get_settings
from .models.cli import Command, LogLevel, RunConfig

__version__ = "0.1.0"

__all__ = [
    "Command",
    "LogLevel",
    "RunConfig",
    "Settings",
    "get_settings",
]
