"""Dataset layer: synthetic generation, JSONL files, splits and the template vocabulary."""

from __future__ import annotations

from .generator import GeneratedDataset, LatentOracle, build_manifest, generate, synthesize
from .loader import DatasetFiles, check_integrity, load, load_directory, write_json, write_jsonl
from .split import DatasetSplit, EdgePartition, split, split_for_training
from .table import SampleTable
from .vocabulary import canonical_relation_texts, generic_intra_tokens, relation_text_tokens, tokenize

__all__ = [
    "DatasetFiles",
    "DatasetSplit",
    "EdgePartition",
    "GeneratedDataset",
    "LatentOracle",
    "SampleTable",
    "build_manifest",
    "canonical_relation_texts",
    "check_integrity",
    "generate",
    "generic_intra_tokens",
    "load",
    "load_directory",
    "relation_text_tokens",
    "split",
    "split_for_training",
    "synthesize",
    "tokenize",
    "write_json",
    "write_jsonl",
]
