"""Evaluation: similarity modes, retrieval, relation type prediction, validity probe and report files.

The experiment runners (:mod:`src.evalsuite.runners`) train models and are
imported from their module directly.
"""

from __future__ import annotations

from .report import dump_embeddings, format_table, metrics_row, write_csv, write_metrics_json
from .retrieval import (
    RetrievalQuery,
    Scorer,
    bank_scorer,
    build_queries,
    is_hit,
    oracle_scorer,
    query_rank,
    random_scorer,
    related_partners,
    retrieval_eval,
    retrieval_report,
)
from .similarity import FeatureBank, average_embedding, mode_vectors, pair_similarity, similarity
from .type_prediction import (
    PairScorer,
    bank_pair_scorer,
    oracle_pair_scorer,
    random_pair_scorer,
    relation_type_predict,
    relation_type_texts,
    type_accuracy,
    type_prediction_report,
)
from .validity import (
    LinearProbe,
    ValidityExample,
    ValidityResult,
    build_validity_examples,
    check_balance,
    validity_eval,
    validity_features,
)

__all__ = [
    "FeatureBank",
    "LinearProbe",
    "PairScorer",
    "RetrievalQuery",
    "Scorer",
    "ValidityExample",
    "ValidityResult",
    "average_embedding",
    "bank_pair_scorer",
    "bank_scorer",
    "build_queries",
    "build_validity_examples",
    "check_balance",
    "dump_embeddings",
    "format_table",
    "is_hit",
    "metrics_row",
    "mode_vectors",
    "oracle_pair_scorer",
    "oracle_scorer",
    "pair_similarity",
    "query_rank",
    "random_pair_scorer",
    "random_scorer",
    "related_partners",
    "relation_type_predict",
    "relation_type_texts",
    "retrieval_eval",
    "retrieval_report",
    "similarity",
    "type_accuracy",
    "type_prediction_report",
    "validity_eval",
    "validity_features",
]
