"""Type definitions for the Python package.

This module provides centralized type aliases following PEP 484, PEP 585 and
PEP 695 standards for static type checking with MyPy.

Type aliases use the modern `type` statement (PEP 695) introduced in Python 3.12.

Type Hierarchy:
    - Array types: float64 / int64 / bool numpy arrays backing every tensor
    - Token types: token-ID sequences of items and relation descriptions
    - Identifier types: sample and relation-type identifiers
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

type FloatArray = npt.NDArray[np.float64]
type IntArray = npt.NDArray[np.int64]
type BoolArray = npt.NDArray[np.bool_]

type TokenIds = Sequence[int]
type SampleId = int
type RelationTypeId = int

__all__ = [
    "BoolArray",
    "FloatArray",
    "IntArray",
    "RelationTypeId",
    "SampleId",
    "TokenIds",
]
