"""JSONL dataset files: reading with line-numbered diagnostics, and writing.

A dataset directory holds three files:

- ``samples.jsonl``: one :class:`~src.models.domain.records.Sample` per line
- ``edges.jsonl``: one :class:`~src.models.domain.records.RelationEdge` per line
- ``manifest.json``: counts, seed, generator configuration and split description

.. code-block:: python

    from src.dataio import load, load_directory

    samples, edges = load("data/samples.jsonl", "data/edges.jsonl")
    files, samples, edges = load_directory("data")

"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..exceptions import DataError, IntegrityError, ParseError
from ..models.domain.records import RelationEdge, Sample

_LOG = logging.getLogger(__name__)

SAMPLES_FILE = "samples.jsonl"
EDGES_FILE = "edges.jsonl"
MANIFEST_FILE = "manifest.json"


class DatasetFiles(BaseModel):
    """Locations of a dataset's files plus its parsed manifest."""

    model_config = ConfigDict(extra="forbid")

    samples_path: Path
    edges_path: Path
    manifest_path: Path
    manifest: dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def in_directory(cls, directory: str | Path) -> DatasetFiles:
        root = Path(directory)
        return cls(
            samples_path=root / SAMPLES_FILE,
            edges_path=root / EDGES_FILE,
            manifest_path=root / MANIFEST_FILE,
        )


def _read_records[RecordT: BaseModel](path: Path, model: type[RecordT]) -> list[RecordT]:
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    records: list[RecordT] = []
    with path.open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, 1):
            text = line.strip()
            if not text:
                continue
            try:
                records.append(model.model_validate_json(text))
            except ValidationError as e:
                reason = "; ".join(
                    f"{'.'.join(str(p) for p in err['loc']) or 'line'}: {err['msg']}" for err in e.errors()
                )
                raise ParseError(str(path), line_number, reason) from e
    return records


def check_integrity(samples: Sequence[Sample], edges: Sequence[RelationEdge]) -> None:
    """Reject duplicate sample ids, dangling edges and duplicate typed edges.

    Raises
    ------
    IntegrityError
        Naming the offending id or edge

    """
    known: set[int] = set()
    for sample in samples:
        if sample.id in known:
            raise IntegrityError(f"duplicate sample id {sample.id}")
        known.add(sample.id)
    seen: set[tuple[int, int, int]] = set()
    for edge in edges:
        for endpoint in (edge.src, edge.dst):
            if endpoint not in known:
                raise IntegrityError(f"edge {edge.key} references unknown sample id {endpoint}")
        if edge.key in seen:
            raise IntegrityError(f"duplicate edge (src, dst, relation_type) = {edge.key}")
        seen.add(edge.key)


def load(samples_path: str | Path, edges_path: str | Path) -> tuple[list[Sample], list[RelationEdge]]:
    """Read and integrity-check a samples file and an edges file.

    Raises
    ------
    ParseError
        If a line is not a valid record; the message names file and line
    IntegrityError
        If an edge references an unknown sample, or ids repeat
    DataError
        If a file does not exist

    """
    samples = _read_records(Path(samples_path), Sample)
    edges = _read_records(Path(edges_path), RelationEdge)
    check_integrity(samples, edges)
    _LOG.info("Loaded %d samples and %d edges", len(samples), len(edges))
    return samples, edges


def load_directory(directory: str | Path) -> tuple[DatasetFiles, list[Sample], list[RelationEdge]]:
    """Load the three files of a dataset directory."""
    files = DatasetFiles.in_directory(directory)
    samples, edges = load(files.samples_path, files.edges_path)
    if files.manifest_path.is_file():
        try:
            files.manifest = json.loads(files.manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(str(files.manifest_path), e.lineno, e.msg) from e
        counts = files.manifest.get("counts", {})
        if counts and (counts.get("samples") != len(samples) or counts.get("edges") != len(edges)):
            raise IntegrityError(
                f"manifest counts {counts.get('samples')}/{counts.get('edges')} do not match "
                f"files {len(samples)}/{len(edges)}"
            )
    return files, samples, edges


def write_jsonl(records: Iterable[BaseModel], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(record.model_dump_json())
            handle.write("\n")
    return target


def write_json(data: Any, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return target
