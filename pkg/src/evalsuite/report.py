"""Metrics serialization: JSON for machines, aligned columns and CSV for people, plus the embedding dump."""

from __future__ import annotations

import csv
import json
import logging
from collections.abc import Sequence
from pathlib import Path

from ..dataio.split import DatasetSplit
from ..dataio.table import SampleTable
from ..modeling.params import ModelParams
from ..modeling.rcml import RCMLModel
from ..models.domain.enums import PairKind, SimilarityMode
from ..models.domain.reports import MetricsReport
from .similarity import FeatureBank

_LOG = logging.getLogger(__name__)


def metrics_row(report: MetricsReport) -> dict[str, object]:
    """Flatten one report into a single table row."""
    row: dict[str, object] = {
        "ablation": report.ablation,
        "beta": report.beta,
        "seed": report.seed,
        "config_hash": report.config_hash,
    }
    for mode in SimilarityMode:
        row[f"hit@{report.hit_k}_{mode.value}"] = report.hit_at_k.get(mode.value)
    for mode in SimilarityMode:
        row[f"top{report.type_k}_{mode.value}"] = report.type_top_k.get(mode.value)
    row["validity_accuracy"] = report.validity_accuracy
    row["inter_pairs"] = report.inter_pair_count
    row["parameters"] = report.parameter_count.total if report.parameter_count else None
    return row


def _cell(value: object) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def format_table(reports: Sequence[MetricsReport]) -> str:
    """Aligned-column text table, one line per report.

    Examples
    --------
    .. code-block:: python

        print(format_table([report]))

    """
    rows = [metrics_row(r) for r in reports]
    if not rows:
        return ""
    headers = list(rows[0])
    cells = [[_cell(row.get(h)) for h in headers] for row in rows]
    widths = [max(len(h), *(len(line[i]) for line in cells)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths, strict=True))]
    lines.extend("  ".join(c.rjust(w) for c, w in zip(line, widths, strict=True)) for line in cells)
    return "\n".join(lines) + "\n"


def write_metrics_json(reports: MetricsReport | Sequence[MetricsReport], path: str | Path) -> Path:
    """One report as an object, several as a list; keys sorted, two-space indent."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(reports, MetricsReport):
        data: object = reports.model_dump(mode="json")
    else:
        data = [r.model_dump(mode="json") for r in reports]
    target.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return target


def write_csv(reports: Sequence[MetricsReport], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    rows = [metrics_row(r) for r in reports]
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows({k: "" if v is None else v for k, v in row.items()} for row in rows)
    return target


def dump_embeddings(params: ModelParams, split: DatasetSplit, path: str | Path, chunk_size: int = 256) -> int:
    """Write both endpoints of every test edge, conditioned on that edge's relation, as JSONL.

    Each line is ``{"id", "relation_type", "z_text", "z_image"}``. Returns the
    number of lines written.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    ids = {e.src for e in split.test} | {e.dst for e in split.test}
    bank = FeatureBank(RCMLModel(params), SampleTable(split.samples), ids, chunk_size=chunk_size)
    bank.ensure(dict.fromkeys((e.relation_text, PairKind.INTER) for e in split.test))
    lines = 0
    with target.open("w", encoding="utf-8", newline="\n") as handle:
        for edge in split.test:
            z_text, z_image = bank.embeddings((edge.relation_text, PairKind.INTER), [edge.src, edge.dst])
            for row, sample_id in enumerate((edge.src, edge.dst)):
                record = {
                    "id": sample_id,
                    "relation_type": edge.relation_type,
                    "z_text": z_text[row].tolist(),
                    "z_image": z_image[row].tolist(),
                }
                handle.write(json.dumps(record) + "\n")
                lines += 1
    _LOG.info("Dumped %d relation-conditioned embeddings to %s", lines, target)
    return lines
