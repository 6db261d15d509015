import csv
import json
from pathlib import Path

import numpy as np

from src.dataio import DatasetSplit
from src.evalsuite import dump_embeddings, format_table, metrics_row, write_csv, write_metrics_json
from src.modeling import ModelParams
from src.models.domain import MetricsReport


def sample_report(**overrides: object) -> MetricsReport:
    values: dict[str, object] = {
        "beta": 0.6,
        "seed": 42,
        "config_hash": "abc123",
        "hit_at_k": {"AVG": 0.5, "TT": 0.25},
        "type_top_k": {"AVG": 0.75},
        "validity_accuracy": 0.8,
        "query_count": 12,
    }
    values.update(overrides)
    return MetricsReport.model_validate(values)


class TestMetricsRow:
    """Flat table rows."""

    def test_every_mode_gets_a_column(self) -> None:
        """Missing modes are present as empty cells."""
        row = metrics_row(sample_report())
        assert row["hit@5_AVG"] == 0.5
        assert row["hit@5_II"] is None
        assert row["top3_AVG"] == 0.75
        assert row["validity_accuracy"] == 0.8
        assert row["parameters"] is None
        assert list(row)[:4] == ["ablation", "beta", "seed", "config_hash"]

    def test_format_table(self) -> None:
        """One header line plus one line per report, floats at four decimals."""
        table = format_table([sample_report(), sample_report(ablation="no_intra_loss", validity_accuracy=None)])
        lines = table.splitlines()
        assert len(lines) == 3
        assert lines[0].split()[:2] == ["ablation", "beta"]
        assert "0.5000" in lines[1]
        assert lines[2].split()[0] == "no_intra_loss"
        assert " - " in lines[2]
        assert format_table([]) == ""


class TestFiles:
    """Metrics files."""

    def test_json_single_and_many(self, tmp_path: Path) -> None:
        single = write_metrics_json(sample_report(), tmp_path / "one.json")
        assert json.loads(single.read_text())["hit_at_k"] == {"AVG": 0.5, "TT": 0.25}
        many = write_metrics_json([sample_report(), sample_report(beta=1.0)], tmp_path / "sub" / "many.json")
        assert [entry["beta"] for entry in json.loads(many.read_text())] == [0.6, 1.0]

    def test_json_is_byte_stable(self, tmp_path: Path) -> None:
        first = write_metrics_json(sample_report(), tmp_path / "a.json").read_bytes()
        assert first == write_metrics_json(sample_report(), tmp_path / "b.json").read_bytes()

    def test_csv(self, tmp_path: Path) -> None:
        """None values become empty cells."""
        path = write_csv([sample_report(), sample_report(beta=None)], tmp_path / "out.csv")
        with path.open(encoding="utf-8", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 2
        assert rows[0]["hit@5_AVG"] == "0.5"
        assert rows[0]["hit@5_II"] == ""
        assert rows[1]["beta"] == ""


class TestDumpEmbeddings:
    """Relation-conditioned embedding export."""

    def test_one_line_per_test_endpoint(
        self, tiny_params: ModelParams, tiny_split: DatasetSplit, tmp_path: Path
    ) -> None:
        """Both endpoints of each held-out edge are written with unit embeddings."""
        path = tmp_path / "emb.jsonl"
        lines = dump_embeddings(tiny_params, tiny_split, path, chunk_size=16)
        records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
        assert lines == len(records) == 2 * len(tiny_split.test)
        assert records[0]["id"] == tiny_split.test[0].src
        assert records[1]["id"] == tiny_split.test[0].dst
        for record in records:
            assert set(record) == {"id", "relation_type", "z_text", "z_image"}
            np.testing.assert_allclose(np.linalg.norm(record["z_text"]), 1.0)
            np.testing.assert_allclose(np.linalg.norm(record["z_image"]), 1.0)
