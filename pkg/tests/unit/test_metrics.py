"""
Unit tests for metrics files and gap curves
"""

import json

import pytest

from sparsemeta.exceptions import MetricsError
from sparsemeta.models.episode import Split
from sparsemeta.schemas.metrics import MetricsRecord, Phase
from sparsemeta.services.metrics_service import (
    CSV_COLUMNS,
    MetricsWriter,
    gap_curve,
    read_metrics,
    write_gap_curve,
)


def record(meta_iter: int, split: Split, accuracy: float, phase: Phase = Phase.PRETRAIN) -> MetricsRecord:
    return MetricsRecord(
        meta_iter=meta_iter,
        phase=phase,
        split=split,
        accuracy=accuracy,
        ci_halfwidth=0.01,
        loss=1.0 - accuracy,
        current_rate=0.0,
    )


class TestMetricsCsv:
    """Test the metrics CSV"""

    def test_header_and_formatting(self, tmp_path):
        path = tmp_path / "metrics.csv"
        with MetricsWriter(path) as writer:
            writer.write(record(50, Split.META_TRAIN, 2 / 3))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[1] == "50,pretrain,train,0.6666666667,0.01,0.3333333333,0"

    def test_read_back(self, tmp_path):
        path = tmp_path / "metrics.csv"
        records = [record(10, Split.META_TRAIN, 0.9), record(10, Split.META_TEST, 0.6, Phase.PRUNE)]
        with MetricsWriter(path) as writer:
            writer.write_all(records)
        loaded = read_metrics(path)
        assert [(r.meta_iter, r.split, r.accuracy) for r in loaded] == [
            (10, Split.META_TRAIN, 0.9),
            (10, Split.META_TEST, 0.6),
        ]

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("iter,acc\n1,0.5\n")
        with pytest.raises(MetricsError):
            read_metrics(path)

    def test_bad_value(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(",".join(CSV_COLUMNS) + "\n1,pretrain,validation,0.5,0,0,0\n")
        with pytest.raises(MetricsError):
            read_metrics(path)


class TestGapCurve:
    """Test the train minus test gap table"""

    def test_equal_scores(self):
        rows = gap_curve([record(i, s, 0.7) for i in (1, 2) for s in Split])
        assert [r.gap for r in rows] == [0.0, 0.0]

    def test_gap_value(self):
        rows = gap_curve([record(100, Split.META_TRAIN, 0.9), record(100, Split.META_TEST, 0.6)])
        assert rows[0].meta_iter == 100
        assert rows[0].gap == pytest.approx(0.3)

    def test_order_preserved(self):
        records = []
        for i, (train, test) in enumerate([(0.5, 0.4), (0.7, 0.5), (0.9, 0.6)]):
            records += [record(i * 10, Split.META_TEST, test), record(i * 10, Split.META_TRAIN, train)]
        rows = gap_curve(records)
        assert [r.meta_iter for r in rows] == [0, 10, 20]
        assert [round(r.gap, 10) for r in rows] == [0.1, 0.2, 0.3]

    def test_unpaired_row(self):
        with pytest.raises(MetricsError):
            gap_curve([record(1, Split.META_TRAIN, 0.5)])

    def test_duplicate_row(self):
        with pytest.raises(MetricsError):
            gap_curve([record(1, Split.META_TRAIN, 0.5)] * 2)

    def test_export_json(self, tmp_path):
        rows = gap_curve([record(5, Split.META_TRAIN, 0.8), record(5, Split.META_TEST, 0.5)])
        path = write_gap_curve(rows, tmp_path / "gap.json", "json")
        data = json.loads(path.read_text())
        assert data[0]["meta_iter"] == 5
        assert data[0]["gap"] == pytest.approx(0.3)

    def test_export_csv(self, tmp_path):
        rows = gap_curve([record(5, Split.META_TRAIN, 0.8), record(5, Split.META_TEST, 0.5)])
        path = write_gap_curve(rows, tmp_path / "gap.csv")
        assert path.read_text().splitlines()[1] == "5,pretrain,0.8,0.5,0.3"
