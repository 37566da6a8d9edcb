"""
Metrics CSV streaming and the train/test generalization-gap table.
"""

from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Union
import csv
import json
import logging

from pydantic import ValidationError

from sparsemeta.exceptions import MetricsError
from sparsemeta.models.episode import Split
from sparsemeta.schemas.metrics import GapRow, MetricsRecord

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["meta_iter", "phase", "split", "accuracy", "ci_halfwidth", "loss", "rate"]
GAP_COLUMNS = ["meta_iter", "phase", "train_accuracy", "test_accuracy", "gap"]


def format_float(value: float) -> str:
    return f"{value:.10g}"


def record_row(record: MetricsRecord) -> List[str]:
    return [
        str(record.meta_iter),
        record.phase.value,
        record.split.value,
        format_float(record.accuracy),
        format_float(record.ci_halfwidth),
        format_float(record.loss),
        format_float(record.current_rate),
    ]


class MetricsWriter:
    """Appends MetricsRecords to a CSV file as they are produced."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._file: Optional[TextIO] = None
        self._writer = None

    def __enter__(self) -> "MetricsWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._file)
        self._writer.writerow(CSV_COLUMNS)
        return self

    def write(self, record: MetricsRecord) -> None:
        self._writer.writerow(record_row(record))
        self._file.flush()

    def write_all(self, records: Iterable[MetricsRecord]) -> None:
        for record in records:
            self.write(record)

    def __exit__(self, exc_type, exc, tb) -> None:
        self._file.close()


def read_metrics(path: Union[str, Path]) -> List[MetricsRecord]:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise MetricsError(f"cannot read metrics file {path}: {e}") from e

    if not rows or rows[0] != CSV_COLUMNS:
        raise MetricsError(f"{path}: expected header {','.join(CSV_COLUMNS)}")

    records = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise MetricsError(f"{path}:{line}: expected {len(CSV_COLUMNS)} columns, got {len(row)}")
        fields = dict(zip(CSV_COLUMNS, row))
        fields["current_rate"] = fields.pop("rate")
        try:
            records.append(MetricsRecord(**fields))
        except ValidationError as e:
            raise MetricsError(f"{path}:{line}: {e.errors()[0]['msg']}") from e
    return records


def gap_curve(records: Sequence[MetricsRecord]) -> List[GapRow]:
    """One row per evaluated iteration, in order of first appearance."""
    paired: Dict[int, Dict[Split, MetricsRecord]] = {}
    for record in records:
        by_split = paired.setdefault(record.meta_iter, {})
        if record.split in by_split:
            raise MetricsError(f"duplicate {record.split.value} row at meta_iter {record.meta_iter}")
        by_split[record.split] = record

    rows = []
    for meta_iter, by_split in paired.items():
        if len(by_split) != 2:
            missing = Split.META_TEST if Split.META_TRAIN in by_split else Split.META_TRAIN
            raise MetricsError(f"meta_iter {meta_iter} has no {missing.value} row")
        train, test = by_split[Split.META_TRAIN], by_split[Split.META_TEST]
        rows.append(
            GapRow(
                meta_iter=meta_iter,
                phase=train.phase,
                train_accuracy=train.accuracy,
                test_accuracy=test.accuracy,
            )
        )
    return rows


def gap_row_values(row: GapRow) -> List[str]:
    return [
        str(row.meta_iter),
        row.phase.value,
        format_float(row.train_accuracy),
        format_float(row.test_accuracy),
        format_float(row.gap),
    ]


def write_gap_curve(rows: Sequence[GapRow], path: Union[str, Path], format: str = "csv") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(GAP_COLUMNS)
            for row in rows:
                writer.writerow(gap_row_values(row))
    elif format == "json":
        data = [
            {
                "meta_iter": row.meta_iter,
                "phase": row.phase.value,
                "train_accuracy": row.train_accuracy,
                "test_accuracy": row.test_accuracy,
                "gap": row.gap,
            }
            for row in rows
        ]
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2)
    else:
        raise ValueError(f"unsupported gap curve format: {format}")
    logger.info(f"Wrote {len(rows)} gap rows to {path}")
    return path
