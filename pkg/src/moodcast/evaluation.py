"""Confusion matrices, accuracy, RMSE and the run report."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

REPORT_VERSION = 1


@dataclass(frozen=True)
class ConfusionMatrix:
    """Actual classes on rows, predicted classes on columns.

    The two label sets need not agree: a model may predict classes never
    seen as actuals.
    """

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.counts) != len(self.rows) or any(len(r) != len(self.cols) for r in self.counts):
            raise ValueError("counts shape does not match labels")
        if any(c < 0 for r in self.counts for c in r):
            raise ValueError("negative count")

    @classmethod
    def from_rows(cls, rows: Sequence[int], cols: Sequence[int],
                  counts: Sequence[Sequence[int]]) -> ConfusionMatrix:
        return cls(tuple(rows), tuple(cols), tuple(tuple(int(c) for c in r) for r in counts))

    def cell(self, actual: int, predicted: int) -> int:
        if actual not in self.rows or predicted not in self.cols:
            return 0
        return self.counts[self.rows.index(actual)][self.cols.index(predicted)]

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    def to_dict(self) -> dict:
        return {"rows": list(self.rows), "cols": list(self.cols),
                "counts": [list(r) for r in self.counts]}

    def to_text(self, title: str) -> str:
        width = max(len(title), 6)
        lines = [f"{title:<{width}}" + "".join(f"{c:>6}" for c in self.cols)]
        for label, row in zip(self.rows, self.counts):
            lines.append(f"{label:<{width}}" + "".join(f"{c:>6}" for c in row))
        return "\n".join(lines)


def confusion_matrix(actuals: Sequence[int], predictions: Sequence[int]) -> ConfusionMatrix:
    if len(actuals) != len(predictions):
        raise ValueError(f"length mismatch: {len(actuals)} actuals vs {len(predictions)} predictions")
    if not actuals:
        raise ValueError("empty input")
    pairs = Counter(zip(actuals, predictions))
    rows = sorted(set(actuals))
    cols = sorted(set(predictions))
    return ConfusionMatrix.from_rows(rows, cols, [[pairs[(a, p)] for p in cols] for a in rows])


def accuracy(matrix: ConfusionMatrix) -> tuple[int, int, float]:
    """(correct, total, fraction); correct sums cells whose labels agree."""
    total = matrix.total
    if total == 0:
        raise ValueError("empty confusion matrix")
    correct = sum(matrix.cell(c, c) for c in matrix.rows if c in matrix.cols)
    return correct, total, correct / total


def rmse(actuals: Sequence[float], predictions: Sequence[float]) -> float:
    if len(actuals) != len(predictions):
        raise ValueError(f"length mismatch: {len(actuals)} vs {len(predictions)}")
    if not actuals:
        raise ValueError("empty input")
    sq = [(a - p) ** 2 for a, p in zip(actuals, predictions)]
    if not all(math.isfinite(s) for s in sq):
        raise ValueError("non-finite value")
    return math.sqrt(math.fsum(sq) / len(sq))


@dataclass
class EvaluationReport:
    comparison: dict[str, float | None]
    confusion: dict[str, ConfusionMatrix | None]
    rmse: dict[str, dict[str, float] | None]
    provenance: dict
    missing: list[str]

    @property
    def complete(self) -> bool:
        return not self.missing

    def to_dict(self) -> dict:
        return {
            "format_version": REPORT_VERSION,
            "complete": self.complete,
            "missing": self.missing,
            "comparison": self.comparison,
            "confusion": {k: (None if v is None else v.to_dict()) for k, v in self.confusion.items()},
            "rmse": self.rmse,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_text(self) -> str:
        def fmt(v):
            return "absent" if v is None else f"{v:.3f}"

        keys = ["result_train", "result_test", "benchmark"]
        out = [
            "SVM accuracy comparison",
            f"{'prediction':<12}" + "".join(f"{k:>14}" for k in keys),
            f"{'accuracy':<12}" + "".join(f"{fmt(self.comparison.get(k)):>14}" for k in keys),
            "",
        ]
        for name, cm in self.confusion.items():
            if cm is None:
                out += [f"{name}: absent", ""]
                continue
            correct, total, frac = accuracy(cm)
            out += [cm.to_text(name), f"correct {correct}/{total} = {frac:.3f}", ""]
        for name, table in self.rmse.items():
            out.append(f"RMSE of {name} approach")
            if table is None:
                out += ["absent", ""]
                continue
            out.append(f"{'ID':<12}{'RMSE':>12}")
            out += [f"{user:<12}{value:>12.7f}" for user, value in sorted(table.items())]
            out.append("")
        if self.missing:
            out.append("incomplete: missing " + ", ".join(self.missing))
        return "\n".join(out) + "\n"


def build_report(
    *,
    train_matrix: ConfusionMatrix | None = None,
    test_matrix: ConfusionMatrix | None = None,
    train_accuracy: float | None = None,
    test_accuracy: float | None = None,
    benchmark_accuracy: float | None = None,
    rnn_rmse: Mapping[str, float] | None = None,
    naive_rmse: Mapping[str, float] | None = None,
    provenance: Mapping | None = None,
) -> EvaluationReport:
    """Assemble the report; absent components are listed in ``missing``.

    Accuracies default to those computed from the matrices.
    """
    if train_accuracy is None and train_matrix is not None:
        train_accuracy = accuracy(train_matrix)[2]
    if test_accuracy is None and test_matrix is not None:
        test_accuracy = accuracy(test_matrix)[2]
    comparison = {
        "result_train": train_accuracy,
        "result_test": test_accuracy,
        "benchmark": benchmark_accuracy,
    }
    for v in comparison.values():
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValueError(f"accuracy {v} outside [0, 1]")
    tables = {
        "RNN": None if rnn_rmse is None else dict(sorted(rnn_rmse.items())),
        "naive": None if naive_rmse is None else dict(sorted(naive_rmse.items())),
    }
    for table in tables.values():
        if table and any(v < 0 for v in table.values()):
            raise ValueError("negative RMSE")
    missing = [k for k, v in comparison.items() if v is None]
    missing += [f"confusion_{k}" for k, v in (("train", train_matrix), ("test", test_matrix)) if v is None]
    missing += [f"rmse_{k}" for k, v in tables.items() if v is None]
    return EvaluationReport(
        comparison=comparison,
        confusion={"results_train": train_matrix, "result_test": test_matrix},
        rmse=tables,
        provenance=dict(provenance or {}),
        missing=missing,
    )


def write_prediction_series(rows: Iterable[tuple], stream: IO[str]) -> None:
    """CSV of ``user, date, actual, predicted, model`` rows."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["user", "date", "actual", "predicted", "model"])
    for user, day, actual, predicted, model in rows:
        writer.writerow([user, str(day), repr(float(actual)), repr(float(predicted)), model])


def write_trace(trace: Sequence[float], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["epoch", "mse"])
    for epoch, mse in enumerate(trace, start=1):
        writer.writerow([epoch, repr(float(mse))])
