"""Persistence benchmark: tomorrow's mood equals today's."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Sequence

from .features import mood_class

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NaivePrediction:
    user_id: str
    target_date: date
    predicted: float
    actual: float


def predict_naive(series: Sequence[tuple[date, float]], user_id: str = "") -> list[NaivePrediction]:
    """One prediction per day after the first, from the preceding day's mood."""
    if len(series) < 2:
        logger.warning("series for %r has fewer than 2 days; no predictions", user_id)
        return []
    return [
        NaivePrediction(user_id, day, prev, mood)
        for (_, prev), (day, mood) in zip(series, series[1:])
    ]


def naive_class_accuracy(series_list: Iterable[Sequence[tuple[date, float]]]) -> float:
    """Share of persistence predictions landing in the actual mood class, pooled."""
    hits = total = 0
    for series in series_list:
        for p in predict_naive(series):
            hits += mood_class(p.predicted) == mood_class(p.actual)
            total += 1
    if total == 0:
        raise ValueError("no predictions to score")
    return hits / total
