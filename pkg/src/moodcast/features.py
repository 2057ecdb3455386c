"""Supervised examples for next-day mood and the holdout splits."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import date
from fractions import Fraction
from typing import Sequence, TypeVar

import numpy as np

from .ingest import MOOD, UserDayTable
from .preprocess import ScalingParams

logger = logging.getLogger(__name__)

MIN_CLASS, MAX_CLASS = 1, 10
GLOBAL_RANDOM = "global-random"
PER_USER_CHRONOLOGICAL = "per-user-chronological"

E = TypeVar("E", "ClassificationExample", "SequenceExample")


class SplitError(ValueError):
    pass


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def mood_class(x: float) -> int:
    """Integer mood class of a (fractional) daily mean, clamped to 1..10."""
    return min(MAX_CLASS, max(MIN_CLASS, round_half_up(x)))


@dataclass(frozen=True)
class ClassificationExample:
    features: tuple[float, ...]
    target_class: int
    user_id: str
    target_date: date


@dataclass(frozen=True)
class SequenceExample:
    inputs: np.ndarray  # (seq_len, n_variables), scaled to [0, 1]
    target: float
    user_id: str
    target_date: date
    has_gap: bool = False  # window or target skips calendar days


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float
    mode: str = GLOBAL_RANDOM
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.mode not in (GLOBAL_RANDOM, PER_USER_CHRONOLOGICAL):
            raise ValueError(f"unknown split mode {self.mode!r}")


def rolling_mean(series: Sequence[float], window: int) -> list[float]:
    """Trailing mean over at most ``window`` values (shorter at the head)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    out = []
    for i in range(len(series)):
        chunk = series[max(0, i - window + 1): i + 1]
        out.append(math.fsum(chunk) / len(chunk))
    return out


def feature_names(table: UserDayTable, window: int = 5, mood: str = MOOD) -> list[str]:
    return [*table.variables, f"{mood}_mean_{window}d"]


def build_classification_examples(
    table: UserDayTable, window: int = 5, mood: str = MOOD
) -> list[ClassificationExample]:
    """Day-t variable means plus the trailing mood mean, labelled with the
    integer class of mood on the next retained day."""
    if mood not in table.variables:
        raise ValueError(f"table has no {mood!r} variable")
    examples = []
    for user, per_user in table.days.items():
        dates = list(per_user)
        if len(dates) < 2:
            logger.warning("user %s has fewer than 2 days; no examples", user)
            continue
        moods = [per_user[d][mood].mean for d in dates]
        trailing = rolling_mean(moods, window)
        for t in range(len(dates) - 1):
            cells = per_user[dates[t]]
            feats = tuple(cells[v].mean for v in table.variables) + (trailing[t],)
            examples.append(
                ClassificationExample(feats, mood_class(moods[t + 1]), user, dates[t + 1])
            )
    return examples


def build_sequence_examples(
    table: UserDayTable,
    params: ScalingParams | dict[str, ScalingParams],
    seq_len: int = 5,
    mood: str = MOOD,
) -> dict[str, list[SequenceExample]]:
    """Sliding windows of ``seq_len`` retained days, target = scaled mood of
    the following retained day.

    ``params`` is either one set of scaling parameters or a per-user mapping.
    """
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    out: dict[str, list[SequenceExample]] = {}
    short = []
    for user, per_user in table.days.items():
        p = params[user] if isinstance(params, dict) else params
        dates = list(per_user)
        matrix = np.array(
            [[p.scale(v, per_user[d][v].mean) for v in table.variables] for d in dates],
            dtype=float,
        ).reshape(len(dates), len(table.variables))
        targets = [p.scale(mood, per_user[d][mood].mean) for d in dates]
        examples = []
        for start in range(len(dates) - seq_len):
            end = start + seq_len  # index of target day
            span = dates[start: end + 1]
            gap = any((b - a).days != 1 for a, b in zip(span, span[1:]))
            examples.append(
                SequenceExample(matrix[start:end].copy(), targets[end], user, dates[end], gap)
            )
        if not examples:
            short.append(user)
        out[user] = examples
    if short:
        logger.warning("users with <= %d days yield no sequences: %s", seq_len, ", ".join(short))
    return out


def holdout_size(n: int, fraction: float) -> int:
    # decimal arithmetic: 5 * 0.3 must round to 2, not to 1 via 1.4999...
    return math.floor(n * Fraction(str(fraction)) + Fraction(1, 2))


def split_holdout(examples: Sequence[E], spec: SplitSpec) -> tuple[list[E], list[E]]:
    """Partition examples into (train, test), preserving input order within each side."""
    if not examples:
        raise SplitError("nothing to split")
    n = len(examples)
    if spec.mode == GLOBAL_RANDOM:
        k = holdout_size(n, spec.test_fraction)
        if k == 0 or k == n:
            raise SplitError(f"global pool of {n} gives {n - k} train / {k} test")
        order = np.random.default_rng(spec.seed).permutation(n)
        test_idx = set(order[:k].tolist())
    else:
        by_user: dict[str, list[int]] = defaultdict(list)
        for i, ex in enumerate(examples):
            by_user[ex.user_id].append(i)
        test_idx = set()
        for user, idx in by_user.items():
            idx = sorted(idx, key=lambda i: examples[i].target_date)
            k = holdout_size(len(idx), spec.test_fraction)
            if k == 0 or k == len(idx):
                raise SplitError(
                    f"user {user}: {len(idx)} examples give {len(idx) - k} train / {k} test"
                )
            test_idx.update(idx[-k:])
    train = [ex for i, ex in enumerate(examples) if i not in test_idx]
    test = [ex for i, ex in enumerate(examples) if i in test_idx]
    return train, test
