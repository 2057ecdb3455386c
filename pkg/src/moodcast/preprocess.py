"""Coverage pruning, forward filling and min-max scaling of daily tables."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import IO

from .ingest import MOOD, DailyCell, UserDayTable

logger = logging.getLogger(__name__)


class MissingTargetError(ValueError):
    """The mood variable is absent, so there is nothing to predict."""


class FillError(ValueError):
    """A retained variable was never observed for some user."""


@dataclass(frozen=True)
class PruneConfig:
    min_variable_coverage: float = 0.6
    min_day_coverage: float = 0.8
    require_mood: bool = True
    mood: str = MOOD

    def __post_init__(self) -> None:
        for name in ("min_variable_coverage", "min_day_coverage"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def variable_coverage(table: UserDayTable) -> dict[str, float]:
    """Share of all (user, day) rows on which each variable has a cell."""
    total = table.n_days()
    present = dict.fromkeys(table.variables, 0)
    for days in table.days.values():
        for cells in days.values():
            for var in cells:
                present[var] += 1
    return {v: (present[v] / total if total else 0.0) for v in table.variables}


def prune_variables(table: UserDayTable, config: PruneConfig = PruneConfig()) -> UserDayTable:
    """Drop variables whose pooled day coverage is below the threshold.

    Mood is always kept. Raises :class:`MissingTargetError` when mood never
    has a value.
    """
    coverage = variable_coverage(table)
    if coverage.get(config.mood, 0.0) == 0.0:
        raise MissingTargetError(f"target variable {config.mood!r} has no observations")
    keep = [
        v for v in table.variables
        if v == config.mood or coverage[v] >= config.min_variable_coverage
    ]
    dropped = [v for v in table.variables if v not in keep]
    if dropped:
        logger.info("pruned variables: %s", ", ".join(dropped))
    kept = set(keep)
    days = {
        user: {day: {v: c for v, c in cells.items() if v in kept} for day, cells in per_user.items()}
        for user, per_user in table.days.items()
    }
    return UserDayTable(variables=keep, days=days)


def prune_days(
    table: UserDayTable, config: PruneConfig = PruneConfig()
) -> tuple[UserDayTable, list[str]]:
    """Per user, drop days without mood and days with too few variables.

    Returns the pruned table and the users left with no days (removed).
    """
    n_vars = len(table.variables)
    days: dict[str, dict[date, dict[str, DailyCell]]] = {}
    emptied: list[str] = []
    for user, per_user in table.days.items():
        kept = {}
        for day, cells in per_user.items():
            if config.require_mood and config.mood not in cells:
                continue
            fraction = len(cells) / n_vars if n_vars else 1.0
            if fraction < config.min_day_coverage:
                continue
            kept[day] = dict(cells)
        if kept:
            days[user] = kept
        else:
            emptied.append(user)
    if emptied:
        logger.warning("users left without days: %s", ", ".join(emptied))
    return UserDayTable(variables=list(table.variables), days=days), emptied


def forward_fill(table: UserDayTable) -> UserDayTable:
    """Fill every missing (user, day, variable) cell from the previous day.

    Leading gaps take the user's first observed value. Filled cells carry
    ``count == 0``.
    """
    days: dict[str, dict[date, dict[str, DailyCell]]] = {
        user: {day: dict(cells) for day, cells in per_user.items()}
        for user, per_user in table.days.items()
    }
    for user, per_user in days.items():
        for var in table.variables:
            first = next((c.mean for c in (cells.get(var) for cells in per_user.values()) if c), None)
            if first is None:
                raise FillError(f"variable {var!r} never observed for user {user}")
            last = first
            for cells in per_user.values():
                cell = cells.get(var)
                if cell is None:
                    cells[var] = DailyCell(last, 0)
                else:
                    last = cell.mean
        for day, cells in per_user.items():
            per_user[day] = {v: cells[v] for v in table.variables}
    return UserDayTable(variables=list(table.variables), days=days)


def is_complete(table: UserDayTable) -> bool:
    return all(
        var in cells
        for per_user in table.days.values()
        for cells in per_user.values()
        for var in table.variables
    )


def apply_scaling(x: float, lo: float, hi: float) -> float:
    """Min-max map onto [0, 1]; out-of-range values clamp, constants map to 0.5."""
    if hi <= lo:
        return 0.5
    y = (x - lo) / (hi - lo)
    return min(1.0, max(0.0, y))


def inverse_scaling(y: float, lo: float, hi: float) -> float:
    if hi <= lo:
        return lo
    return lo + y * (hi - lo)


@dataclass
class ScalingParams:
    bounds: dict[str, tuple[float, float]]
    clipped: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        for var, (lo, hi) in self.bounds.items():
            if lo > hi:
                raise ValueError(f"{var}: min {lo} exceeds max {hi}")

    def scale(self, variable: str, x: float) -> float:
        lo, hi = self.bounds[variable]
        if hi > lo and not lo <= x <= hi:
            self.clipped += 1
        return apply_scaling(x, lo, hi)

    def unscale(self, variable: str, y: float) -> float:
        lo, hi = self.bounds[variable]
        return inverse_scaling(y, lo, hi)

    def to_dict(self) -> dict[str, list[float]]:
        return {v: [lo, hi] for v, (lo, hi) in self.bounds.items()}

    @classmethod
    def from_dict(cls, data: dict[str, list[float]]) -> ScalingParams:
        return cls({v: (float(lo), float(hi)) for v, (lo, hi) in data.items()})


def fit_scaling(table: UserDayTable, variables: list[str] | None = None) -> ScalingParams:
    """Per-variable min and max over every user and day of a complete table."""
    variables = list(table.variables if variables is None else variables)
    bounds = {}
    for var in variables:
        vals = [
            cells[var].mean
            for per_user in table.days.values()
            for cells in per_user.values()
            if var in cells
        ]
        if not vals:
            raise ValueError(f"no values for {var!r}")
        bounds[var] = (min(vals), max(vals))
    return ScalingParams(bounds)


def preprocess(
    table: UserDayTable, config: PruneConfig = PruneConfig()
) -> tuple[UserDayTable, list[str]]:
    """prune_variables -> prune_days -> forward_fill. Returns the complete table
    and the users removed for lack of usable days."""
    pruned = prune_variables(table, config)
    pruned, emptied = prune_days(pruned, config)
    return forward_fill(pruned), emptied


def _fmt(x: float) -> str:
    return repr(float(x))


def write_wide_csv(table: UserDayTable, stream: IO[str], what: str = "mean") -> None:
    """One row per (user, date), one column per variable.

    ``what`` selects ``mean`` (values, empty when missing), ``imputed``
    (1 for filled cells, else 0) or ``count`` (observations behind the cell).
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["id", "date", *table.variables])
    for user, per_user in table.days.items():
        for day, cells in per_user.items():
            row = []
            for var in table.variables:
                cell = cells.get(var)
                if what == "mean":
                    row.append("" if cell is None else _fmt(cell.mean))
                elif what == "imputed":
                    row.append("" if cell is None else str(int(cell.count == 0)))
                elif what == "count":
                    row.append("" if cell is None else str(cell.count))
                else:
                    raise ValueError(f"unknown column kind {what!r}")
            writer.writerow([user, day.isoformat(), *row])


def read_wide_csv(values: IO[str], counts: IO[str]) -> UserDayTable:
    """Inverse of :func:`write_wide_csv` given the ``mean`` and ``count`` files."""
    vrows = list(csv.reader(values))
    crows = list(csv.reader(counts))
    if not vrows or vrows[0] != crows[0]:
        raise ValueError("value and count files have different headers")
    variables = vrows[0][2:]
    days: dict[str, dict[date, dict[str, DailyCell]]] = {}
    for vrow, crow in zip(vrows[1:], crows[1:]):
        if vrow[:2] != crow[:2]:
            raise ValueError(f"row mismatch: {vrow[:2]} vs {crow[:2]}")
        user, day = vrow[0], date.fromisoformat(vrow[1])
        days.setdefault(user, {})[day] = {
            var: DailyCell(float(v), int(c))
            for var, v, c in zip(variables, vrow[2:], crow[2:])
            if v != ""
        }
    table = UserDayTable(variables=variables, days=days)
    table.validate()
    return table
