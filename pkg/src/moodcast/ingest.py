"""Raw long-format sensing logs: parsing and daily pivoting.

The raw export has one observation per row::

    id,time,variable,value
    AS14.01,2014-02-26 13:00:00.000,mood,6
    AS14.01,2014-02-26 14:00:00.000,screen,NA

An optional leading unnamed index column (as written by data-frame
exporters) is accepted and ignored.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import IO, Iterable

logger = logging.getLogger(__name__)

COLUMNS = ("id", "time", "variable", "value")
NA_TOKENS = frozenset({"", "NA"})
MOOD = "mood"


class ParseError(ValueError):
    """Raised in strict mode when one or more rows are malformed."""

    def __init__(self, diagnostics: list[Diagnostic]) -> None:
        self.diagnostics = diagnostics
        lines = "; ".join(str(d) for d in diagnostics[:10])
        more = f" (+{len(diagnostics) - 10} more)" if len(diagnostics) > 10 else ""
        super().__init__(f"{len(diagnostics)} malformed row(s): {lines}{more}")


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class ObservationRecord:
    user_id: str
    timestamp: datetime
    variable: str
    value: float | None

    def __post_init__(self) -> None:
        if not self.user_id or not self.variable:
            raise ValueError("user_id and variable must be non-empty")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError(f"non-finite value {self.value!r}")


@dataclass(frozen=True)
class DailyCell:
    """Daily aggregate of one variable; ``count == 0`` marks an imputed cell."""

    mean: float
    count: int


@dataclass
class UserDayTable:
    """Per-user ordered days, each mapping variable name to its :class:`DailyCell`.

    ``days[user][date][variable]``. Dates are kept in ascending order and
    ``variables`` is the registry of every variable that may appear in a cell.
    """

    variables: list[str] = field(default_factory=list)
    days: dict[str, dict[date, dict[str, DailyCell]]] = field(default_factory=dict)

    @property
    def users(self) -> list[str]:
        return list(self.days)

    def dates(self, user: str) -> list[date]:
        return list(self.days[user])

    def series(self, user: str, variable: str) -> list[float | None]:
        out = []
        for cells in self.days[user].values():
            cell = cells.get(variable)
            out.append(None if cell is None else cell.mean)
        return out

    def subset(self, users: Iterable[str]) -> UserDayTable:
        keep = set(users)
        return UserDayTable(
            variables=list(self.variables),
            days={u: d for u, d in self.days.items() if u in keep},
        )

    def n_days(self) -> int:
        return sum(len(d) for d in self.days.values())

    def validate(self) -> None:
        registry = set(self.variables)
        for user, days in self.days.items():
            dates = list(days)
            if any(a >= b for a, b in zip(dates, dates[1:])):
                raise ValueError(f"dates not strictly increasing for {user}")
            for day, cells in days.items():
                for var, cell in cells.items():
                    if var not in registry:
                        raise ValueError(f"{user} {day}: unregistered variable {var!r}")
                    if not math.isfinite(cell.mean) or cell.count < 0:
                        raise ValueError(f"{user} {day} {var}: invalid cell {cell}")


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if not text:
        raise ValueError("empty timestamp")
    return datetime.fromisoformat(text)


def parse_value(text: str) -> float | None:
    text = text.strip()
    if text in NA_TOKENS:
        return None
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def parse_records(
    stream: IO[str] | Iterable[str],
    *,
    strict: bool = True,
    diagnostics: list[Diagnostic] | None = None,
) -> list[ObservationRecord]:
    """Parse raw CSV rows into records, in file order.

    In strict mode any malformed row raises :class:`ParseError` listing every
    diagnostic. In lenient mode malformed rows are skipped; their diagnostics
    are appended to ``diagnostics`` when a list is given.
    """
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError([Diagnostic(1, "missing header row")]) from None

    offset = 0
    if len(header) == len(COLUMNS) + 1 and header[0] == "":
        offset = 1
    if tuple(header[offset:]) != COLUMNS:
        raise ParseError([Diagnostic(1, f"expected header {','.join(COLUMNS)}, got {','.join(header)}")])
    width = len(COLUMNS) + offset

    records: list[ObservationRecord] = []
    problems: list[Diagnostic] = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != width:
            problems.append(Diagnostic(line, f"expected {width} columns, got {len(row)}"))
            continue
        user, stamp, variable, raw = (c.strip() for c in row[offset:])
        try:
            ts = parse_timestamp(stamp)
        except ValueError:
            problems.append(Diagnostic(line, f"unparseable timestamp {stamp!r}"))
            continue
        try:
            value = parse_value(raw)
        except ValueError:
            problems.append(Diagnostic(line, f"non-numeric value {raw!r}"))
            continue
        if not user or not variable:
            problems.append(Diagnostic(line, "empty id or variable"))
            continue
        records.append(ObservationRecord(user, ts, variable, value))

    if problems:
        if strict:
            raise ParseError(problems)
        logger.warning("skipped %d malformed row(s)", len(problems))
        if diagnostics is not None:
            diagnostics.extend(problems)
    return records


def pivot_daily(records: Iterable[ObservationRecord]) -> UserDayTable:
    """Average present values per (user, calendar date, variable).

    Users and variables are ordered by name, dates ascending, so the result
    does not depend on record order. Days where nothing was observed are
    omitted.
    """
    values: dict[str, dict[date, dict[str, list[float]]]] = defaultdict(
        lambda: defaultdict(lambda: defaultdict(list))
    )
    variables: set[str] = set()
    for rec in records:
        variables.add(rec.variable)
        if rec.value is None:
            continue
        values[rec.user_id][rec.timestamp.date()][rec.variable].append(rec.value)

    days: dict[str, dict[date, dict[str, DailyCell]]] = {}
    for user in sorted(values):
        per_day = values[user]
        days[user] = {
            day: {
                var: DailyCell(math.fsum(vals) / len(vals), len(vals))
                for var, vals in sorted(per_day[day].items())
            }
            for day in sorted(per_day)
        }
    return UserDayTable(variables=sorted(variables), days=days)
