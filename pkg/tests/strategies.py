from datetime import date, timedelta

from hypothesis import strategies as st

from moodcast.ingest import DailyCell, UserDayTable

VARS = ["a", "b", "c", "mood"]
values = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)


@st.composite
def tables(draw, max_users=4, max_days=12, fillable=False):
    """Random UserDayTables over VARS.

    With ``fillable`` every (user, variable) is observed at least once, so
    forward filling is defined.
    """
    n_users = draw(st.integers(1, max_users))
    days = {}
    for u in range(n_users):
        n = draw(st.integers(1, max_days))
        offsets = sorted(draw(st.sets(st.integers(0, 40), min_size=n, max_size=n)))
        per_user = {}
        for off in offsets:
            cells = {}
            for var in VARS:
                if draw(st.booleans()):
                    cells[var] = DailyCell(draw(values), draw(st.integers(1, 4)))
            per_user[date(2014, 2, 26) + timedelta(days=off)] = cells
        if fillable:
            first = next(iter(per_user.values()))
            for var in VARS:
                if not any(var in c for c in per_user.values()):
                    first[var] = DailyCell(draw(values), 1)
        days[f"AS14.{u + 1:02d}"] = per_user
    return UserDayTable(variables=list(VARS), days=days)
