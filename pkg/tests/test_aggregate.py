import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from focustime.aggregate import (CSV_COLUMNS, aggregates_to_csv, linear_fit, quarter_metrics,
                                 utc_quarter)
from focustime.errors import ValidationError
from focustime.focus import FocusSession
from focustime.model import Event, make_session

from .oracles import closed_form_ols

MIN = 60_000
HOUR = 60 * MIN


def ts(*args):
    return int(datetime(*args, tzinfo=timezone.utc).timestamp() * 1000)


def session(actor, start, minutes, n=2):
    times = [start + round(k * minutes * MIN / (n - 1)) for k in range(n)] if n > 1 else [start]
    return make_session(actor, [Event(actor, "ide", "edit", t) for t in times])


def fs(actor, start, minutes):
    return FocusSession(actor, start, start + minutes * MIN, 0.1, 3)


def test_utc_quarters():
    assert utc_quarter(ts(2022, 3, 31, 23, 59)) == (2022, 1)
    assert utc_quarter(ts(2022, 4, 1)) == (2022, 2)
    assert utc_quarter(ts(2022, 12, 31, 12)) == (2022, 4)


def test_hours_share_and_days():
    # five active days, 96 session-minutes each, 40 focus minutes on three of them
    sessions = [session("a", ts(2022, 1, 3 + d, 9), 96) for d in range(5)]
    focus = [fs("a", ts(2022, 1, 3 + d, 9, 10), 40) for d in range(3)]
    (row,) = quarter_metrics(focus, sessions)
    assert (row.actor_id, row.quarter) == ("a", (2022, 1))
    assert row.hours_in_focus == 2.0
    assert row.total_session_hours == 8.0
    assert row.pct_time_in_focus == 0.25
    assert row.focus_session_count == 3
    assert row.pct_days_with_focus == 0.6
    assert (row.total_event_count, row.total_session_count) == (10, 5)
    assert not row.no_active_time


def test_no_focus_and_empty_quarters():
    # sessions in Q1 and Q3 only; nothing is emitted for the silent Q2
    sessions = [session("a", ts(2022, 2, 1, 9), 60), session("a", ts(2022, 8, 1, 9), 30, n=4)]
    rows = quarter_metrics([], sessions)
    assert [r.quarter for r in rows] == [(2022, 1), (2022, 3)]
    for r in rows:
        assert (r.hours_in_focus, r.pct_time_in_focus, r.focus_session_count,
                r.pct_days_with_focus) == (0.0, 0.0, 0, 0.0)
    assert rows[1].total_session_hours == 0.5 and rows[1].total_event_count == 4


def test_multi_day_focus_and_denominator_edges():
    sessions = [
        # crosses midnight into a new quarter
        session("a", ts(2022, 3, 31, 23, 0), 120),
        # two sessions the same day count as one active day
        session("a", ts(2022, 4, 5, 8), 60),
        session("a", ts(2022, 4, 5, 14), 60),
        # a single event: zero session time
        session("b", ts(2022, 5, 1, 9), 0, n=1),
    ]
    focus = [fs("a", ts(2022, 4, 1, 0, 10), 50), fs("a", ts(2022, 4, 5, 14, 0), 30)]
    rows = {(r.actor_id, r.quarter): r for r in quarter_metrics(focus, sessions)}
    q1, q2, b = rows["a", (2022, 1)], rows["a", (2022, 2)], rows["b", (2022, 2)]
    # the overnight focus belongs to the session that started on March 31
    assert q1.hours_in_focus == pytest.approx(50 / 60)
    assert q1.pct_time_in_focus == pytest.approx(50 / 120)
    assert q1.pct_days_with_focus == 1.0
    assert q2.hours_in_focus == 0.5 and q2.total_session_hours == 2.0
    assert q2.pct_time_in_focus == 0.25 and q2.pct_days_with_focus == 1.0
    assert q2.total_session_count == 2
    assert b.no_active_time and b.pct_time_in_focus == 0.0 and b.total_event_count == 1
    assert b.pct_days_with_focus == 0.0


def test_csv_layout():
    rows = quarter_metrics([fs("a", ts(2022, 1, 3, 9), 30)], [session("a", ts(2022, 1, 3, 9), 60)])
    lines = aggregates_to_csv(rows).splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1] == "a,2022Q1,0.5,0.5,1,1.0,1.0,2,1"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.integers(0, 400), st.integers(0, 300),
                          st.integers(1, 5), st.integers(0, 100)), min_size=1, max_size=30))
def test_additive_over_actor_partitions(items):
    base = ts(2022, 1, 1)
    sessions, focus = [], []
    for actor, day, minutes, n, focus_min in items:
        start = base + day * 24 * HOUR + 8 * HOUR
        s = session(actor, start, minutes, n=n if minutes else 1)
        sessions.append(s)
        if focus_min and s.length_ms:
            focus.append(FocusSession(actor, start, start + min(focus_min * MIN, s.length_ms), 0.1, 1))
    whole = quarter_metrics(focus, sessions)
    left = {"a", "b"}
    part = (quarter_metrics([f for f in focus if f.actor_id in left], [s for s in sessions if s.actor_id in left])
            + quarter_metrics([f for f in focus if f.actor_id not in left],
                              [s for s in sessions if s.actor_id not in left]))
    assert sorted(part, key=lambda r: (r.actor_id, r.quarter)) == whole
    for r in whole:
        assert 0.0 <= r.pct_time_in_focus <= 1.0 and 0.0 <= r.pct_days_with_focus <= 1.0
        assert r.hours_in_focus <= r.total_session_hours + 1e-12


def test_linear_fit_examples():
    x = np.arange(10.0)
    exact = linear_fit(x, 2 * x)
    assert exact.slope == 2.0 and exact.intercept == 0.0 and exact.p_value == 0.0
    flat = linear_fit(x, np.full(10, 3.0))
    assert flat.slope == 0.0 and flat.p_value == 1.0
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 10, 1000)
    noisy = linear_fit(x, 3 * x + 1 + rng.normal(0, 1, 1000))
    assert abs(noisy.slope - 3) <= 0.1 and noisy.p_value < 1e-12 and noisy.n == 1000


def test_linear_fit_errors():
    with pytest.raises(ValidationError):
        linear_fit([1, 2], [1, 2])
    with pytest.raises(ValidationError):
        linear_fit([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValidationError):
        linear_fit([1, 2, 3], [1, 2])


@pytest.mark.parametrize("seed", range(20))
def test_linear_fit_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 200))
    x = rng.normal(size=n) * rng.uniform(0.1, 100)
    y = rng.uniform(-5, 5) * x + rng.normal(size=n) * rng.uniform(0.01, 10)
    fit = linear_fit(x, y)
    slope, intercept, t, se = closed_form_ols(x, y)
    assert math.isclose(fit.slope, slope, rel_tol=1e-9)
    assert math.isclose(fit.intercept, intercept, rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(fit.t_stat, t, rel_tol=1e-9)
    assert math.isclose(fit.p_value, stats.linregress(x, y).pvalue, rel_tol=1e-6, abs_tol=1e-300)
