"""Quarterly roll-ups of focus sessions and a single-predictor OLS fit."""

from __future__ import annotations

import bisect
import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import ValidationError
from .model import Session

HOUR_MS = 3_600_000

Quarter = tuple[int, int]

CSV_COLUMNS = ("actor", "quarter", "hours_in_focus", "pct_time_in_focus", "focus_session_count",
               "pct_days_with_focus", "total_session_hours", "total_event_count",
               "total_session_count")


def utc_day(ts_ms: int):
    return datetime.fromtimestamp(ts_ms / 1000.0, tz=timezone.utc).date()


def utc_quarter(ts_ms: int) -> Quarter:
    d = utc_day(ts_ms)
    return d.year, (d.month - 1) // 3 + 1


@dataclass(frozen=True)
class QuarterAggregate:
    actor_id: str
    quarter: Quarter
    hours_in_focus: float
    pct_time_in_focus: float
    focus_session_count: int
    pct_days_with_focus: float
    total_session_hours: float
    total_event_count: int
    total_session_count: int
    no_active_time: bool = False

    @property
    def quarter_label(self) -> str:
        return f"{self.quarter[0]}Q{self.quarter[1]}"

    def row(self) -> list:
        return [self.actor_id, self.quarter_label, repr(self.hours_in_focus),
                repr(self.pct_time_in_focus), self.focus_session_count,
                repr(self.pct_days_with_focus), repr(self.total_session_hours),
                self.total_event_count, self.total_session_count]


def quarter_metrics(focus_sessions, sessions: Sequence[Session],
                    calendar: Callable[[int], Quarter] = utc_quarter,
                    day_of: Callable[[int], object] = utc_day) -> list[QuarterAggregate]:
    """Per (actor, quarter) totals, keyed by the start time of each session.

    A focus session is credited to the day and quarter in which its enclosing
    activity session starts, so focus time never lands in a quarter without
    the session time that holds it. Active days are days with at least one
    activity session start; the %-days metric counts the active days whose
    sessions contain a focus session.
    """
    sess_ms = defaultdict(int)
    events = defaultdict(int)
    n_sess = defaultdict(int)
    active_days = defaultdict(set)
    for s in sessions:
        key = (s.actor_id, calendar(s.start_ms))
        sess_ms[key] += s.length_ms
        events[key] += len(s)
        n_sess[key] += 1
        active_days[key].add(day_of(s.start_ms))

    starts_by_actor = defaultdict(list)
    for s in sessions:
        starts_by_actor[s.actor_id].append(s.start_ms)
    for v in starts_by_actor.values():
        v.sort()

    focus_ms = defaultdict(int)
    n_focus = defaultdict(int)
    focus_days = defaultdict(set)
    for f in focus_sessions:
        anchor = _enclosing_start(starts_by_actor.get(f.actor_id, ()), f.start_ms)
        key = (f.actor_id, calendar(anchor))
        focus_ms[key] += f.end_ms - f.start_ms
        n_focus[key] += 1
        focus_days[key].add(day_of(anchor))

    out = []
    for key in sorted(set(sess_ms) | set(focus_ms)):
        actor, quarter = key
        total = sess_ms.get(key, 0)
        days = active_days.get(key, set())
        empty = total <= 0
        out.append(QuarterAggregate(
            actor_id=actor,
            quarter=quarter,
            hours_in_focus=focus_ms.get(key, 0) / HOUR_MS,
            pct_time_in_focus=0.0 if empty else focus_ms.get(key, 0) / total,
            focus_session_count=n_focus.get(key, 0),
            pct_days_with_focus=len(days & focus_days.get(key, set())) / len(days) if days else 0.0,
            total_session_hours=total / HOUR_MS,
            total_event_count=events.get(key, 0),
            total_session_count=n_sess.get(key, 0),
            no_active_time=empty,
        ))
    return out


def _enclosing_start(starts, t: int) -> int:
    """Start of the latest session beginning at or before ``t``, else ``t``."""
    k = bisect.bisect_right(starts, t)
    return starts[k - 1] if k else t


def aggregates_to_csv(rows: Sequence[QuarterAggregate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    t_stat: float
    p_value: float
    n: int
    stderr: float = float("nan")

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "t_stat": self.t_stat,
                "p_value": self.p_value, "n": self.n, "stderr": self.stderr}


def linear_fit(x: Sequence[float], y: Sequence[float]) -> FitResult:
    """Ordinary least squares ``y ~ intercept + slope * x`` with a two-sided t test."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("x and y must be 1-d and of equal length")
    n = len(x)
    if n < 3:
        raise ValidationError("linear_fit needs at least 3 points")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValidationError("x has zero variance")
    slope = float(dx @ (y - ym)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - intercept - slope * x
    dof = n - 2
    se = math.sqrt(float(resid @ resid) / dof / sxx)
    if se > 0:
        t = slope / se
        p = float(2.0 * stats.t.sf(abs(t), dof))
    elif slope == 0.0:
        t, p = 0.0, 1.0
    else:
        t, p = math.copysign(math.inf, slope), 0.0
    return FitResult(slope, intercept, float(t), min(max(p, 0.0), 1.0), n, se)
