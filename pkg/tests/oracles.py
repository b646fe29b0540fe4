"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here is vectorised; each function follows the definition literally
so optimized code in the package can be checked against it.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


class TableDistance:
    """Stand-in model whose distances come from an explicit pair table."""

    def __init__(self, pairs: dict[tuple[str, str], float]):
        self.table = {}
        for (a, b), d in pairs.items():
            self.table[a, b] = self.table[b, a] = d
        self.labels = sorted({w for pair in pairs for w in pair})

    def __contains__(self, label):
        return label in self.labels

    def distance(self, a, b):
        return 0.0 if a == b else self.table[a, b]

    def distance_matrix(self, labels):
        return np.array([[self.distance(a, b) for b in labels] for a in labels])


def brute_focus_value(window_events, dist, buffer_ms):
    """Weighted mean pairwise distance over unordered pairs of distinct events."""
    if len(window_events) == 1:
        return 0.0
    num = den = 0.0
    for (la, da), (lb, db) in itertools.combinations(window_events, 2):
        w = (da + buffer_ms) * (db + buffer_ms)
        num += w * dist(la, lb)
        den += w
    return num / den


def brute_windows(session, dist, window_ms, buffer_ms):
    """Every event-anchored window of one session as (start, members, value)."""
    out = []
    for anchor in session.events:
        t = anchor.start_ms
        members = [j for j, e in enumerate(session.events) if t <= e.start_ms < t + window_ms]
        evs = [(session.events[j].label, session.events[j].duration_ms) for j in members]
        out.append((t, members, brute_focus_value(evs, dist, buffer_ms)))
    return out


def brute_event_values(session, dist, window_ms, buffer_ms):
    """Each event takes the value of the earliest window that contains it."""
    windows = brute_windows(session, dist, window_ms, buffer_ms)
    values = []
    for j in range(len(session.events)):
        for _, members, v in windows:
            if j in members:
                values.append(v)
                break
    return values


def brute_focus_sessions(sessions, dist, params):
    """Focus sessions as (actor, start, end, mean_value, event_count) tuples."""
    out = []
    for s in sessions:
        windows = brute_windows(s, dist, params.window_ms, params.buffer_ms)
        runs = []
        current = None
        prev_start = None
        for t, members, v in windows:
            if v <= params.threshold:
                if current is not None and t - prev_start <= params.merge_gap_ms:
                    current.append((t, members, v))
                else:
                    current = [(t, members, v)]
                    runs.append(current)
            else:
                current = None
            prev_start = t
        for k, run in enumerate(runs):
            start = run[0][0]
            end = min(run[-1][0] + params.window_ms, s.end_ms)
            events = set().union(*(set(m) for _, m, _ in run))
            if k + 1 < len(runs):
                # the next run takes over where it begins
                nxt_start, nxt_members, _ = runs[k + 1][0]
                end = min(end, nxt_start)
                events = {j for j in events if j < min(nxt_members)}
            values = [v for _, _, v in run]
            if end > start:
                out.append((s.actor_id, start, end, sum(values) / len(values), len(events)))
    return out


def brute_pabak(predicted, actual):
    agree = sum(p == a for p, a in zip(predicted, actual))
    return 2 * agree / len(predicted) - 1


def closed_form_ols(x, y):
    """Normal equations solved directly, with the textbook slope t test."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    X = np.column_stack([np.ones_like(x), x])
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    resid = y - X @ beta
    n = len(x)
    sigma2 = float(resid @ resid) / (n - 2)
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = math.sqrt(cov[1, 1])
    return float(beta[1]), float(beta[0]), float(beta[1] / se), se
