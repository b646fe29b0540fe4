"""Windowed focus values and focus-session stitching.

The focus value of a window of events is the weighted mean of pairwise label
distances over unordered pairs of distinct events, each pair weighted by
``(|e| + B) * (|f| + B)`` where ``|e|`` is the event duration and ``B`` a
small buffer. Values lie in ``[0, 1]``; 0 means every co-windowed pair shares
an embedding direction.

Because label distance has a zero diagonal, the numerator only depends on the
per-label weight totals ``a``: it equals ``a @ D @ a / 2``. The denominator is
``((sum w)**2 - sum w**2) / 2``. Windows are evaluated in bulk from prefix
sums of those quantities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embedding import EmbeddingModel
from .errors import ConfigError, DegenerateWindowError
from .model import Event, Session

MINUTE_MS = 60_000
OOV_DISTANCE = 0.5


@dataclass(frozen=True)
class FocusParams:
    window_ms: int = 60 * MINUTE_MS
    buffer_ms: float = 10.0
    threshold: float = 0.2
    merge_gap_ms: int = 10 * MINUTE_MS

    def __post_init__(self):
        if self.window_ms <= 0:
            raise ConfigError("window must be positive")
        if self.buffer_ms < 0:
            raise ConfigError("buffer must be non-negative")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")
        if self.merge_gap_ms < 0:
            raise ConfigError("merge_gap must be non-negative")


@dataclass(frozen=True)
class FocusWindow:
    actor_id: str
    anchor_event_index: int
    start_ms: int
    end_ms: int
    first_event: int
    stop_event: int
    value: float
    session_start_ms: int
    session_end_ms: int

    @property
    def event_count(self) -> int:
        return self.stop_event - self.first_event

    def events(self, session: Session) -> tuple[Event, ...]:
        return session.events[self.first_event:self.stop_event]


@dataclass(frozen=True)
class ScoredEvent:
    event: Event
    focus_value: float


@dataclass(frozen=True)
class FocusSession:
    actor_id: str
    start_ms: int
    end_ms: int
    mean_value: float
    event_count: int

    @property
    def length_ms(self) -> int:
        return self.end_ms - self.start_ms

    def to_json(self) -> dict:
        return {
            "actor": self.actor_id,
            "start_ms": self.start_ms,
            "end_ms": self.end_ms,
            "mean_value": self.mean_value,
            "event_count": self.event_count,
        }


def label_distances(model: EmbeddingModel, labels: Sequence[str]) -> np.ndarray:
    """Distance matrix over ``labels`` (distinct), tolerating unknown labels.

    Unknown labels sit at 0.5 from every other label and 0 from themselves.
    """
    known = [i for i, w in enumerate(labels) if w in model]
    dist = np.full((len(labels), len(labels)), OOV_DISTANCE)
    if known:
        sub = model.distance_matrix([labels[i] for i in known])
        dist[np.ix_(known, known)] = sub
    np.fill_diagonal(dist, 0.0)
    return dist


def _encode(labels: Iterable[str]) -> tuple[np.ndarray, list[str]]:
    lookup: dict[str, int] = {}
    codes = [lookup.setdefault(w, len(lookup)) for w in labels]
    return np.asarray(codes, dtype=np.int64), list(lookup)


def focus_value(window_events: Sequence[tuple[str, float]], model: EmbeddingModel,
                buffer_ms: float = 10.0) -> float:
    """Focus value of one window given ``(label, duration_ms)`` pairs."""
    if not window_events:
        raise ConfigError("window has no events")
    if len(window_events) == 1:
        return 0.0
    codes, uniq = _encode(w for w, _ in window_events)
    w = np.array([d for _, d in window_events], dtype=np.float64) + buffer_ms
    if np.any(w < 0):
        raise ConfigError("negative duration in window")
    dist = label_distances(model, uniq)
    a = np.bincount(codes, weights=w, minlength=len(uniq))
    num = 0.5 * float(a @ dist @ a)
    # sum over unordered pairs of w_i * w_j without cancellation
    before = np.concatenate(([0.0], np.cumsum(w)[:-1]))
    den = float(w @ before)
    if den <= 0.0:
        raise DegenerateWindowError("all pair weights are zero; use a positive buffer")
    return float(min(max(num / den, 0.0), 1.0))


_CHUNK_EVENTS = 40_000


class FocusScorer:
    """Scores many sessions against one model; reusable across parameters.

    Events of all sessions are laid end to end on a single time axis where
    each session is shifted far enough from its neighbours that no window can
    reach across a session boundary.
    """

    def __init__(self, sessions: Sequence[Session], model: EmbeddingModel):
        self.model = model
        self.sessions = list(sessions)
        for s in self.sessions:
            if s.events[0].duration_ms is None:
                raise ConfigError("session durations have not been derived")
        self.actors = [s.actor_id for s in self.sessions]
        sizes = np.array([len(s) for s in self.sessions], dtype=np.int64)
        self.offsets = np.zeros(len(sizes) + 1, dtype=np.int64)
        np.cumsum(sizes, out=self.offsets[1:])
        self.session_of = np.repeat(np.arange(len(sizes)), sizes)
        self.starts = np.fromiter((e.start_ms for s in self.sessions for e in s.events),
                                  dtype=np.int64, count=int(self.offsets[-1]))
        self.durations = np.fromiter((e.duration_ms for s in self.sessions for e in s.events),
                                     dtype=np.float64, count=int(self.offsets[-1]))
        self.codes, self.labels = _encode(e.label for s in self.sessions for e in s.events)
        self.dist = label_distances(model, self.labels)
        self.session_start = np.array([s.start_ms for s in self.sessions], dtype=np.int64)
        self.session_end = np.array([s.end_ms for s in self.sessions], dtype=np.int64)
        self._cache: dict[tuple[int, float], tuple] = {}
        self._moment_cache = None

    def __len__(self) -> int:
        return len(self.starts)

    def _axis(self, window_ms: int) -> np.ndarray:
        lengths = self.session_end - self.session_start
        stride = int(lengths.max(initial=0)) + int(window_ms) + 1
        return (self.starts - self.session_start[self.session_of]) + self.session_of * stride

    def _chunks(self):
        bounds = [0]
        for k in range(1, len(self.offsets)):
            if self.offsets[k] - self.offsets[bounds[-1]] >= _CHUNK_EVENTS or k == len(self.offsets) - 1:
                bounds.append(k)
        for a, b in zip(bounds, bounds[1:]):
            yield int(self.offsets[a]), int(self.offsets[b])

    def _moments(self, window_ms: int):
        """Per-window polynomial coefficients of numerator and denominator in B.

        With per-label duration totals ``a0`` and counts ``c`` the buffered
        weights are ``a0 + B c``, so the numerator is
        ``n0 + B n1 + B**2 n2``; likewise the denominator is
        ``d0 + B d1 + B**2 d2`` in terms of the duration total, the sum of
        squared durations and the event count.
        """
        window_ms = int(window_ms)
        if self._moment_cache is not None and self._moment_cache[0] == window_ms:
            return self._moment_cache[1]
        axis = self._axis(window_ms)
        left = np.searchsorted(axis, axis, side="left")
        right = np.searchsorted(axis, axis + window_ms, side="left")
        n_ev = len(axis)
        coef = np.zeros((6, n_ev))
        m = len(self.labels)
        d = self.durations
        for lo, hi in self._chunks():
            n = hi - lo
            rows = np.arange(1, n + 1)
            l, r = left[lo:hi] - lo, right[lo:hi] - lo
            cum = np.zeros((n + 1, m))
            cum[rows, self.codes[lo:hi]] = d[lo:hi]
            np.cumsum(cum, axis=0, out=cum)
            a0 = cum[r] - cum[l]
            cum[:] = 0.0
            cum[rows, self.codes[lo:hi]] = 1.0
            np.cumsum(cum, axis=0, out=cum)
            cnt = cum[r] - cum[l]
            da0 = a0 @ self.dist
            dc = cnt @ self.dist
            coef[0, lo:hi] = 0.5 * np.einsum("ij,ij->i", da0, a0)
            coef[1, lo:hi] = np.einsum("ij,ij->i", da0, cnt)
            coef[2, lo:hi] = 0.5 * np.einsum("ij,ij->i", dc, cnt)
            dd = d[lo:hi]
            s1 = np.concatenate(([0.0], np.cumsum(dd)))
            s2 = np.concatenate(([0.0], np.cumsum(dd * dd)))
            tot = s1[r] - s1[l]
            k = (r - l).astype(np.float64)
            coef[3, lo:hi] = 0.5 * (tot * tot - (s2[r] - s2[l]))
            coef[4, lo:hi] = (k - 1.0) * tot
            coef[5, lo:hi] = 0.5 * k * (k - 1.0)
        out = (left, right, coef)
        self._moment_cache = (window_ms, out)
        return out

    def window_values(self, window_ms: int, buffer_ms: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(left, right, value)`` for the window anchored at every event.

        The window anchored at event ``i`` holds events ``left[i]:right[i]``.
        """
        key = (int(window_ms), float(buffer_ms))
        if key in self._cache:
            return self._cache[key]
        left, right, coef = self._moments(window_ms)
        b = float(buffer_ms)
        num = coef[0] + b * coef[1] + b * b * coef[2]
        den = coef[3] + b * coef[4] + b * b * coef[5]
        multi = (right - left) > 1
        bad = multi & (den <= 0.0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DegenerateWindowError(
                f"zero pair weight in window at {self.starts[i]} of actor "
                f"{self.actors[self.session_of[i]]}; use a positive buffer"
            )
        value = np.zeros(len(num))
        value[multi] = num[multi] / den[multi]
        np.clip(value, 0.0, 1.0, out=value)
        self._cache = {key: (left, right, value)}
        return left, right, value

    def windows(self, params: FocusParams) -> list[FocusWindow]:
        left, right, value = self.window_values(params.window_ms, params.buffer_ms)
        out = []
        for k, s in enumerate(self.sessions):
            lo = int(self.offsets[k])
            for i in range(lo, int(self.offsets[k + 1])):
                t = int(self.starts[i])
                out.append(FocusWindow(s.actor_id, i - lo, t, t + params.window_ms,
                                       int(left[i]) - lo, int(right[i]) - lo, float(value[i]),
                                       s.start_ms, s.end_ms))
        return out

    def earliest_values(self, params: FocusParams) -> np.ndarray:
        """Per-event focus value taken from the earliest window holding the event."""
        _, right, value = self.window_values(params.window_ms, params.buffer_ms)
        earliest = np.searchsorted(right, np.arange(len(right)), side="right")
        return value[earliest]

    def _run_inputs(self, params: FocusParams):
        left, right, value = self.window_values(params.window_ms, params.buffer_ms)
        sess = self.session_of
        ends = np.minimum(self.starts + params.window_ms, self.session_end[sess])
        return sess, self.starts, ends, value, left, right

    def focus_spans(self, params: FocusParams) -> dict[str, np.ndarray]:
        """Focus sessions as arrays; ``sess`` indexes ``self.sessions``."""
        return _stitch_arrays(*self._run_inputs(params), params)

    def focus_sessions(self, params: FocusParams) -> list[FocusSession]:
        return _stitch(self.actors, *self._run_inputs(params), params)


def _stitch_arrays(sess, starts, ends, values, left, right, params: FocusParams) -> dict[str, np.ndarray]:
    """Vectorised run detection; ``sess`` labels the activity session of each window.

    Returns one entry per focus session: ``sess``, ``start``, ``end``,
    ``value_sum``, ``n_windows`` and the event span ``first``/``stop``.
    """
    ok = values <= params.threshold
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return {k: empty for k in ("sess", "start", "end", "value_sum", "n_windows", "first", "stop")}
    cont = np.zeros(len(values), dtype=bool)
    cont[1:] = (sess[1:] == sess[:-1]) & ok[:-1] & (np.diff(starts) <= params.merge_gap_ms)
    new_run = ok & ~cont
    run_of = np.cumsum(new_run)[idx] - 1
    firsts = idx[new_run[idx]]
    lasts = np.append(idx[np.flatnonzero(np.diff(run_of))], idx[-1])
    r_start = starts[firsts]
    r_end = ends[lasts]
    r_stop = right[lasts]
    r_sess = sess[firsts]
    # a run that overlaps the next run of its activity session is cut where
    # that run begins, so focus sessions stay disjoint
    nxt = np.zeros(len(firsts), dtype=bool)
    nxt[:-1] = r_sess[1:] == r_sess[:-1]
    cut = np.flatnonzero(nxt)
    r_end[cut] = np.minimum(r_end[cut], r_start[cut + 1])
    r_stop[cut] = np.minimum(r_stop[cut], left[firsts[cut + 1]])
    out = {
        "sess": r_sess,
        "start": r_start,
        "end": r_end,
        "value_sum": np.bincount(run_of, weights=values[idx]),
        "n_windows": np.bincount(run_of),
        "first": left[firsts],
        "stop": r_stop,
    }
    keep = out["end"] > out["start"]
    return {k: v[keep] for k, v in out.items()}


def _stitch(actors, sess, starts, ends, values, left, right, params: FocusParams) -> list[FocusSession]:
    runs = _stitch_arrays(sess, starts, ends, values, left, right, params)
    return [
        FocusSession(actors[int(k)], int(s), int(e), float(v / c), int(hi - lo))
        for k, s, e, v, c, lo, hi in zip(runs["sess"], runs["start"], runs["end"], runs["value_sum"],
                                         runs["n_windows"], runs["first"], runs["stop"])
    ]


def score_session(session: Session, model: EmbeddingModel,
                  params: FocusParams | None = None) -> tuple[list[FocusWindow], list[ScoredEvent]]:
    """One window per event start; each event takes the value of its earliest window."""
    params = params or FocusParams()
    scorer = FocusScorer([session], model)
    windows = scorer.windows(params)
    values = scorer.earliest_values(params)
    return windows, [ScoredEvent(ev, float(v)) for ev, v in zip(session.events, values)]


def focus_sessions(windows: Sequence[FocusWindow], params: FocusParams | None = None) -> list[FocusSession]:
    """Merge consecutive sub-threshold windows into focus sessions.

    Windows are grouped by (actor, activity session) and must be time-ordered
    within each group. A run breaks on a window above the threshold or on a
    start gap longer than ``merge_gap_ms``. Each run spans its first window
    start to its last window end, clamped to the activity session end and
    to the start of the next run, so focus sessions never overlap.
    """
    params = params or FocusParams()
    if not windows:
        return []
    keys = [(w.actor_id, w.session_start_ms) for w in windows]
    sess = np.zeros(len(windows), dtype=np.int64)
    for i in range(1, len(keys)):
        sess[i] = sess[i - 1] + (keys[i] != keys[i - 1])
    actors = [keys[0][0]] + [k[0] for a, k in zip(keys, keys[1:]) if k != a]
    starts = np.array([w.start_ms for w in windows], dtype=np.int64)
    session_end = np.array([w.session_end_ms for w in windows], dtype=np.int64)
    ends = np.minimum(np.array([w.end_ms for w in windows], dtype=np.int64), session_end)
    # event positions must be comparable across sessions only through run bounds
    left = np.array([w.first_event for w in windows], dtype=np.int64)
    right = np.array([w.stop_event for w in windows], dtype=np.int64)
    values = np.array([w.value for w in windows])
    return _stitch(actors, sess, starts, ends, values, left, right, params)


def score_sessions(sessions: Sequence[Session], model: EmbeddingModel,
                   params: FocusParams | None = None) -> list[FocusSession]:
    return FocusScorer(sessions, model).focus_sessions(params or FocusParams())
