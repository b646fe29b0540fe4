"""Agreement between focus sessions and labeled diary intervals.

Agreement is PABAK (prevalence- and bias-adjusted kappa), ``2 * p_o - 1``
where ``p_o`` is the observed fraction of matching binary labels.
"""

from __future__ import annotations

import csv
import io
import math
import multiprocessing
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .embedding import EmbeddingModel
from .errors import ConfigError, GridPointError, ValidationError
from .focus import MINUTE_MS, FocusParams, FocusScorer
from .model import LabeledInterval, Session


# actors are laid side by side on one integer axis; epoch-ms values stay far below 2**44
_ACTOR_STRIDE = 1 << 44


class IntervalIndex:
    """Diary intervals prepared for repeated coverage and agreement queries."""

    def __init__(self, intervals: Sequence[LabeledInterval]):
        if not intervals:
            raise ValidationError("no diary intervals")
        for iv in intervals:
            if iv.end_ms <= iv.start_ms:
                raise ValidationError(f"zero-length interval at {iv.start_ms}")
        self.intervals = list(intervals)
        self.actors = {a: i for i, a in enumerate(sorted({iv.actor_id for iv in intervals}))}
        codes = np.array([self.actors[iv.actor_id] for iv in intervals], dtype=np.int64)
        self.start = codes * _ACTOR_STRIDE + np.array([iv.start_ms for iv in intervals], dtype=np.int64)
        self.end = codes * _ACTOR_STRIDE + np.array([iv.end_ms for iv in intervals], dtype=np.int64)
        self.length = self.end - self.start
        self.truth = np.array([iv.focused for iv in intervals], dtype=bool)
        self.diary_ids = sorted({diary_key(iv) for iv in intervals})
        lookup = {d: i for i, d in enumerate(self.diary_ids)}
        self.diary = np.array([lookup[diary_key(iv)] for iv in intervals], dtype=np.int64)
        self.diary_size = np.bincount(self.diary, minlength=len(self.diary_ids))

    def actor_codes(self, actor_ids: Iterable[str]) -> np.ndarray:
        """Index code per actor name, -1 for actors without intervals."""
        return np.array([self.actors.get(a, -1) for a in actor_ids], dtype=np.int64)

    def coverage(self, actor_code: np.ndarray, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
        """Milliseconds of each interval covered by the union of same-actor spans."""
        keep = actor_code >= 0
        if not keep.any():
            return np.zeros(len(self.start), dtype=np.int64)
        s = actor_code[keep] * _ACTOR_STRIDE + starts[keep]
        e = actor_code[keep] * _ACTOR_STRIDE + ends[keep]
        order = np.lexsort((e, s))
        s, e = s[order], e[order]
        reach = np.maximum.accumulate(e)
        new = np.ones(len(s), dtype=bool)
        new[1:] = s[1:] > reach[:-1]
        g = np.flatnonzero(new)
        us = s[g]
        ue = np.maximum.reduceat(e, g)
        covered = np.concatenate(([0], np.cumsum(ue - us)))

        def cover_until(t):
            k = np.searchsorted(us, t, side="right")
            prev = np.maximum(k - 1, 0)
            partial = np.clip(t - us[prev], 0, (ue - us)[prev])
            return np.where(k > 0, covered[prev] + partial, 0)

        return cover_until(self.end) - cover_until(self.start)

    def coverage_of(self, spans) -> np.ndarray:
        spans = list(spans)
        return self.coverage(
            self.actor_codes(sp.actor_id for sp in spans),
            np.array([sp.start_ms for sp in spans], dtype=np.int64),
            np.array([sp.end_ms for sp in spans], dtype=np.int64),
        )

    def predict(self, covered: np.ndarray, overlap_fraction: float = 0.5) -> np.ndarray:
        if not 0.0 < overlap_fraction <= 1.0:
            raise ConfigError("overlap_fraction must lie in (0, 1]")
        return covered >= overlap_fraction * self.length

    def per_diary_pabak(self, predicted: np.ndarray) -> np.ndarray:
        agree = np.bincount(self.diary, weights=(predicted == self.truth), minlength=len(self.diary_ids))
        return 2.0 * agree / self.diary_size - 1.0

    def median_pabak(self, predicted: np.ndarray) -> float:
        return float(np.median(self.per_diary_pabak(predicted)))

    def report(self, predicted, idle=None, meta: dict | None = None) -> AgreementReport:
        predicted = np.asarray(predicted, dtype=bool)
        if predicted.shape != self.truth.shape:
            raise ValidationError("one prediction per interval required")
        idle = np.zeros(len(predicted), dtype=bool) if idle is None else np.asarray(idle, dtype=bool)
        t, p = self.truth, predicted
        counts = {
            name: np.bincount(self.diary, weights=mask, minlength=len(self.diary_ids)).astype(int)
            for name, mask in (("a", p & t), ("b", p & ~t), ("c", ~p & t), ("d", ~p & ~t),
                               ("idle", idle))
        }
        scores = self.per_diary_pabak(predicted)
        rows = [
            DiaryAgreement(did, int(counts["a"][i]), int(counts["b"][i]), int(counts["c"][i]),
                           int(counts["d"][i]),
                           float((counts["a"][i] + counts["d"][i]) / self.diary_size[i]),
                           float(scores[i]), int(counts["idle"][i]))
            for i, did in enumerate(self.diary_ids)
        ]
        return AgreementReport(rows, statistics.median(r.pabak for r in rows), dict(meta or {}))


def overlap_ms(spans, intervals: Sequence[LabeledInterval]) -> np.ndarray:
    """Milliseconds of each interval covered by the union of same-actor spans."""
    return IntervalIndex(intervals).coverage_of(spans)


def predict_interval_labels(focus_sessions, intervals: Sequence[LabeledInterval],
                            overlap_fraction: float = 0.5) -> list[bool]:
    """An interval is predicted focused when at least ``overlap_fraction`` of it
    is covered by focus sessions."""
    index = IntervalIndex(intervals)
    return index.predict(index.coverage_of(focus_sessions), overlap_fraction).tolist()


def pabak(predicted: Sequence[bool], actual: Sequence[bool]) -> float:
    if len(predicted) != len(actual):
        raise ValidationError(f"length mismatch: {len(predicted)} vs {len(actual)}")
    if not len(predicted):
        raise ValidationError("pabak needs at least one rating pair")
    agree = sum(bool(p) == bool(a) for p, a in zip(predicted, actual))
    return 2.0 * agree / len(predicted) - 1.0


@dataclass(frozen=True)
class DiaryAgreement:
    diary_id: str
    a: int  # predicted focus, reported focus
    b: int  # predicted focus, reported not
    c: int  # predicted not, reported focus
    d: int  # predicted not, reported not
    p_o: float
    pabak: float
    no_activity: int = 0

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d


@dataclass(frozen=True)
class AgreementReport:
    per_diary: list[DiaryAgreement]
    median_pabak: float
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "median_pabak": self.median_pabak,
            "n_diaries": len(self.per_diary),
            **self.meta,
            "per_diary": [
                {"diary_id": d.diary_id, "a": d.a, "b": d.b, "c": d.c, "d": d.d,
                 "p_o": d.p_o, "pabak": d.pabak, "no_activity": d.no_activity}
                for d in self.per_diary
            ],
        }


def diary_key(iv: LabeledInterval) -> str:
    return iv.diary_id or iv.actor_id


def agreement_report(predicted: Sequence[bool], intervals: Sequence[LabeledInterval],
                     sessions: Sequence[Session] | None = None, meta: dict | None = None) -> AgreementReport:
    """Per-diary confusion counts and PABAK, plus their median.

    With ``sessions`` given, intervals without any overlapping activity are
    counted per diary in ``no_activity``.
    """
    index = IntervalIndex(intervals)
    idle = None if sessions is None else index.coverage_of(sessions) == 0
    return index.report(predicted, idle, meta)


def evaluate(focus_sessions, intervals: Sequence[LabeledInterval], overlap_fraction: float = 0.5,
             sessions: Sequence[Session] | None = None) -> AgreementReport:
    index = IntervalIndex(intervals)
    predicted = index.predict(index.coverage_of(focus_sessions), overlap_fraction)
    idle = None if sessions is None else index.coverage_of(sessions) == 0
    return index.report(predicted, idle)


def read_diaries(path_or_text) -> list[LabeledInterval]:
    """Read ``diary_id,actor,start_ms,end_ms,focused`` CSV."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        fh = io.StringIO(path_or_text)
    else:
        fh = open(path_or_text, newline="", encoding="utf-8")
    with fh:
        reader = csv.DictReader(fh)
        need = {"diary_id", "actor", "start_ms", "end_ms", "focused"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValidationError(f"diary CSV needs columns {sorted(need)}")
        out = []
        for rec in reader:
            try:
                focused = rec["focused"].strip()
                if focused not in ("0", "1"):
                    raise ValueError(f"focused must be 0 or 1, got {focused!r}")
                out.append(LabeledInterval(
                    rec["actor"], int(rec["start_ms"]), int(rec["end_ms"]),
                    focused == "1", diary_id=rec["diary_id"],
                ))
            except ValueError as exc:
                raise ValidationError(f"diary row {reader.line_num}: {exc}") from exc
    return out


def write_diaries(intervals: Iterable[LabeledInterval], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["diary_id", "actor", "start_ms", "end_ms", "focused"])
    for iv in intervals:
        w.writerow([diary_key(iv), iv.actor_id, iv.start_ms, iv.end_ms, int(iv.focused)])


# -- grid search -------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    thresholds: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)
    windows_ms: tuple[int, ...] = tuple(m * MINUTE_MS for m in range(5, 61, 5))
    buffers_ms: tuple[float, ...] = tuple(float(b) for b in range(10, 101, 10))

    def __post_init__(self):
        if not (self.thresholds and self.windows_ms and self.buffers_ms):
            raise ConfigError("every grid axis needs at least one value")

    @property
    def size(self) -> int:
        return len(self.thresholds) * len(self.windows_ms) * len(self.buffers_ms)


@dataclass(frozen=True)
class GridRow:
    threshold: float
    window_ms: int
    buffer_ms: float
    median_pabak: float

    @property
    def window_min(self) -> float:
        return self.window_ms / MINUTE_MS

    def to_json(self) -> dict:
        return {"threshold": self.threshold, "window_min": self.window_min,
                "buffer_ms": self.buffer_ms, "median_pabak": self.median_pabak}


def _tie_key(row: GridRow):
    return (-row.median_pabak, row.window_ms, row.threshold, row.buffer_ms)


@dataclass(frozen=True)
class GridResult:
    rows: list[GridRow]

    @property
    def best(self) -> GridRow:
        return min(self.rows, key=_tie_key)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "window_min", "buffer_ms", "median_pabak"])
        for r in self.rows:
            w.writerow([repr(r.threshold), f"{r.window_min:g}", f"{r.buffer_ms:g}",
                        repr(r.median_pabak)])
        return buf.getvalue()


def _evaluate_cell(scorer: FocusScorer, index: IntervalIndex, spec: GridSpec, window_ms: int,
                   buffer_ms: float, merge_gap_ms: int, overlap_fraction: float) -> list[GridRow]:
    rows = []
    sess_actor = index.actor_codes(scorer.actors)
    for thr in spec.thresholds:
        params = FocusParams(window_ms, buffer_ms, thr, merge_gap_ms)
        try:
            spans = scorer.focus_spans(params)
            covered = index.coverage(sess_actor[spans["sess"]], spans["start"], spans["end"])
            score = index.median_pabak(index.predict(covered, overlap_fraction))
        except Exception as exc:
            raise GridPointError(params, exc) from exc
        rows.append(GridRow(thr, window_ms, buffer_ms, score))
    return rows


_WORKER_STATE: dict = {}


def _worker(cell):
    st = _WORKER_STATE
    return _evaluate_cell(st["scorer"], st["index"], st["spec"], cell[0], cell[1],
                          st["merge_gap_ms"], st["overlap_fraction"])


def grid_search(sessions: Sequence[Session], model: EmbeddingModel,
                intervals: Sequence[LabeledInterval], spec: GridSpec | None = None,
                merge_gap_ms: int = 10 * MINUTE_MS, overlap_fraction: float = 0.5,
                jobs: int = 1) -> GridResult:
    """Evaluate median PABAK at every point of ``spec``.

    Rows come back ordered by threshold, then window, then buffer, regardless
    of ``jobs``.
    """
    spec = spec or GridSpec()
    if not intervals:
        raise ValidationError("no diary intervals")
    actors = {s.actor_id for s in sessions}
    missing = sorted({iv.actor_id for iv in intervals} - actors)
    if missing:
        raise ValidationError(f"diary actors without sessions: {', '.join(missing[:5])}")
    scorer = FocusScorer(sessions, model)
    index = IntervalIndex(intervals)
    cells = [(w, b) for w in spec.windows_ms for b in spec.buffers_ms]
    if jobs > 1 and "fork" in multiprocessing.get_all_start_methods():
        _WORKER_STATE.update(scorer=scorer, index=index, spec=spec,
                             merge_gap_ms=merge_gap_ms, overlap_fraction=overlap_fraction)
        try:
            with multiprocessing.get_context("fork").Pool(jobs) as pool:
                results = pool.map(_worker, cells)
        finally:
            _WORKER_STATE.clear()
    else:
        results = [_evaluate_cell(scorer, index, spec, w, b, merge_gap_ms, overlap_fraction)
                   for w, b in cells]
    rows = [r for cell_rows in results for r in cell_rows]
    rows.sort(key=lambda r: (r.threshold, r.window_ms, r.buffer_ms))
    return GridResult(rows)


# -- naive benchmarks --------------------------------------------------------

def nearest_rank_percentile(values: Sequence[float], percentile: float) -> float:
    if not values:
        raise ValidationError("percentile of an empty sample")
    if not 0 < percentile <= 100:
        raise ConfigError("percentile must lie in (0, 100]")
    ordered = sorted(values)
    rank = max(1, math.ceil(percentile / 100.0 * len(ordered)))
    return ordered[rank - 1]


def _benchmark(sessions, intervals, measure, percentile, overlap_fraction, name):
    if not sessions:
        raise ValidationError("no sessions")
    values = [measure(s) for s in sessions]
    cut = nearest_rank_percentile(values, percentile)
    chosen = [s for s, v in zip(sessions, values) if v > cut]
    index = IntervalIndex(intervals)
    predicted = index.predict(index.coverage_of(chosen), overlap_fraction)
    idle = index.coverage_of(sessions) == 0
    meta = {"benchmark": name, "percentile": percentile, "cutoff": cut,
            "n_qualifying_sessions": len(chosen)}
    return index.report(predicted, idle, meta)


def naive_session_length_benchmark(sessions: Sequence[Session], intervals: Sequence[LabeledInterval],
                                   percentile: float = 90, overlap_fraction: float = 0.5) -> AgreementReport:
    """Label as focus the sessions strictly longer than the length percentile."""
    return _benchmark(sessions, intervals, lambda s: s.length_ms, percentile,
                      overlap_fraction, "session_length")


def naive_event_count_benchmark(sessions: Sequence[Session], intervals: Sequence[LabeledInterval],
                                percentile: float = 90, overlap_fraction: float = 0.5) -> AgreementReport:
    """Label as focus the sessions with strictly more events than the count percentile."""
    return _benchmark(sessions, intervals, len, percentile, overlap_fraction, "event_count")
