"""Event log parsing and sessionization.

Input records carry exactly four fields: ``actor``, ``tool``, ``action`` and
``ts_ms`` (integer epoch milliseconds). JSONL has one object per line; CSV
has a header row with the same names.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from itertools import groupby
from typing import IO, Iterable, Iterator, Sequence

from .errors import ConfigError, FormatError, ValidationError
from .model import Event, Session, canonical_label, make_session, split_label

FIELDS = ("actor", "tool", "action", "ts_ms")
DEFAULT_GAP_MS = 10 * 60 * 1000


@dataclass(frozen=True)
class IngestConfig:
    format: str = "jsonl"
    inactivity_gap_ms: int = DEFAULT_GAP_MS
    strict: bool = False

    def __post_init__(self):
        if self.format not in ("jsonl", "csv"):
            raise ConfigError(f"unknown format {self.format!r}; expected jsonl or csv")
        if self.inactivity_gap_ms <= 0:
            raise ConfigError("inactivity_gap_ms must be positive")


@dataclass(frozen=True)
class Diagnostic:
    row: int
    reason: str

    def __str__(self):
        return f"row {self.row}: {self.reason}"


class MalformedRecord(ValidationError):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


def _coerce_ts(value) -> int:
    if isinstance(value, bool):
        raise ValueError("ts_ms must be a number")
    if isinstance(value, int):
        ts = value
    elif isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("ts_ms is not finite")
        ts = int(value)
    elif isinstance(value, str):
        text = value.strip()
        try:
            ts = int(text)
        except ValueError:
            ts = int(float(text))
    else:
        raise ValueError(f"ts_ms has unsupported type {type(value).__name__}")
    if ts < 0:
        raise ValueError(f"negative timestamp {ts}")
    return ts


def _record_to_event(rec: dict) -> Event:
    for name in FIELDS:
        val = rec.get(name)
        if val is None or (isinstance(val, str) and not val.strip()):
            raise ValueError(f"missing field {name!r}")
    actor = rec["actor"]
    if not isinstance(actor, str):
        actor = str(actor)
    tool, action = rec["tool"], rec["action"]
    if not isinstance(tool, str) or not isinstance(action, str):
        raise ValueError("tool and action must be strings")
    # validates separator rules as well as emptiness
    canonical_label(tool, action)
    return Event(actor, tool, action, _coerce_ts(rec["ts_ms"]))


def _jsonl_records(text: IO[str]) -> Iterator[tuple[int, dict | None, str | None]]:
    for lineno, line in enumerate(text, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, None, f"invalid JSON: {exc.msg}"
            continue
        if not isinstance(rec, dict):
            yield lineno, None, "record is not a JSON object"
            continue
        yield lineno, rec, None


def _csv_records(text: IO[str]) -> Iterator[tuple[int, dict | None, str | None]]:
    reader = csv.DictReader(text)
    if reader.fieldnames is None:
        return
    header = [h.strip() for h in reader.fieldnames]
    missing = [f for f in FIELDS if f not in header]
    reader.fieldnames = header
    for rec in reader:
        if missing:
            yield reader.line_num, None, f"missing column(s) {', '.join(missing)}"
            continue
        if None in rec:
            yield reader.line_num, None, "too many fields"
            continue
        yield reader.line_num, rec, None


def parse_events(source, config: IngestConfig | None = None) -> tuple[list[Event], list[Diagnostic]]:
    """Parse an event log from a binary/text stream, bytes, or str.

    Returns events in input order plus one diagnostic per rejected record.
    In strict mode the first rejected record raises :class:`MalformedRecord`.
    """
    config = config or IngestConfig()
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    if isinstance(source, str):
        text = io.StringIO(source)
    elif isinstance(source, io.TextIOBase):
        text = source
    else:
        text = io.TextIOWrapper(source, encoding="utf-8", newline="")
    records = _jsonl_records(text) if config.format == "jsonl" else _csv_records(text)

    events: list[Event] = []
    diagnostics: list[Diagnostic] = []
    try:
        for row, rec, err in records:
            if err is None:
                try:
                    events.append(_record_to_event(rec))
                    continue
                except ValueError as exc:
                    err = str(exc)
            diag = Diagnostic(row, err)
            if config.strict:
                raise MalformedRecord(diag)
            diagnostics.append(diag)
    except UnicodeDecodeError as exc:
        raise FormatError(f"source is not valid UTF-8: {exc}") from exc
    return events, diagnostics


def read_events(path, config: IngestConfig | None = None) -> tuple[list[Event], list[Diagnostic]]:
    with open(path, "rb") as fh:
        return parse_events(fh, config)


def sessionize(events: Iterable[Event], gap_ms: int = DEFAULT_GAP_MS) -> list[Session]:
    """Split each actor's events into sessions on inactivity longer than ``gap_ms``.

    Output is ordered by actor id, then time. A gap exactly equal to
    ``gap_ms`` does not break a session.
    """
    if gap_ms <= 0:
        raise ConfigError("gap must be positive")
    indexed = sorted(enumerate(events), key=lambda p: (p[1].actor_id, p[1].start_ms, p[0]))
    sessions: list[Session] = []
    for actor, group in groupby(indexed, key=lambda p: p[1].actor_id):
        current: list[Event] = []
        for _, ev in group:
            if current and ev.start_ms - current[-1].start_ms > gap_ms:
                sessions.append(make_session(actor, current))
                current = []
            current.append(ev)
        if current:
            sessions.append(make_session(actor, current))
    return sessions


def session_to_json(session: Session) -> dict:
    return {
        "actor": session.actor_id,
        "start_ms": session.start_ms,
        "end_ms": session.end_ms,
        "events": [
            {"label": ev.label, "start_ms": ev.start_ms, "dur_ms": ev.duration_ms}
            for ev in session.events
        ],
    }


def session_from_json(obj: dict) -> Session:
    try:
        actor = obj["actor"]
        events = []
        for e in obj["events"]:
            tool, action = split_label(e["label"])
            events.append(Event(actor, tool, action, int(e["start_ms"]), int(e["dur_ms"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed session record: {exc}") from exc
    if not events:
        raise FormatError("session record has no events")
    return Session(actor, tuple(events))


def write_sessions(sessions: Sequence[Session], fh: IO[str]) -> None:
    for s in sessions:
        fh.write(json.dumps(session_to_json(s), separators=(",", ":")))
        fh.write("\n")


def read_sessions(path) -> list[Session]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON") from exc
            out.append(session_from_json(obj))
    return out


def events_to_jsonl(events: Iterable[Event]) -> str:
    buf = io.StringIO()
    for ev in events:
        buf.write(json.dumps(
            {"actor": ev.actor_id, "tool": ev.tool, "action": ev.action, "ts_ms": ev.start_ms},
            separators=(",", ":"),
        ))
        buf.write("\n")
    return buf.getvalue()
