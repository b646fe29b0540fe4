"""Shared vocabulary: events, labels, activity sessions and labeled intervals.

All timestamps are integer epoch milliseconds (UTC). All durations are
integer milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Sequence

from .errors import InvariantError, ValidationError

SEPARATOR = ":"


@dataclass(frozen=True)
class Event:
    actor_id: str
    tool: str
    action: str
    start_ms: int
    duration_ms: Optional[int] = None

    def __post_init__(self):
        if not self.tool or not self.tool.strip():
            raise ValidationError("tool must be non-empty", field="tool")
        if not self.action or not self.action.strip():
            raise ValidationError("action must be non-empty", field="action")
        if self.duration_ms is not None and self.duration_ms < 0:
            raise ValidationError(f"negative duration {self.duration_ms}")

    @cached_property
    def label(self) -> str:
        return event_label(self)

    @property
    def end_ms(self) -> int:
        return self.start_ms + (self.duration_ms or 0)


@dataclass(frozen=True)
class Session:
    actor_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        if not self.events:
            raise InvariantError("session has no events")

    @property
    def start_ms(self) -> int:
        return self.events[0].start_ms

    @property
    def end_ms(self) -> int:
        return self.events[-1].end_ms

    @property
    def length_ms(self) -> int:
        return self.end_ms - self.start_ms

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class LabeledInterval:
    actor_id: str
    start_ms: int
    end_ms: int
    focused: bool
    note: str = ""
    diary_id: str = ""

    def __post_init__(self):
        if self.end_ms <= self.start_ms:
            raise ValidationError(
                f"interval must have start < end, got [{self.start_ms}, {self.end_ms}]"
            )

    @property
    def length_ms(self) -> int:
        return self.end_ms - self.start_ms


def canonical_label(tool: str, action: str) -> str:
    """Canonical ``tool:action`` text, trimmed and lowercased."""
    t = tool.strip().lower() if tool else ""
    a = action.strip().lower() if action else ""
    if not t:
        raise ValidationError("tool must be non-empty", field="tool")
    if not a:
        raise ValidationError("action must be non-empty", field="action")
    if SEPARATOR in t:
        raise ValidationError(f"tool may not contain {SEPARATOR!r}: {tool!r}", field="tool")
    if SEPARATOR in a:
        raise ValidationError(f"action may not contain {SEPARATOR!r}: {action!r}", field="action")
    return f"{t}{SEPARATOR}{a}"


def event_label(event: Event) -> str:
    return canonical_label(event.tool, event.action)


def split_label(label: str) -> tuple[str, str]:
    """Inverse of :func:`canonical_label` for already-canonical text."""
    parts = label.split(SEPARATOR)
    if len(parts) != 2 or not parts[0] or not parts[1]:
        raise ValidationError(f"malformed label {label!r}", field="label")
    return parts[0], parts[1]


def derive_durations(session: Session) -> Session:
    """Fill each event's duration from the start of its successor.

    The final event gets duration 0.
    """
    events = session.events
    for prev, nxt in zip(events, events[1:]):
        if nxt.start_ms < prev.start_ms:
            raise InvariantError("session events are not time-ordered; sessionize sorts first")
    out = [
        replace(ev, duration_ms=nxt.start_ms - ev.start_ms)
        for ev, nxt in zip(events, events[1:])
    ]
    out.append(replace(events[-1], duration_ms=0))
    return Session(session.actor_id, tuple(out))


def make_session(actor_id: str, events: Sequence[Event]) -> Session:
    return derive_durations(Session(actor_id, tuple(events)))
