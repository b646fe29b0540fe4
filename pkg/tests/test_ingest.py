import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from focustime.errors import ConfigError, FormatError
from focustime.ingest import (IngestConfig, MalformedRecord, events_to_jsonl, parse_events,
                              read_sessions, session_from_json, session_to_json, sessionize,
                              write_sessions)
from focustime.model import Event

MIN = 60_000


def test_jsonl_row_maps_fields():
    events, diags = parse_events(b'{"actor":"a1","tool":"ide","action":"edit","ts_ms":1000}\n')
    assert events == [Event("a1", "ide", "edit", 1000)]
    assert diags == []


def test_csv_missing_action_column_is_skipped():
    text = "actor,tool,ts_ms\na1,ide,1000\n"
    events, diags = parse_events(text, IngestConfig(format="csv"))
    assert events == []
    assert len(diags) == 1 and diags[0].row == 2 and "action" in diags[0].reason


def test_csv_quoting_and_order():
    text = 'actor,tool,action,ts_ms\n"a,1",ide,edit,5\nb,docs,"view",3\n'
    events, _ = parse_events(text, IngestConfig(format="csv"))
    assert [(e.actor_id, e.start_ms) for e in events] == [("a,1", 5), ("b", 3)]


def test_negative_timestamp_rejected():
    events, diags = parse_events('{"actor":"a","tool":"ide","action":"edit","ts_ms":-5}\n')
    assert events == [] and "negative" in diags[0].reason


def test_fractional_timestamp_truncated():
    events, _ = parse_events('{"actor":"a","tool":"ide","action":"edit","ts_ms":12.9}\n')
    assert events[0].start_ms == 12


def test_strict_mode_aborts_on_first_bad_row():
    src = ('{"actor":"a","tool":"ide","action":"edit","ts_ms":1}\n'
           'not json\n'
           '{"actor":"a","tool":"","action":"edit","ts_ms":2}\n')
    with pytest.raises(MalformedRecord) as info:
        parse_events(src, IngestConfig(strict=True))
    assert info.value.diagnostic.row == 2
    events, diags = parse_events(src)
    assert len(events) == 1 and [d.row for d in diags] == [2, 3]


def test_invalid_utf8_is_a_format_error():
    with pytest.raises(FormatError):
        parse_events(b'{"actor":"\xff\xfe","tool":"x","action":"y","ts_ms":1}\n')


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        IngestConfig(format="xml")
    with pytest.raises(ConfigError):
        IngestConfig(inactivity_gap_ms=0)


def _ev(t, actor="a", action="edit"):
    return Event(actor, "ide", action, t)


def _starts(sessions):
    return [[e.start_ms for e in s.events] for s in sessions]


def test_sessionize_examples():
    assert _starts(sessionize([_ev(0), _ev(5 * MIN), _ev(16 * MIN)], 10 * MIN)) == [[0, 5 * MIN], [16 * MIN]]
    assert _starts(sessionize([_ev(0), _ev(10 * MIN)], 10 * MIN)) == [[0, 10 * MIN]]
    mixed = [_ev(0, "a"), _ev(1, "b"), _ev(2, "a"), _ev(3, "b")]
    out = sessionize(mixed, 10 * MIN)
    assert [(s.actor_id, _starts([s])[0]) for s in out] == [("a", [0, 2]), ("b", [1, 3])]


def test_sessionize_empty_and_ties():
    assert sessionize([]) == []
    out = sessionize([_ev(5, action="second"), _ev(0), _ev(5, action="third")])
    assert [e.action for e in out[0].events] == ["edit", "second", "third"]
    assert [e.duration_ms for e in out[0].events] == [5, 0, 0]


events_strategy = st.lists(
    st.builds(_ev, st.integers(0, 4 * 3_600_000), st.sampled_from(["a", "b", "c"]),
              st.sampled_from(["edit", "view"])),
    max_size=60,
)


@settings(max_examples=200, deadline=None)
@given(events_strategy, st.integers(1, 30 * MIN))
def test_sessionize_invariants(events, gap):
    sessions = sessionize(events, gap)
    flat = [e for s in sessions for e in s.events]
    # partition: every event exactly once, in its own actor's sessions
    key = lambda e: (e.actor_id, e.start_ms, e.action)
    assert sorted(map(key, flat)) == sorted(map(key, events))
    for s in sessions:
        assert all(e.actor_id == s.actor_id for e in s.events)
        starts = [e.start_ms for e in s.events]
        assert all(b - a <= gap for a, b in zip(starts, starts[1:]))
        assert sum(e.duration_ms for e in s.events) == s.end_ms - s.start_ms
    for a, b in zip(sessions, sessions[1:]):
        if a.actor_id == b.actor_id:
            assert b.start_ms - a.events[-1].start_ms > gap
    assert sessionize(flat, gap) == sessions


def test_session_json_round_trip(tmp_path):
    sessions = sessionize([_ev(0), _ev(1000, action="view"), _ev(5000, "b")])
    path = tmp_path / "s.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        write_sessions(sessions, fh)
    assert read_sessions(path) == sessions
    line = json.loads(path.read_text().splitlines()[0])
    assert line == {"actor": "a", "start_ms": 0, "end_ms": 1000,
                    "events": [{"label": "ide:edit", "start_ms": 0, "dur_ms": 1000},
                               {"label": "ide:view", "start_ms": 1000, "dur_ms": 0}]}
    assert session_from_json(session_to_json(sessions[1])) == sessions[1]


@pytest.mark.parametrize("line", ['{"actor":"a"}', '{"actor":"a","events":[]}',
                                  '{"actor":"a","events":[{"label":"nocolon","start_ms":0,"dur_ms":0}]}',
                                  "{bad json"])
def test_malformed_session_file(tmp_path, line):
    path = tmp_path / "s.jsonl"
    path.write_text(line + "\n")
    with pytest.raises(FormatError):
        read_sessions(path)


def test_events_jsonl_round_trip():
    events = [_ev(3), _ev(1, "b", "view")]
    assert parse_events(io.BytesIO(events_to_jsonl(events).encode()))[0] == events
