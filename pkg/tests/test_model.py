import pytest

from focustime.errors import InvariantError, ValidationError
from focustime.model import (Event, LabeledInterval, Session, canonical_label, derive_durations,
                             event_label, make_session, split_label)


@pytest.mark.parametrize("tool,action,expected", [
    ("IDE", "edit", "ide:edit"),
    ("CodeSearch", "view", "codesearch:view"),
    (" ide ", "EDIT", "ide:edit"),
])
def test_event_label_examples(tool, action, expected):
    assert event_label(Event("a", tool, action, 0)) == expected


def test_label_is_idempotent():
    lab = canonical_label(" Build ", "RUN")
    assert canonical_label(*split_label(lab)) == lab
    assert lab.count(":") == 1


def test_equal_pairs_share_a_label():
    assert Event("a", "IDE", "Edit", 0).label == Event("b", "ide", "edit", 99).label


@pytest.mark.parametrize("tool,action,bad", [("", "edit", "tool"), ("ide", "   ", "action")])
def test_empty_field_is_named(tool, action, bad):
    with pytest.raises(ValidationError) as info:
        Event("a", tool, action, 0)
    assert bad in str(info.value)


def test_separator_inside_field_rejected():
    with pytest.raises(ValidationError):
        canonical_label("ide:x", "edit")


def test_negative_duration_rejected():
    with pytest.raises(ValidationError):
        Event("a", "ide", "edit", 0, duration_ms=-1)


def _session(starts):
    return Session("a", tuple(Event("a", "ide", "edit", t) for t in starts))


@pytest.mark.parametrize("starts,durations", [
    ([0, 30_000, 90_000], [30_000, 60_000, 0]),
    ([0], [0]),
    ([0, 0, 10_000], [0, 10_000, 0]),
])
def test_derive_durations_examples(starts, durations):
    out = derive_durations(_session(starts))
    assert [e.duration_ms for e in out.events] == durations


def test_derive_durations_rejects_unordered():
    with pytest.raises(InvariantError):
        derive_durations(_session([10, 5]))


def test_session_bounds_and_duration_sum():
    s = make_session("a", [Event("a", "ide", "edit", t) for t in (100, 250, 900)])
    assert (s.start_ms, s.end_ms, s.length_ms, len(s)) == (100, 900, 800, 3)
    assert sum(e.duration_ms for e in s.events) == s.end_ms - s.start_ms


def test_empty_session_rejected():
    with pytest.raises(InvariantError):
        Session("a", ())


def test_interval_requires_positive_length():
    with pytest.raises(ValidationError):
        LabeledInterval("a", 10, 10, True)
    assert LabeledInterval("a", 10, 25, False).length_ms == 15
