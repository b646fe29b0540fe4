import json
from collections import Counter
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pytest

from focustime.embedding import TrainConfig, build_corpus, train
from focustime.errors import ConfigError
from focustime.focus import FocusScorer, FocusParams
from focustime.ingest import parse_events, sessionize
from focustime.synth import (FIXTURE_CONFIG, FIXTURE_FILES, SynthConfig, cluster_labels, generate,
                             write_fixture)
from focustime.validation import read_diaries

SMALL = SynthConfig(seed=3, n_actors=4, days=3)


def test_same_config_same_bytes(tmp_path):
    a, b = generate(SMALL), generate(SMALL)
    assert a.events_jsonl() == b.events_jsonl()
    assert a.diaries_csv() == b.diaries_csv()
    assert a.ground_truth_jsonl() == b.ground_truth_jsonl()
    pa = write_fixture(a, tmp_path / "a")
    pb = write_fixture(b, tmp_path / "b")
    assert sorted(pa) == sorted(FIXTURE_FILES)
    for name in FIXTURE_FILES:
        assert pa[name].read_bytes() == pb[name].read_bytes()
    assert json.loads(pa["synth_config.json"].read_text())["seed"] == 3


def test_seed_matters():
    assert generate(SMALL).events_jsonl() != generate(SynthConfig(seed=4, n_actors=4, days=3)).events_jsonl()


def test_actors_are_independent_streams():
    # adding actors leaves the earlier actors untouched
    more = generate(SynthConfig(seed=3, n_actors=6, days=3))
    few = generate(SMALL)
    assert [e for e in more.events if e.actor_id < "u0004"] == few.events


def test_outputs_parse_with_the_ingest_and_diary_readers():
    data = generate(SMALL)
    events, diags = parse_events(data.events_jsonl().encode())
    assert diags == [] and events == data.events
    assert read_diaries(data.diaries_csv()) == data.intervals
    truth = [json.loads(line) for line in data.ground_truth_jsonl().splitlines()]
    assert set(truth[0]) == {"actor", "start_ms", "end_ms", "phase", "cluster"}


def test_phases_tile_each_workday():
    data = generate(SMALL)
    by_day = {}
    for p in data.phases:
        by_day.setdefault((p.actor_id, p.day), []).append(p)
    for phases in by_day.values():
        for a, b in zip(phases, phases[1:]):
            assert a.end_ms == b.start_ms
        assert all(p.start_ms < p.end_ms for p in phases)
        assert {p.phase for p in phases} <= {"focus", "diffuse"}


def test_diaries_refer_to_logged_actors_and_times():
    data = generate(SMALL)
    span = {}
    for e in data.events:
        lo, hi = span.get(e.actor_id, (e.start_ms, e.start_ms))
        span[e.actor_id] = (min(lo, e.start_ms), max(hi, e.start_ms))
    for iv in data.intervals:
        lo, hi = span[iv.actor_id]
        assert lo <= iv.start_ms and iv.start_ms <= hi


def test_every_phase_event_lies_inside_its_phase():
    data = generate(SMALL)
    clusters = cluster_labels(SMALL)
    for p in data.phases:
        inside = [e for e in data.events if e.actor_id == p.actor_id and p.start_ms <= e.start_ms < p.end_ms]
        assert inside and inside[0].start_ms == p.start_ms
        if p.phase == "focus":
            own = {f"{t}:{a}" for t, a in clusters[p.cluster]}
            share = sum(e.label in own for e in inside) / len(inside)
            assert share > 0.7


def test_overnight_silence_breaks_sessions():
    data = generate(SMALL)
    sessions = sessionize(data.events)
    for s in sessions:
        days = {p.day for p in data.phases if p.actor_id == s.actor_id
                and p.start_ms <= s.start_ms < p.end_ms}
        assert len(days) == 1


def test_config_validation():
    with pytest.raises(ConfigError):
        SynthConfig(focus_phase_minutes=(30, 10))
    with pytest.raises(ConfigError):
        SynthConfig(cluster_escape_prob=1.5)
    with pytest.raises(ConfigError):
        SynthConfig(n_actors=0)
    with pytest.raises(ConfigError):
        SynthConfig(labels_per_cluster=99)
    assert asdict(SynthConfig())["vocab_clusters"] == 6


def test_pure_focus_corpus_scores_near_zero():
    cfg = SynthConfig(seed=5, n_actors=6, days=4, cluster_escape_prob=0.0, diffuse_phases=False)
    sessions = sessionize(generate(cfg).events)
    model = train(build_corpus(sessions, min_count=1), TrainConfig(min_count=1))
    _, _, values = FocusScorer(sessions, model).window_values(FocusParams().window_ms, 10.0)
    assert values.mean() <= 0.1


def test_fixture_labels_clear_min_count(fixture_data):
    counts = Counter(e.label for e in fixture_data.events)
    expected = {f"{t}:{a}" for cl in cluster_labels(FIXTURE_CONFIG) for t, a in cl}
    assert set(counts) == expected
    assert min(counts.values()) >= 200
    assert FIXTURE_CONFIG.n_actors >= 50 and FIXTURE_CONFIG.days >= 10


def test_published_fixture_config_matches():
    path = Path(__file__).resolve().parents[1] / "configs" / "fixture.json"
    published = json.loads(path.read_text())["synth"]
    assert SynthConfig(**{k: tuple(v) if isinstance(v, list) else v
                          for k, v in published.items()}) == FIXTURE_CONFIG
