"""Seeded synthetic event logs with planted focus phases.

Every simulated workday alternates *focus* phases, whose events come from a
single cluster of labels with short gaps, and *diffuse* phases, whose events
are drawn uniformly from all labels with longer, more variable gaps. The
diary for an actor-day lists exactly those phases.

Randomness comes from numpy's PCG64 generator; actor ``i`` uses the stream
``SeedSequence(seed, spawn_key=(i,))`` so output is byte-identical for a
given config on any platform.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import events_to_jsonl
from .model import Event, LabeledInterval
from .validation import write_diaries

MINUTE_MS = 60_000
DAY_MS = 24 * 60 * MINUTE_MS
# 2022-01-03T00:00:00Z, a Monday
EPOCH_START_MS = 1_641_168_000_000

TOOLS = ("ide", "codesearch", "docs", "build", "review", "chat", "email", "tracker",
         "terminal", "calendar", "wiki", "dashboard")
ACTIONS = ("view", "edit", "search", "open", "run", "comment", "submit", "close",
           "create", "sync", "share", "scroll")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 7
    n_actors: int = 50
    days: int = 10
    vocab_clusters: int = 6
    labels_per_cluster: int = 8
    focus_phase_minutes: tuple[float, float] = (20.0, 90.0)
    diffuse_phase_minutes: tuple[float, float] = (10.0, 40.0)
    focus_event_gap_seconds: tuple[float, float] = (5.0, 60.0)
    diffuse_event_gap_seconds: tuple[float, float] = (5.0, 120.0)
    cluster_escape_prob: float = 0.05
    workday_minutes: tuple[float, float] = (420.0, 540.0)
    day_start_minute: tuple[float, float] = (8 * 60.0, 10 * 60.0)
    diffuse_phases: bool = True
    diffuse_idle_prob: float = 0.0
    diffuse_idle_minutes: tuple[float, float] = (15.0, 45.0)

    def __post_init__(self):
        for name in ("focus_phase_minutes", "diffuse_phase_minutes", "focus_event_gap_seconds",
                     "diffuse_event_gap_seconds", "workday_minutes", "day_start_minute",
                     "diffuse_idle_minutes"):
            lo, hi = getattr(self, name)
            object.__setattr__(self, name, (float(lo), float(hi)))
            if not (0 <= lo <= hi) or hi <= 0:
                raise ConfigError(f"{name} must be a non-empty positive range, got {(lo, hi)}")
        for name in ("n_actors", "days", "vocab_clusters", "labels_per_cluster"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.labels_per_cluster > len(ACTIONS):
            raise ConfigError(f"labels_per_cluster may not exceed {len(ACTIONS)}")
        for name in ("cluster_escape_prob", "diffuse_idle_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class Phase:
    actor_id: str
    start_ms: int
    end_ms: int
    phase: str
    cluster: int | None
    day: int

    def to_json(self) -> dict:
        return {"actor": self.actor_id, "start_ms": self.start_ms, "end_ms": self.end_ms,
                "phase": self.phase, "cluster": self.cluster}


@dataclass(frozen=True)
class SynthData:
    config: SynthConfig
    events: list[Event]
    phases: list[Phase]

    @property
    def intervals(self) -> list[LabeledInterval]:
        return [
            LabeledInterval(p.actor_id, p.start_ms, p.end_ms, p.phase == "focus",
                            diary_id=f"{p.actor_id}-d{p.day:03d}")
            for p in self.phases
        ]

    def events_jsonl(self) -> str:
        return events_to_jsonl(self.events)

    def diaries_csv(self) -> str:
        buf = io.StringIO()
        write_diaries(self.intervals, buf)
        return buf.getvalue()

    def ground_truth_jsonl(self) -> str:
        return "".join(json.dumps(p.to_json(), separators=(",", ":")) + "\n" for p in self.phases)


def cluster_labels(config: SynthConfig) -> list[list[tuple[str, str]]]:
    """(tool, action) pairs for each cluster; cluster ``k`` is one tool."""
    out = []
    for k in range(config.vocab_clusters):
        tool = TOOLS[k % len(TOOLS)] + ("" if k < len(TOOLS) else str(k // len(TOOLS)))
        out.append([(tool, ACTIONS[j]) for j in range(config.labels_per_cluster)])
    return out


def _uniform_ms(rng, bounds, scale, size=None):
    lo, hi = bounds
    return np.floor(rng.uniform(lo * scale, hi * scale, size=size)).astype(np.int64)


def _phase_times(rng, start, end, gap_bounds):
    """Event start times in ``[start, end)`` with gaps drawn from ``gap_bounds`` seconds."""
    lo_ms = max(gap_bounds[0] * 1000.0, 0.0)
    mean_gap = max((gap_bounds[0] + gap_bounds[1]) * 500.0, 1.0)
    budget = int((end - start) / mean_gap * 1.5) + 8
    times = []
    t = start
    while True:
        gaps = _uniform_ms(rng, gap_bounds, 1000.0, size=budget)
        if lo_ms <= 0:
            gaps = np.maximum(gaps, 0)
        cum = t + np.cumsum(gaps)
        inside = cum[cum < end]
        times.append(inside)
        if len(inside) < len(cum):
            break
        t = int(cum[-1])
    return np.concatenate(times) if times else np.empty(0, dtype=np.int64)


def _actor(config: SynthConfig, index: int, labels):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(config.seed, spawn_key=(index,))))
    actor = f"u{index:04d}"
    flat = [lab for cl in labels for lab in cl]
    n_per = config.labels_per_cluster
    events: list[Event] = []
    phases: list[Phase] = []
    for day in range(config.days):
        day_start = EPOCH_START_MS + day * DAY_MS + int(_uniform_ms(rng, config.day_start_minute, MINUTE_MS))
        day_end = day_start + int(_uniform_ms(rng, config.workday_minutes, MINUTE_MS))
        focus = bool(rng.integers(0, 2)) or not config.diffuse_phases
        t = day_start
        while t < day_end:
            bounds = config.focus_phase_minutes if focus else config.diffuse_phase_minutes
            end = min(day_end, t + max(int(_uniform_ms(rng, bounds, MINUTE_MS)), 1))
            if focus:
                cluster = int(rng.integers(0, config.vocab_clusters))
                times = _phase_times(rng, t, end, config.focus_event_gap_seconds)
                # first event lands on the phase boundary
                times = np.concatenate(([t], times))
                escape = rng.random(len(times)) < config.cluster_escape_prob
                own = rng.integers(0, n_per, size=len(times))
                other = rng.integers(0, len(flat) - n_per, size=len(times)) if len(flat) > n_per else own
                for ts, esc, o, x in zip(times.tolist(), escape.tolist(), own.tolist(), other.tolist()):
                    if esc and len(flat) > n_per:
                        # skip over this cluster's block of labels
                        j = x if x < cluster * n_per else x + n_per
                        tool, action = flat[j]
                    else:
                        tool, action = labels[cluster][o]
                    events.append(Event(actor, tool, action, ts))
                phases.append(Phase(actor, t, end, "focus", cluster, day))
            else:
                times = _phase_times(rng, t, end, config.diffuse_event_gap_seconds)
                times = np.concatenate(([t], times))
                if rng.random() < config.diffuse_idle_prob:
                    # a silent block, e.g. a meeting; activity resumes when it ends
                    idle = int(_uniform_ms(rng, config.diffuse_idle_minutes, MINUTE_MS))
                    lo = t + int(rng.integers(0, max(end - t - idle, 1)))
                    hi = lo + idle
                    times = times[(times < lo) | (times >= hi)]
                    if hi < end:
                        times = np.union1d(times, [hi])
                picks = rng.integers(0, len(flat), size=len(times))
                for ts, j in zip(times.tolist(), picks.tolist()):
                    tool, action = flat[j]
                    events.append(Event(actor, tool, action, ts))
                phases.append(Phase(actor, t, end, "diffuse", None, day))
            t = end
            if config.diffuse_phases:
                focus = not focus
    return events, phases


def generate(config: SynthConfig | None = None) -> SynthData:
    config = config or SynthConfig()
    labels = cluster_labels(config)
    events: list[Event] = []
    phases: list[Phase] = []
    for i in range(config.n_actors):
        ev, ph = _actor(config, i, labels)
        events.extend(ev)
        phases.extend(ph)
    return SynthData(config, events, phases)


# The frozen acceptance fixture. Phases are longer than the defaults so a
# 60-minute window usually sits inside one phase, and half the diffuse phases
# contain a silent block that splits the day into several activity sessions.
FIXTURE_CONFIG = SynthConfig(
    seed=7,
    n_actors=50,
    days=10,
    focus_phase_minutes=(45.0, 150.0),
    diffuse_phase_minutes=(45.0, 120.0),
    cluster_escape_prob=0.1,
    diffuse_idle_prob=0.5,
)

FIXTURE_FILES = ("events.jsonl", "diaries.csv", "ground_truth.jsonl", "synth_config.json")


def write_fixture(data: SynthData, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    contents = {
        "events.jsonl": data.events_jsonl(),
        "diaries.csv": data.diaries_csv(),
        "ground_truth.jsonl": data.ground_truth_jsonl(),
        "synth_config.json": json.dumps(asdict(data.config), indent=2, sort_keys=True) + "\n",
    }
    paths = {}
    for name, text in contents.items():
        p = out / name
        p.write_bytes(text.encode("utf-8"))
        paths[name] = p
    return paths
