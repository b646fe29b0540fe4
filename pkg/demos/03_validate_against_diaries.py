"""
Recovering planted focus phases
===============================

The frozen fixture plants focus phases (events from one tool cluster) and
diffuse phases (events from anywhere) for 50 actors over 10 days. Its diary
file records which intervals were which. Here we score the log, measure
agreement with PABAK, sweep the parameter grid and compare against two naive
baselines.
"""

from collections import defaultdict

from focustime.embedding import build_corpus, train
from focustime.focus import FocusParams, FocusScorer
from focustime.ingest import sessionize
from focustime.synth import FIXTURE_CONFIG, generate
from focustime.validation import (evaluate, grid_search, naive_event_count_benchmark,
                                  naive_session_length_benchmark)

data = generate(FIXTURE_CONFIG)
sessions = sessionize(data.events)
model = train(build_corpus(sessions))
intervals = data.intervals

# Score with the defaults: 60 minute windows, threshold 0.2, 10 ms buffer.
scorer = FocusScorer(sessions, model)
focus = scorer.focus_sessions(FocusParams())
report = evaluate(focus, intervals, sessions=sessions)
hours = sum(f.length_ms for f in focus) / 3_600_000
print(f"{len(focus)} focus sessions, {hours:.0f} hours in focus")
print(f"median PABAK over {len(report.per_diary)} diaries: {report.median_pabak:.3f}")

# The full 480-point grid. Buffers barely matter, so collapse them.
grid = grid_search(sessions, model, intervals)
table = defaultdict(list)
for row in grid.rows:
    table[row.threshold, row.window_min].append(row.median_pabak)
print("\nmedian PABAK, mean over buffers (rows: window minutes, columns: threshold)")
print("       " + "".join(f"{t:>7}" for t in (0.1, 0.2, 0.3, 0.4)))
for w in range(5, 61, 5):
    cells = [sum(table[t, w]) / len(table[t, w]) for t in (0.1, 0.2, 0.3, 0.4)]
    print(f"{w:>5}  " + "".join(f"{c:7.3f}" for c in cells))
print("best:", grid.best)

# Baselines that call the longest, or busiest, tenth of sessions focused.
for bench in (naive_session_length_benchmark, naive_event_count_benchmark):
    r = bench(sessions, intervals)
    print(f"{r.meta['benchmark']:>15}: median PABAK {r.median_pabak:.3f} "
          f"({r.meta['n_qualifying_sessions']} sessions above cutoff {r.meta['cutoff']})")
