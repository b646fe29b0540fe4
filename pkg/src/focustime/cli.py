"""Command-line entry point: ``focustime <command> ...``.

Each command writes its artifacts under ``--out`` and prints a JSON summary
(resolved configuration, input digests, headline results) to stdout.
Exit codes: 0 success, 1 validation/usage error, 2 I/O or format error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

from . import aggregate as agg
from . import embedding, ingest, synth, validation
from .errors import FocusTimeError, FormatError, ValidationError
from .focus import MINUTE_MS, FocusParams, FocusScorer, FocusSession

CONFIG_SECTIONS = {
    "ingest": ingest.IngestConfig,
    "train": embedding.TrainConfig,
    "focus": FocusParams,
    "grid": validation.GridSpec,
    "synth": synth.SynthConfig,
}
EXTRA_SECTIONS = {"validation": {"overlap_fraction": 0.5, "percentile": 90.0}}


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def load_config(path) -> dict[str, dict]:
    """Read a JSON config file and reject unknown sections or keys."""
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("config must be a JSON object")
    out = {}
    for section, values in raw.items():
        if section in CONFIG_SECTIONS:
            allowed = {f.name for f in dataclasses.fields(CONFIG_SECTIONS[section])}
        elif section in EXTRA_SECTIONS:
            allowed = set(EXTRA_SECTIONS[section])
        else:
            raise ValidationError(f"unknown config section {section!r}")
        if not isinstance(values, dict):
            raise ValidationError(f"config section {section!r} must be an object")
        unknown = sorted(set(values) - allowed)
        if unknown:
            raise ValidationError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
        out[section] = dict(values)
    return out


def _build(section: str, cfg: dict, overrides: dict):
    values = dict(cfg.get(section, {}))
    values.update({k: v for k, v in overrides.items() if v is not None})
    cls = CONFIG_SECTIONS[section]
    for f in dataclasses.fields(cls):
        if f.name in values and isinstance(values[f.name], list):
            values[f.name] = tuple(values[f.name])
    try:
        return cls(**values)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def _extra(section: str, cfg: dict, key: str, override):
    if override is not None:
        return override
    return cfg.get(section, {}).get(key, EXTRA_SECTIONS[section][key])


def digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return "sha256:" + h.hexdigest()


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> Path:
    path.write_bytes(text.encode("utf-8"))
    return path


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _asdict(obj) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(obj)))


def read_focus_sessions(path) -> list[FocusSession]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                o = json.loads(line)
                out.append(FocusSession(o["actor"], int(o["start_ms"]), int(o["end_ms"]),
                                        float(o["mean_value"]), int(o["event_count"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed focus session: {exc}") from exc
    return out


def _inputs(**paths) -> dict:
    return {name: {"path": str(p), "digest": digest(p)} for name, p in paths.items() if p is not None}


def _outputs(*paths: Path) -> dict:
    return {p.name: digest(p) for p in paths}


# -- commands ----------------------------------------------------------------

def cmd_synth(args, cfg):
    config = _build("synth", cfg, {"seed": args.seed, "n_actors": args.n_actors, "days": args.days})
    data = synth.generate(config)
    paths = synth.write_fixture(data, _out_dir(args))
    return {
        "config": {"synth": _asdict(config)},
        "n_events": len(data.events),
        "n_phases": len(data.phases),
        "n_diaries": len({iv.diary_id for iv in data.intervals}),
        "outputs": _outputs(*paths.values()),
    }


def cmd_ingest(args, cfg):
    gap = None if args.gap_minutes is None else int(round(args.gap_minutes * MINUTE_MS))
    config = _build("ingest", cfg, {"format": args.format, "inactivity_gap_ms": gap,
                                    "strict": True if args.strict else None})
    events, diags = ingest.read_events(args.input, config)
    sessions = ingest.sessionize(events, config.inactivity_gap_ms)
    out = Path(args.out)
    if out.suffix == ".jsonl":
        out.parent.mkdir(parents=True, exist_ok=True)
        target = out
    else:
        target = _out_dir(args) / "sessions.jsonl"
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        ingest.write_sessions(sessions, fh)
    return {
        "config": {"ingest": _asdict(config)},
        "inputs": _inputs(events=args.input),
        "n_events": len(events),
        "n_rejected": len(diags),
        "diagnostics": [str(d) for d in diags[:50]],
        "n_sessions": len(sessions),
        "n_actors": len({s.actor_id for s in sessions}),
        "outputs": _outputs(target),
    }


def cmd_train(args, cfg):
    config = _build("train", cfg, {
        "dims": args.dims, "context_window": args.window, "min_count": args.min_count,
        "negative_samples": args.negative, "epochs": args.epochs, "seed": args.seed,
    })
    sessions = ingest.read_sessions(args.sessions)
    corpus = embedding.build_corpus(sessions, config.min_count)
    model = embedding.train(corpus, config, workers=args.jobs)
    target = _out_dir(args) / "model.ftem"
    embedding.save(model, target)
    return {
        "config": {"train": _asdict(config), "jobs": args.jobs},
        "inputs": _inputs(sessions=args.sessions),
        "vocab_size": len(model.vocab),
        "corpus_stats": model.corpus_stats,
        "deterministic": args.jobs <= 1,
        "outputs": _outputs(target),
    }


def cmd_nearest(args, cfg):
    model = embedding.load(args.model)
    result = [{"label": w, "distance": d} for w, d in model.nearest(args.label, args.k)]
    summary = {"inputs": _inputs(model=args.model), "label": args.label, "k": args.k,
               "nearest": result}
    if args.out:
        target = _write(_out_dir(args) / "nearest.json", _json(result))
        summary["outputs"] = _outputs(target)
    return summary


def _focus_params(args, cfg) -> FocusParams:
    return _build("focus", cfg, {
        "window_ms": None if args.window_minutes is None else int(round(args.window_minutes * MINUTE_MS)),
        "buffer_ms": args.buffer_ms,
        "threshold": args.threshold,
        "merge_gap_ms": None if args.merge_gap_minutes is None else int(round(args.merge_gap_minutes * MINUTE_MS)),
    })


def _params_echo(p: FocusParams) -> dict:
    return {**_asdict(p), "window_minutes": p.window_ms / MINUTE_MS,
            "merge_gap_minutes": p.merge_gap_ms / MINUTE_MS}


def cmd_score(args, cfg):
    params = _focus_params(args, cfg)
    sessions = ingest.read_sessions(args.sessions)
    model = embedding.load(args.model)
    scorer = FocusScorer(sessions, model)
    focus = scorer.focus_sessions(params)
    out = _out_dir(args)
    target = out / "focus_sessions.jsonl"
    _write(target, "".join(json.dumps(f.to_json(), separators=(",", ":")) + "\n" for f in focus))
    written = [target]
    if args.dump_windows:
        buf = [["actor", "session_start_ms", "anchor", "start_ms", "end_ms", "n_events", "value"]]
        for w in scorer.windows(params):
            buf.append([w.actor_id, w.session_start_ms, w.anchor_event_index, w.start_ms, w.end_ms,
                        w.event_count, repr(w.value)])
        wpath = out / "windows.csv"
        with open(wpath, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(buf)
        written.append(wpath)
    focus_ms = sum(f.length_ms for f in focus)
    return {
        "config": {"focus": _params_echo(params)},
        "inputs": _inputs(sessions=args.sessions, model=args.model),
        "n_sessions": len(sessions),
        "n_focus_sessions": len(focus),
        "focus_hours": focus_ms / 3_600_000,
        "outputs": _outputs(*written),
    }


def cmd_validate(args, cfg):
    overlap = _extra("validation", cfg, "overlap_fraction", args.overlap)
    focus = read_focus_sessions(args.focus)
    intervals = validation.read_diaries(args.diaries)
    sessions = ingest.read_sessions(args.sessions) if args.sessions else None
    report = validation.evaluate(focus, intervals, overlap, sessions)
    target = _write(_out_dir(args) / "agreement.json", _json(report.to_json()))
    return {
        "config": {"validation": {"overlap_fraction": overlap}},
        "inputs": _inputs(focus=args.focus, diaries=args.diaries, sessions=args.sessions),
        "median_pabak": report.median_pabak,
        "n_diaries": len(report.per_diary),
        "n_intervals_without_activity": sum(d.no_activity for d in report.per_diary),
        "outputs": _outputs(target),
    }


def _floats(text):
    return None if text is None else tuple(float(v) for v in text.split(","))


def cmd_grid(args, cfg):
    windows = _floats(args.windows_minutes)
    spec = _build("grid", cfg, {
        "thresholds": _floats(args.thresholds),
        "windows_ms": None if windows is None else tuple(int(round(w * MINUTE_MS)) for w in windows),
        "buffers_ms": _floats(args.buffers_ms),
    })
    overlap = _extra("validation", cfg, "overlap_fraction", args.overlap)
    merge_gap = _build("focus", cfg, {}).merge_gap_ms
    sessions = ingest.read_sessions(args.sessions)
    model = embedding.load(args.model)
    intervals = validation.read_diaries(args.diaries)
    result = validation.grid_search(sessions, model, intervals, spec, merge_gap, overlap, jobs=args.jobs)
    out = _out_dir(args)
    grid_csv = _write(out / "grid.csv", result.to_csv())
    n_diaries = len({validation.diary_key(iv) for iv in intervals})
    gsum = {"best": result.best.to_json(), "n_diaries": n_diaries, "n_grid_points": len(result.rows)}
    gjson = _write(out / "grid_summary.json", _json(gsum))
    return {
        "config": {"grid": _asdict(spec), "merge_gap_ms": merge_gap,
                   "validation": {"overlap_fraction": overlap}},
        "inputs": _inputs(sessions=args.sessions, model=args.model, diaries=args.diaries),
        **gsum,
        "outputs": _outputs(grid_csv, gjson),
    }


def cmd_benchmarks(args, cfg):
    pct = _extra("validation", cfg, "percentile", args.percentile)
    overlap = _extra("validation", cfg, "overlap_fraction", args.overlap)
    sessions = ingest.read_sessions(args.sessions)
    intervals = validation.read_diaries(args.diaries)
    reports = {
        "session_length": validation.naive_session_length_benchmark(sessions, intervals, pct, overlap),
        "event_count": validation.naive_event_count_benchmark(sessions, intervals, pct, overlap),
    }
    target = _write(_out_dir(args) / "benchmarks.json",
                    _json({k: r.to_json() for k, r in reports.items()}))
    return {
        "config": {"validation": {"percentile": pct, "overlap_fraction": overlap}},
        "inputs": _inputs(sessions=args.sessions, diaries=args.diaries),
        "median_pabak": {k: r.median_pabak for k, r in reports.items()},
        "cutoffs": {k: r.meta["cutoff"] for k, r in reports.items()},
        "outputs": _outputs(target),
    }


def cmd_aggregate(args, cfg):
    sessions = ingest.read_sessions(args.sessions)
    focus = read_focus_sessions(args.focus)
    rows = agg.quarter_metrics(focus, sessions)
    target = _write(_out_dir(args) / "quarters.csv", agg.aggregates_to_csv(rows))
    return {
        "config": {"calendar": "utc-quarters", "active_day": "utc-day-with-session-start"},
        "inputs": _inputs(sessions=args.sessions, focus=args.focus),
        "n_rows": len(rows),
        "n_without_active_time": sum(r.no_active_time for r in rows),
        "outputs": _outputs(target),
    }


def cmd_fit(args, cfg):
    with open(args.aggregates, newline="", encoding="utf-8") as fh:
        aggs = {(r["actor"], r["quarter"]): r for r in csv.DictReader(fh)}
    with open(args.scores, newline="", encoding="utf-8") as fh:
        scores = list(csv.DictReader(fh))
    if args.metric not in agg.CSV_COLUMNS[2:]:
        raise ValidationError(f"unknown metric {args.metric!r}")
    x, y = [], []
    for rec in scores:
        try:
            key = (rec["actor"], rec["quarter"])
            if key in aggs:
                x.append(float(aggs[key][args.metric]))
                y.append(float(rec["score"]))
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"bad scores row: {exc}") from exc
    fit = agg.linear_fit(x, y)
    target = _write(_out_dir(args) / "fit.json", _json({"metric": args.metric, **fit.to_json()}))
    return {
        "config": {"metric": args.metric},
        "inputs": _inputs(aggregates=args.aggregates, scores=args.scores),
        "fit": fit.to_json(),
        "outputs": _outputs(target),
    }


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="focustime", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON config file; command-line flags override it")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic fixture corpus")
    s.add_argument("--seed", type=int)
    s.add_argument("--n-actors", type=int)
    s.add_argument("--days", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("ingest", help="parse an event log and split it into sessions")
    s.add_argument("--input", required=True)
    s.add_argument("--format", choices=("jsonl", "csv"))
    s.add_argument("--gap-minutes", type=float)
    s.add_argument("--strict", action="store_true")
    s.add_argument("--out", required=True, help="output directory, or a .jsonl file path")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("train", help="train label embeddings")
    s.add_argument("--sessions", required=True)
    s.add_argument("--dims", type=int)
    s.add_argument("--window", type=int)
    s.add_argument("--min-count", type=int)
    s.add_argument("--negative", type=int)
    s.add_argument("--epochs", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("nearest", help="closest labels in embedding space")
    s.add_argument("--model", required=True)
    s.add_argument("--label", required=True)
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--out")
    s.set_defaults(func=cmd_nearest)

    def focus_flags(sp):
        sp.add_argument("--window-minutes", type=float)
        sp.add_argument("--buffer-ms", type=float)
        sp.add_argument("--threshold", type=float)
        sp.add_argument("--merge-gap-minutes", type=float)

    s = sub.add_parser("score", help="compute focus sessions")
    s.add_argument("--sessions", required=True)
    s.add_argument("--model", required=True)
    focus_flags(s)
    s.add_argument("--dump-windows", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("validate", help="PABAK of focus sessions against diaries")
    s.add_argument("--focus", required=True)
    s.add_argument("--diaries", required=True)
    s.add_argument("--sessions")
    s.add_argument("--overlap", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("grid", help="grid search over threshold, window and buffer")
    s.add_argument("--sessions", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--diaries", required=True)
    s.add_argument("--thresholds")
    s.add_argument("--windows-minutes")
    s.add_argument("--buffers-ms")
    s.add_argument("--overlap", type=float)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_grid)

    s = sub.add_parser("benchmarks", help="naive session-length and event-count baselines")
    s.add_argument("--sessions", required=True)
    s.add_argument("--diaries", required=True)
    s.add_argument("--percentile", type=float)
    s.add_argument("--overlap", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_benchmarks)

    s = sub.add_parser("aggregate", help="quarterly focus metrics")
    s.add_argument("--sessions", required=True)
    s.add_argument("--focus", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_aggregate)

    s = sub.add_parser("fit", help="single-predictor OLS of survey scores on a quarterly metric")
    s.add_argument("--aggregates", required=True)
    s.add_argument("--scores", required=True, help="CSV with actor,quarter,score")
    s.add_argument("--metric", default="focus_session_count")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config)
        summary = args.func(args, cfg)
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)
    except (FormatError, OSError) as exc:
        print(f"focustime: error: {exc}", file=sys.stderr)
        return 2
    except FocusTimeError as exc:
        print(f"focustime: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(_json({"command": args.command, **summary}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
