"""Command-line front end.

Exit codes: 0 success, 1 internal error, 2 bad usage or bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import List, Optional

import jsonschema

from .evaluation import PRECISION_HEADER, write_csv
from .external import KnowledgeBaseError, build_knowledge_base
from .pipeline import PipelineError, RunConfig, cross_window_precision, run_pipeline
from .report import ReportError, write_report
from .stream import load_stream

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2

# pipeline stages whose failures come from the caller's files, not from us
INPUT_STAGES = {"ingest", "load_kb", "build_kb", "replay", "precision", "topics"}

log = logging.getLogger("proactive_qe")


class InputError(Exception):
    """Bad input reported to the user with exit code 2."""


def _read_overrides(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    return data


def _set(overrides: dict, section: Optional[str], key: str, value) -> None:
    if value is None:
        return
    if section is None:
        overrides[key] = value
    else:
        overrides.setdefault(section, {})[key] = value


def _resolve(overrides: dict) -> RunConfig:
    try:
        return RunConfig.from_dict(overrides)
    except jsonschema.ValidationError as exc:
        raise InputError(f"invalid config: {exc.message}") from exc
    except ValueError as exc:
        raise InputError(f"invalid config: {exc}") from exc


def _echo(title: str, payload: dict) -> None:
    print(f"{title}:")
    print(json.dumps(payload, indent=1, sort_keys=True))
    sys.stdout.flush()


def cmd_build_kb(args) -> int:
    overrides = _read_overrides(args.config)
    for key, value in (("dim", args.dim), ("epochs", args.epochs), ("min_count", args.min_count)):
        _set(overrides, "kb", key, value)
    _set(overrides, None, "seed", args.seed)
    _set(overrides, None, "workers", args.workers)
    cfg = _resolve(overrides)
    kb_cfg = cfg.kb
    if cfg.workers > 1:
        kb_cfg = type(kb_cfg)(**{**asdict(kb_cfg), "workers": cfg.workers})
    _echo("kb config", asdict(kb_cfg))

    try:
        corpus = load_stream(args.corpus, require_timestamp=False)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    try:
        kb = build_knowledge_base(corpus, kb_cfg)
    except KnowledgeBaseError as exc:
        raise InputError(str(exc)) from exc
    vpath, bpath = kb.save(args.out)
    print(f"vocabulary size: {len(kb.vectors)}")
    print(f"bigram pairs: {len(kb.bigrams)}")
    print(f"corpus fingerprint: {kb.vectors.trained_on}")
    print(f"wrote {vpath} and {bpath}")
    return EXIT_OK


def cmd_run(args) -> int:
    overrides = _read_overrides(args.config)
    _set(overrides, None, "seed", args.seed)
    _set(overrides, None, "workers", args.workers)
    _set(overrides, None, "l", args.l)
    _set(overrides, "window", "window_minutes", args.window_minutes)
    cfg = _resolve(overrides)
    _echo("config", cfg.raw)
    if not Path(args.kb).is_dir():
        raise InputError(f"knowledge base directory not found: {args.kb}")
    manifest = run_pipeline(args.stream, args.kb, cfg, args.out)
    print(f"windows: {manifest.windows_total}")
    print(f"triggered: {manifest.triggered}")
    print(f"wrote {Path(args.out) / 'manifest.json'}")
    return EXIT_OK


def cmd_precision(args) -> int:
    choice = args.hashtags.strip()
    hashtags, auto = None, None
    if choice.startswith("auto:"):
        try:
            auto = int(choice[5:])
        except ValueError:
            raise InputError(f"bad --hashtags value {choice!r}; expected auto:N") from None
        if auto < 1:
            raise InputError("auto:N needs N >= 1")
        if args.target_window is None:
            raise InputError("--hashtags auto:N requires --target-window")
    else:
        hashtags = [h for h in (s.strip() for s in choice.split(",")) if h]
        if not hashtags:
            raise InputError("no hashtags given")
    if not (Path(args.run) / "manifest.json").is_file():
        raise InputError(f"no manifest.json in {args.run}")
    try:
        rows = cross_window_precision(args.run, args.from_window, hashtags, auto,
                                      args.target_window)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.out:
        write_csv(args.out, PRECISION_HEADER, rows)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(PRECISION_HEADER)
        w.writerows(rows)
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run)
    if not run_dir.is_dir() or not any(run_dir.iterdir()):
        raise InputError(f"run directory {run_dir} is missing or empty")
    try:
        written = write_report(run_dir, args.out)
    except ReportError as exc:
        raise InputError(str(exc)) from exc
    charts = [p for p in written if p.suffix == ".svg"]
    print(f"wrote {len(charts)} charts and {written[-1]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proactive-qe",
        description="Emergent-event detection and proactive query expansion over a text stream.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-kb", help="train vectors and count bigrams on an archive corpus")
    p.add_argument("--corpus", required=True, help="JSONL corpus; timestamps optional")
    p.add_argument("--out", required=True, help="output directory for vectors.bin and bigrams.csv")
    p.add_argument("--config", help="JSON config; only the kb section and seed are used")
    p.add_argument("--dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="training threads; >1 is not reproducible")
    p.set_defaults(func=cmd_build_kb)

    p = sub.add_parser("run", help="process a recorded stream end to end")
    p.add_argument("--stream", required=True, help="JSONL stream with id, timestamp, text")
    p.add_argument("--kb", required=True, help="knowledge base directory from build-kb")
    p.add_argument("--config", help="JSON config; omitted keys take the documented defaults")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker threads for matching and scoring")
    p.add_argument("--l", type=int, help="minimum distinct query terms per match")
    p.add_argument("--window-minutes", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("precision", help="hashtag precision of one window's stored queries")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--from-window", type=int, required=True, help="triggered window whose queries are scored")
    p.add_argument("--hashtags", required=True, help="comma-separated hashtags, or auto:N")
    p.add_argument("--target-window", type=int, help="window that auto:N picks hashtags from")
    p.add_argument("--out", help="CSV path; stdout when omitted")
    p.set_defaults(func=cmd_precision)

    p = sub.add_parser("report", help="SVG charts and a summary table from metrics.csv")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--out", required=True, help="output directory for the charts")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT if exc.stage in INPUT_STAGES else EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
