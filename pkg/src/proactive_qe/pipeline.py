"""Batch replay of a recorded stream through detection, expansion and scoring.

Output directory layout::

    manifest.json
    dec/<window>.csv        per-window dynamic word ranking
    topics/<window>.json    topics of each evaluated window
    queries/<window>.json   four queries per topic
    results/<window>.csv    matched document ids
    metrics.csv             volume, hashtag count, optimal k
    precision.csv           per-hashtag precision

Windows are scanned strictly in order for emergence; evaluated windows are
then expanded and matched against the stream from that window to the end.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import jsonschema
import numpy as np

from . import emergence, evaluation
from .emergence import DecReport, EmergenceTracker, TriggerConfig
from .evaluation import ConcisenessConfig
from .expansion import (Query, QueryResult, QueryRun, build_queries, dump_queries,
                        load_queries, read_results_manifest, write_results_manifest)
from .external import KbConfig, KnowledgeBase, build_knowledge_base
from .stream import (Document, LoadStats, Window, WindowConfig, assign_windows,
                     load_stream, stream_slice)
from .topics import LdaConfig, TopicSet, fit_lda

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1


class PipelineError(RuntimeError):
    """A stage failed; carries the window index and stage name."""

    def __init__(self, message: str, window: Optional[int] = None, stage: str = ""):
        self.window = window
        self.stage = stage
        where = f"window {window}, stage {stage}: " if window is not None else (
            f"stage {stage}: " if stage else "")
        super().__init__(where + message)


# ---------------------------------------------------------------------------
# configuration


def config_schema() -> dict:
    text = resources.files("proactive_qe.data").joinpath("config.schema.json").read_text("utf-8")
    return json.loads(text)


def default_config() -> dict:
    """Resolved default configuration, built from the schema defaults."""
    out = {}
    for key, prop in config_schema()["properties"].items():
        if prop.get("type") == "object":
            out[key] = {k: copy.deepcopy(v.get("default")) for k, v in prop["properties"].items()}
        else:
            out[key] = prop.get("default")
    return out


def merge_config(overrides: Optional[dict]) -> dict:
    """Validate ``overrides`` against the schema and lay them over defaults."""
    overrides = overrides or {}
    jsonschema.validate(overrides, config_schema())
    cfg = default_config()
    for key, value in overrides.items():
        if isinstance(value, dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    return cfg


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return merge_config(json.load(fh))


def _subseed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


@dataclass
class RunConfig:
    window: WindowConfig = field(default_factory=WindowConfig)
    trigger: TriggerConfig = field(default_factory=TriggerConfig)
    lda: LdaConfig = field(default_factory=LdaConfig)
    kb: KbConfig = field(default_factory=KbConfig)
    l: int = 2
    conciseness: ConcisenessConfig = field(default_factory=ConcisenessConfig)
    precision_hashtags: Tuple[str, ...] = ()
    precision_auto: int = 2
    extra_windows: Tuple[int, ...] = ()
    warmup: Optional[int] = None
    tol: float = 1e-8
    max_iter: int = 1000
    seed: int = 0
    workers: int = 1
    raw: dict = field(default_factory=default_config)

    @classmethod
    def from_dict(cls, overrides: Optional[dict] = None) -> "RunConfig":
        c = merge_config(overrides)
        seed = c["seed"]
        tr, lda, kb, ev = c["trigger"], c["lda"], c["kb"], c["evaluation"]
        if kb["maxn"] < kb["minn"] or ev["k_max"] <= ev["k_min"]:
            raise ValueError("need kb.minn <= kb.maxn and evaluation.k_min < k_max")
        return cls(
            window=WindowConfig(**c["window"]),
            trigger=TriggerConfig(tr["d"], tr["P"], tr["th"]),
            lda=LdaConfig(seed=seed, **lda),
            kb=KbConfig(seed=_subseed(seed, 2), workers=1, **kb),
            l=c["l"],
            conciseness=ConcisenessConfig(ev["H"], ev["k_min"], ev["k_max"],
                                          _subseed(seed, 3), ev["n_init"]),
            precision_hashtags=tuple(h.lower() for h in ev["precision_hashtags"]),
            precision_auto=ev["precision_auto"],
            extra_windows=tuple(sorted(set(ev["extra_windows"]))),
            warmup=tr["warmup"],
            tol=tr["tol"],
            max_iter=tr["max_iter"],
            seed=seed,
            workers=c["workers"],
            raw=c,
        )

    def lda_for_window(self, window_index: int, seed: Optional[int] = None) -> LdaConfig:
        base = self.seed if seed is None else seed
        lda = self.lda
        return LdaConfig(lda.m, lda.k, lda.alpha, lda.beta, lda.iterations,
                         _subseed(base, 1, window_index))


# ---------------------------------------------------------------------------
# matching index


class InvertedIndex:
    """Token -> positions of documents containing it, for fast l-of-n matching."""

    def __init__(self, docs: Sequence[Document]):
        self.docs = list(docs)
        postings: Dict[str, List[int]] = defaultdict(list)
        for pos, d in enumerate(self.docs):
            for tok in set(d.tokens):
                postings[tok].append(pos)
        self.postings = dict(postings)

    def match(self, q: Query) -> QueryResult:
        hits = np.zeros(len(self.docs), dtype=np.int64)
        for term in q.terms:
            plist = self.postings.get(term)
            if plist:
                hits[plist] += 1
        return QueryResult(q, tuple(self.docs[p] for p in np.flatnonzero(hits >= q.l)))


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    windows_total: int
    triggered: List[int]
    evaluated: List[int]
    artifacts: Dict[str, Dict[str, str]]
    stream: dict
    kb: dict
    config: dict
    similarities: List[Optional[float]]
    run_dir: Optional[Path] = None

    @property
    def windows_triggered(self) -> int:
        return len(self.triggered)

    def to_json(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "windows_total": self.windows_total,
            "windows_triggered": self.windows_triggered,
            "triggered": self.triggered,
            "evaluated": self.evaluated,
            "artifacts": self.artifacts,
            "metrics": "metrics.csv",
            "precision": "precision.csv",
            "stream": self.stream,
            "kb": self.kb,
            "config": self.config,
            "max_jaccard": self.similarities,
        }

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / "manifest.json"
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            windows_total=data["windows_total"],
            triggered=data["triggered"],
            evaluated=data["evaluated"],
            artifacts=data["artifacts"],
            stream=data["stream"],
            kb=data["kb"],
            config=data["config"],
            similarities=data["max_jaccard"],
            run_dir=path.parent,
        )


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# stages


def _load_kb(kb_path, corpus_path, cfg: RunConfig) -> Tuple[Optional[KnowledgeBase], dict]:
    if kb_path is not None:
        try:
            kb = KnowledgeBase.load(kb_path)
        except (OSError, ValueError) as exc:
            raise PipelineError(str(exc), stage="load_kb") from exc
        kb_dir = Path(kb_path)
        info = {
            "path": str(kb_path),
            "vectors_sha256": file_sha256(kb_dir / "vectors.bin"),
            "bigrams_sha256": file_sha256(kb_dir / "bigrams.csv"),
        }
        return kb, info
    if corpus_path is not None:
        try:
            corpus = load_stream(corpus_path, require_timestamp=False)
            kb = build_knowledge_base(corpus, cfg.kb)
        except (OSError, ValueError) as exc:
            raise PipelineError(str(exc), stage="build_kb") from exc
        return kb, {"corpus": str(corpus_path), "corpus_sha256": file_sha256(corpus_path)}
    return None, {}


def detect(windows: Sequence[Window], cfg: RunConfig) -> Tuple[List[DecReport], List[int], EmergenceTracker]:
    """Sequential emergence pass over every window."""
    tracker = EmergenceTracker(cfg.trigger, tol=cfg.tol, max_iter=cfg.max_iter, warmup=cfg.warmup)
    reports, triggered = [], []
    for w in windows:
        try:
            report, fired = tracker.observe(w)
        except Exception as exc:
            raise PipelineError(str(exc), w.index, "emergence") from exc
        reports.append(report)
        if fired:
            triggered.append(w.index)
    return reports, triggered, tracker


def expand_window(window: Window, report: DecReport, windows: Sequence[Window],
                  kb: Optional[KnowledgeBase], cfg: RunConfig,
                  seed: Optional[int] = None, index: Optional[InvertedIndex] = None,
                  ) -> Tuple[TopicSet, List[Query], QueryRun]:
    """Topics, the four queries per topic, and their matches from this window on."""
    try:
        topics = fit_lda(window.documents, cfg.lda_for_window(window.index, seed))
    except ValueError as exc:
        raise PipelineError(str(exc), window.index, "topics") from exc
    queries = build_queries(
        topics, report, k=cfg.lda.k, d=cfg.trigger.d, l=cfg.l,
        V=kb.vectors if kb else None, F=kb.bigrams if kb else None,
        i=cfg.kb.i, j=cfg.kb.j,
    )
    if index is None:
        index = InvertedIndex(stream_slice(windows, window.index))
    results = _map(index.match, queries, cfg.workers)
    return topics, queries, QueryRun(window.index, tuple(results))


def _map(fn, items, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def metric_rows(run: QueryRun, cfg: RunConfig) -> List[list]:
    def one(r: QueryResult) -> list:
        c = evaluation.conciseness(r, cfg.conciseness)
        return [run.window_index, r.query.topic_id, r.query.method,
                evaluation.volume(r), evaluation.relevance(r), c.optimal_k]
    return _map(one, run.results, cfg.workers)


def precision_rows(run: QueryRun, hashtags: Sequence[str],
                   slice_docs: Sequence[Document]) -> List[list]:
    rows = []
    for r in run.results:
        for h in hashtags:
            rows.append([run.window_index, r.query.topic_id, r.query.method, h,
                         evaluation.format_precision(evaluation.precision(h, r, slice_docs))])
    return rows


# ---------------------------------------------------------------------------
# driver


def run_pipeline(stream_path, kb_path, cfg: RunConfig, out_dir,
                 corpus_path=None) -> RunManifest:
    """Process the stream end to end and write the output directory.

    ``kb_path`` is a directory with ``vectors.bin`` and ``bigrams.csv``; when
    it is ``None`` and ``corpus_path`` is given the knowledge base is built
    on the fly. Without either, the proactive queries equal the emergent ones.
    """
    out = Path(out_dir)
    for sub in ("dec", "topics", "queries", "results"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    stats = LoadStats()
    try:
        docs = load_stream(stream_path, stats=stats)
        windows = assign_windows(docs, cfg.window)
    except (OSError, ValueError) as exc:
        raise PipelineError(str(exc), stage="ingest") from exc
    kb, kb_info = _load_kb(kb_path, corpus_path, cfg)

    reports, triggered, tracker = detect(windows, cfg)
    for report in reports:
        emergence.write_dec_csv(report, out / "dec" / f"{report.window_index}.csv")

    evaluated = sorted(set(triggered) | {w for w in cfg.extra_windows if w < len(windows)})
    evaluated = [w for w in evaluated if windows[w].documents]
    logger.info("%d windows, %d triggered, %d evaluated",
                len(windows), len(triggered), len(evaluated))

    artifacts: Dict[str, Dict[str, str]] = {}
    runs: List[QueryRun] = []
    for w in evaluated:
        topics, queries, run = expand_window(windows[w], reports[w], windows, kb, cfg)
        paths = {
            "dec": f"dec/{w}.csv",
            "topics": f"topics/{w}.json",
            "queries": f"queries/{w}.json",
            "results": f"results/{w}.csv",
        }
        topics.dump(out / paths["topics"], cfg.lda.k)
        dump_queries(w, queries, out / paths["queries"])
        write_results_manifest(run, out / paths["results"])
        artifacts[str(w)] = paths
        runs.append(run)

    metrics, precisions = [], []
    for run in runs:
        try:
            metrics.extend(metric_rows(run, cfg))
            slice_docs = stream_slice(windows, run.window_index)
            hashtags = list(cfg.precision_hashtags) or evaluation.select_hashtags(
                slice_docs, cfg.precision_auto)
            precisions.extend(precision_rows(run, hashtags, slice_docs))
        except Exception as exc:
            raise PipelineError(str(exc), run.window_index, "evaluation") from exc
    evaluation.write_csv(out / "metrics.csv", evaluation.METRICS_HEADER, metrics)
    evaluation.write_csv(out / "precision.csv", evaluation.PRECISION_HEADER, precisions)

    manifest = RunManifest(
        windows_total=len(windows),
        triggered=triggered,
        evaluated=evaluated,
        artifacts=artifacts,
        stream={
            "path": str(stream_path),
            "sha256": file_sha256(stream_path),
            "documents": stats.loaded,
            "malformed": stats.malformed,
            "non_english": stats.non_english,
        },
        kb=kb_info,
        config=cfg.raw,
        similarities=[None if s is None else round(s, 12) for s in tracker.similarities],
        run_dir=out,
    )
    manifest.write(out / "manifest.json")
    return manifest


def _replay_inputs(manifest: RunManifest):
    cfg = RunConfig.from_dict(manifest.config)
    docs = load_stream(manifest.stream["path"])
    windows = assign_windows(docs, cfg.window)
    kb_info = manifest.kb
    kb, _ = _load_kb(kb_info.get("path"), kb_info.get("corpus"), cfg)
    return cfg, windows, kb


def replay_window(manifest: RunManifest | str | Path, window_index: int,
                  seed: Optional[int] = None) -> QueryRun:
    """Recompute one evaluated window's query run from the recorded inputs.

    ``seed`` overrides the run seed for the topic model only.
    """
    if not isinstance(manifest, RunManifest):
        manifest = RunManifest.read(manifest)
    if window_index not in manifest.evaluated:
        raise PipelineError(f"window {window_index} was not triggered in this run",
                            window_index, "replay")
    cfg, windows, kb = _replay_inputs(manifest)
    reports, _, _ = detect(windows[: window_index + 1], cfg)
    _, _, run = expand_window(windows[window_index], reports[window_index], windows, kb,
                              cfg, seed=seed)
    return run


def stored_matches(run_dir, window_index: int) -> Dict[Tuple[int, str], List[str]]:
    return read_results_manifest(Path(run_dir) / "results" / f"{window_index}.csv")


def run_matches(run: QueryRun) -> Dict[Tuple[int, str], List[str]]:
    return {(r.query.topic_id, r.query.method): [d.id for d in r.matched]
            for r in run.results if r.matched}


def _stored_run(manifest: RunManifest, window_index: int,
                windows: Sequence[Window]) -> QueryRun:
    """Rebuild a window's query run from its persisted queries and matches."""
    base = manifest.run_dir
    arts = manifest.artifacts[str(window_index)]
    queries = load_queries(base / arts["queries"])
    matched = read_results_manifest(base / arts["results"])
    by_id = {d.id: d for d in stream_slice(windows, window_index)}
    results = []
    for q in queries:
        ids = matched.get((q.topic_id, q.method), [])
        try:
            results.append(QueryResult(q, tuple(by_id[i] for i in ids)))
        except KeyError as exc:
            raise PipelineError(f"stored match {exc} not in the recorded stream",
                                window_index, "precision") from exc
    return QueryRun(window_index, tuple(results))


def cross_window_precision(run_dir, from_window: int, hashtags: Optional[Sequence[str]] = None,
                           auto: Optional[int] = None,
                           target_window: Optional[int] = None) -> List[list]:
    """Precision rows for the stored queries of ``from_window``.

    Either name the ``hashtags`` or pass ``auto`` = N to take the N most and
    N least frequent hashtags of ``target_window``. Counts in the denominator
    run from ``from_window`` to the end of the stream.
    """
    manifest = RunManifest.read(run_dir)
    if from_window not in manifest.evaluated:
        raise PipelineError(f"window {from_window} was not triggered in this run",
                            from_window, "precision")
    if (hashtags is None) == (auto is None):
        raise ValueError("give either hashtags or auto")
    cfg = RunConfig.from_dict(manifest.config)
    try:
        windows = assign_windows(load_stream(manifest.stream["path"]), cfg.window)
    except (OSError, ValueError) as exc:
        raise PipelineError(str(exc), stage="ingest") from exc
    if auto is not None:
        if target_window is None:
            raise ValueError("auto hashtag selection needs a target window")
        if not from_window <= target_window < len(windows):
            raise ValueError(f"target window {target_window} outside "
                             f"[{from_window}, {len(windows) - 1}]")
        hashtags = evaluation.select_hashtags(windows[target_window].documents, auto)
    tags = [h.lower() if h.startswith("#") else "#" + h.lower() for h in hashtags]
    run = _stored_run(manifest, from_window, windows)
    return precision_rows(run, tags, stream_slice(windows, from_window))
