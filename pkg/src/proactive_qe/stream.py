"""JSONL ingestion and fixed-length windowing of the document stream.

The primary stream is expected to be pre-filtered by the caller (for
example to documents mentioning a seed keyword); nothing here filters on
content beyond the ASCII-share language heuristic.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

from .text_prep import extract_hashtags, is_mostly_ascii, preprocess_text

logger = logging.getLogger(__name__)

MAX_MALFORMED_FRACTION = 0.10
# below this many lines the malformed ratio is not meaningful
MIN_LINES_FOR_RATIO = 10


class StreamError(ValueError):
    """Fatal ingestion or windowing problem."""


@dataclass(frozen=True)
class Document:
    id: str
    timestamp: float
    raw: str
    tokens: Tuple[str, ...]
    hashtags: Tuple[str, ...]

    @classmethod
    def from_text(cls, id: str, timestamp: float, raw: str) -> "Document":
        return cls(
            id=str(id),
            timestamp=float(timestamp),
            raw=raw,
            tokens=tuple(preprocess_text(raw)),
            hashtags=tuple(extract_hashtags(raw)),
        )


@dataclass(frozen=True)
class WindowConfig:
    window_minutes: int = 15
    stream_start: Optional[float] = None

    def __post_init__(self):
        if int(self.window_minutes) != self.window_minutes or self.window_minutes < 1:
            raise ValueError("window_minutes must be a positive integer")

    @property
    def seconds(self) -> int:
        return int(self.window_minutes) * 60


@dataclass(frozen=True)
class Window:
    index: int
    start: float
    end: float
    documents: Tuple[Document, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.documents)


@dataclass
class LoadStats:
    lines: int = 0
    loaded: int = 0
    malformed: int = 0
    non_english: int = 0


def parse_timestamp(value) -> float:
    """Epoch seconds from an integer/float or an RFC 3339 string (UTC)."""
    if isinstance(value, bool):
        raise ValueError("boolean timestamp")
    if isinstance(value, (int, float)):
        ts = float(value)
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        ts = dt.timestamp()
    else:
        raise ValueError(f"unsupported timestamp {value!r}")
    if not math.isfinite(ts):
        raise ValueError("non-finite timestamp")
    return ts


def _parse_line(line: str, require_timestamp: bool) -> Document:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("not a JSON object")
    text = obj["text"]
    if not isinstance(text, str):
        raise ValueError("text must be a string")
    if "timestamp" in obj or require_timestamp:
        ts = parse_timestamp(obj["timestamp"])
    else:
        ts = 0.0
    return Document.from_text(obj["id"], ts, text)


def load_stream(
    path,
    *,
    require_timestamp: bool = True,
    drop_non_english: bool = True,
    stats: Optional[LoadStats] = None,
) -> List[Document]:
    """Load a JSONL file of ``{"id", "timestamp", "text"}`` records.

    Malformed lines are skipped and counted in ``stats``. More than 10% of
    malformed lines (once at least ten lines were read) raises
    :class:`StreamError`, since it usually means the wrong file was passed.
    """
    path = Path(path)
    stats = stats if stats is not None else LoadStats()
    docs: List[Document] = []
    try:
        fh = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise StreamError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            stats.lines += 1
            try:
                doc = _parse_line(line, require_timestamp)
            except (ValueError, KeyError, TypeError) as exc:
                stats.malformed += 1
                logger.debug("%s:%d skipped: %s", path, lineno, exc)
                continue
            if drop_non_english and not is_mostly_ascii(doc.raw):
                stats.non_english += 1
                continue
            docs.append(doc)
    stats.loaded = len(docs)
    if stats.lines >= MIN_LINES_FOR_RATIO and stats.malformed > MAX_MALFORMED_FRACTION * stats.lines:
        raise StreamError(
            f"{path}: {stats.malformed} of {stats.lines} lines malformed; wrong file?"
        )
    if stats.malformed:
        logger.warning("%s: skipped %d malformed line(s)", path, stats.malformed)
    return docs


def default_stream_start(docs: Iterable[Document]) -> float:
    first = min(d.timestamp for d in docs)
    return math.floor(first / 3600.0) * 3600.0


def window_index(timestamp: float, start: float, seconds: int) -> int:
    return int(math.floor((timestamp - start) / seconds))


def assign_windows(docs: Sequence[Document], cfg: WindowConfig) -> List[Window]:
    """Bucket documents into consecutive windows of ``cfg.window_minutes``.

    Empty windows between occupied ones are materialized so window indices
    are contiguous from 0.
    """
    if not docs:
        return []
    ordered = sorted(docs, key=lambda d: d.timestamp)
    start = cfg.stream_start if cfg.stream_start is not None else default_stream_start(ordered)
    width = cfg.seconds
    if ordered[0].timestamp < start:
        raise StreamError(
            f"document {ordered[0].id} at {ordered[0].timestamp} precedes stream_start {start}"
        )
    n_windows = window_index(ordered[-1].timestamp, start, width) + 1
    buckets: List[List[Document]] = [[] for _ in range(n_windows)]
    for doc in ordered:
        buckets[window_index(doc.timestamp, start, width)].append(doc)
    return [
        Window(index=i, start=start + i * width, end=start + (i + 1) * width, documents=tuple(b))
        for i, b in enumerate(buckets)
    ]


def stream_slice(windows: Sequence[Window], first: int) -> List[Document]:
    """Documents from window ``first`` through the end of the stream."""
    return [d for w in windows[first:] for d in w.documents]
