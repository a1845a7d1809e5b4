"""Tokenization, stopword removal and Porter stemming for stream text.

Every document passes through :func:`preprocess_text` exactly once so the
stream, the topic model and the external knowledge base share one token
space.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional

from nltk.stem.porter import PorterStemmer

STOPWORDS_RESOURCE = "stopwords_en_v1.txt"

_URL_RE = re.compile(r"^(?:[a-z][a-z0-9+.\-]*://|www\.)", re.IGNORECASE)
_SPLIT_RE = re.compile(r"[^\w#]+")
_NUMBER_RE = re.compile(r"^\d+$")
_HASHTAG_RE = re.compile(r"#[^\W]+")

_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def load_stopwords(path: Optional[Path] = None) -> FrozenSet[str]:
    """Read a stopword file (one lowercase word per line, UTF-8).

    Without ``path`` the bundled English list is used.
    """
    if path is None:
        text = resources.files("proactive_qe.data").joinpath(STOPWORDS_RESOURCE).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


DEFAULT_STOPWORDS = load_stopwords()


@lru_cache(maxsize=200_000)
def stem(word: str) -> str:
    return _stemmer.stem(word)


def is_number(piece: str) -> bool:
    return bool(_NUMBER_RE.match(piece))


def preprocess_text(raw: str, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> List[str]:
    """Return the ordered list of stemmed tokens for ``raw``.

    URLs and @mentions are dropped as whole whitespace chunks, the rest is
    split on punctuation (``#`` excepted). A hashtag contributes its stemmed
    body as an ordinary token; the raw tag is kept by :func:`extract_hashtags`.
    """
    if not isinstance(stopwords, (set, frozenset)):
        stopwords = frozenset(stopwords)
    tokens: List[str] = []
    for chunk in raw.lower().split():
        if chunk.startswith("@") or _URL_RE.match(chunk):
            continue
        for piece in _SPLIT_RE.split(chunk):
            piece = piece.replace("#", "").strip("_")
            if not piece or is_number(piece) or piece in stopwords:
                continue
            token = stem(piece)
            if token and token not in stopwords and not is_number(token):
                tokens.append(token)
    return tokens


def extract_hashtags(raw: str) -> List[str]:
    """All ``#tag`` occurrences, lowercased, in order, duplicates kept."""
    return [m.group(0).lower() for m in _HASHTAG_RE.finditer(raw)]


def is_mostly_ascii(raw: str, min_fraction: float = 0.6) -> bool:
    """Heuristic English filter: share of ASCII among alphabetic characters.

    Text without any alphabetic character passes.
    """
    letters = [c for c in raw if c.isalpha()]
    if not letters:
        return True
    ascii_letters = sum(1 for c in letters if c.isascii())
    return ascii_letters / len(letters) >= min_fraction
