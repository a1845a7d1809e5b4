"""The four query constructions and the query-length matcher.

* static: a topic's top-k words
* emergent: static plus up to d dynamic words not already in the topic
* proactive_vs: emergent plus nearest neighbours from the vector space
* proactive_co: emergent plus top bigram partners

Enrichment words are accumulated per topic; nothing leaks from one topic's
query into the next.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Sequence, Tuple

from .emergence import DecReport
from .external import BigramDictionary, VectorSpace, nearest_neighbors, top_cooccurring
from .stream import Document
from .topics import Topic, TopicSet

METHODS = ("static", "emergent", "proactive_vs", "proactive_co")


@dataclass(frozen=True)
class Query:
    topic_id: int
    terms: FrozenSet[str]
    method: str
    l: int = 2

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.l < 1:
            raise ValueError("query length l must be >= 1")
        if not self.terms:
            raise ValueError("query has no terms")


@dataclass(frozen=True)
class QueryResult:
    query: Query
    matched: Tuple[Document, ...]


@dataclass(frozen=True)
class QueryRun:
    window_index: int
    results: Tuple[QueryResult, ...]

    def get(self, topic_id: int, method: str) -> QueryResult:
        for r in self.results:
            if r.query.topic_id == topic_id and r.query.method == method:
                return r
        raise KeyError((topic_id, method))


def dec_dedup(window_index: int, topic: Topic, k: int, d: int, D: DecReport) -> List[str]:
    """Up to ``d`` highest-ranked dynamic words absent from the topic's top-k."""
    if d < 1:
        raise ValueError("d must be >= 1")
    lda_words = set(topic.top_words(k))
    out: List[str] = []
    for word in D.ranked_words:
        if len(out) == d:
            break
        if word not in lda_words:
            out.append(word)
    return out


def expand_static(topic: Topic, k: int) -> FrozenSet[str]:
    return frozenset(topic.top_words(k))


def expand_emergent(topic: Topic, k: int, d: int, D: DecReport) -> FrozenSet[str]:
    return expand_static(topic, k) | frozenset(dec_dedup(D.window_index, topic, k, d, D))


def _enrich(base: FrozenSet[str], lookup: Callable[[str], List[str]]) -> FrozenSet[str]:
    added = set()
    for word in sorted(base):
        for new in lookup(word):
            if new not in base:
                added.add(new)
    return base | frozenset(added)


def expand_proactive_vs(topic: Topic, k: int, d: int, D: DecReport,
                        V: VectorSpace | None, i: int) -> FrozenSet[str]:
    base = expand_emergent(topic, k, d, D)
    if V is None or len(V) == 0:
        return base
    return _enrich(base, lambda w: nearest_neighbors(V, w, i))


def expand_proactive_co(topic: Topic, k: int, d: int, D: DecReport,
                        F: BigramDictionary | None, j: int) -> FrozenSet[str]:
    base = expand_emergent(topic, k, d, D)
    if F is None or len(F) == 0:
        return base
    return _enrich(base, lambda w: top_cooccurring(F, w, j))


def matches(terms: FrozenSet[str], tokens: Iterable[str], l: int) -> bool:
    """True when at least ``l`` distinct query terms occur among ``tokens``."""
    return len(terms.intersection(tokens)) >= l


def match_query(q: Query, docs: Sequence[Document]) -> QueryResult:
    return QueryResult(q, tuple(d for d in docs if matches(q.terms, d.tokens, q.l)))


def build_queries(topics: TopicSet, D: DecReport, *, k: int, d: int, l: int,
                  V: VectorSpace | None = None, F: BigramDictionary | None = None,
                  i: int = 5, j: int = 5) -> List[Query]:
    """All four queries for every topic, topic-major, in ``METHODS`` order."""
    queries = []
    for t in topics.topics:
        term_sets = {
            "static": expand_static(t, k),
            "emergent": expand_emergent(t, k, d, D),
            "proactive_vs": expand_proactive_vs(t, k, d, D, V, i),
            "proactive_co": expand_proactive_co(t, k, d, D, F, j),
        }
        for method in METHODS:
            queries.append(Query(t.topic_id, term_sets[method], method, l))
    return queries


def dump_queries(window_index: int, queries: Sequence[Query], path) -> None:
    payload = [
        {"window": window_index, "topic": q.topic_id, "method": q.method,
         "l": q.l, "terms": sorted(q.terms)}
        for q in queries
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_queries(path) -> List[Query]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [Query(e["topic"], frozenset(e["terms"]), e["method"], e.get("l", 2)) for e in payload]


def write_results_manifest(run: QueryRun, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window", "topic", "method", "doc_id"])
        for r in run.results:
            for doc in r.matched:
                w.writerow([run.window_index, r.query.topic_id, r.query.method, doc.id])


def read_results_manifest(path) -> Dict[Tuple[int, str], List[str]]:
    out: Dict[Tuple[int, str], List[str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault((int(row["topic"]), row["method"]), []).append(row["doc_id"])
    return out
