"""Per-window emergence scoring and the Jaccard trigger.

Each window's documents form a weighted word co-occurrence graph. A word's
dynamic score is its eigenvector centrality in the current window minus
its mean centrality over the trailing windows, clamped at zero. A window
triggers query expansion when its top-``d`` dynamic words overlap little
with the top-``d`` words of each of the previous ``P`` windows.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from .stream import Document, Window

logger = logging.getLogger(__name__)

# dynamic scores closer to zero than this are treated as exactly zero, so
# that float noise in the trailing mean never decides a ranking
SCORE_EPS = 1e-12


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class CooccurrenceGraph:
    nodes: List[str] = field(default_factory=list)
    edge_weights: Dict[Tuple[str, str], int] = field(default_factory=dict)

    def weight(self, a: str, b: str) -> int:
        key = (a, b) if a < b else (b, a)
        return self.edge_weights.get(key, 0)

    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric weighted adjacency, rows/columns ordered as ``nodes``."""
        n = len(self.nodes)
        index = {tok: i for i, tok in enumerate(self.nodes)}
        rows, cols, vals = [], [], []
        for (a, b), w in self.edge_weights.items():
            i, j = index[a], index[b]
            rows += [i, j]
            cols += [j, i]
            vals += [w, w]
        return sparse.csr_matrix(
            (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, n)
        )


def build_cooccurrence_graph(docs: Iterable[Document] | Window) -> CooccurrenceGraph:
    """Each unordered pair of distinct tokens inside a document adds 1."""
    if isinstance(docs, Window):
        docs = docs.documents
    weights: Dict[Tuple[str, str], int] = {}
    nodes = set()
    for doc in docs:
        distinct = sorted(set(doc.tokens))
        nodes.update(distinct)
        for pair in combinations(distinct, 2):
            weights[pair] = weights.get(pair, 0) + 1
    return CooccurrenceGraph(nodes=sorted(nodes), edge_weights=weights)


class CentralityResult(NamedTuple):
    scores: Dict[str, float]
    converged: bool
    iterations: int


def eigenvector_centrality(
    g: CooccurrenceGraph, tol: float = 1e-8, max_iter: int = 1000
) -> CentralityResult:
    """Dominant eigenvector of the weighted adjacency by power iteration.

    Iterates ``x <- (A + I) x`` from the uniform positive vector; the shift
    keeps the eigenvectors of ``A`` but makes the dominant one unique in
    modulus, so bipartite graphs (stars, paths) converge instead of
    oscillating. Scores are L2-normalized and nonnegative.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    n = len(g.nodes)
    if n == 0:
        return CentralityResult({}, True, 0)
    A = g.adjacency()
    x = np.full(n, 1.0 / np.sqrt(n))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        x_new = A @ x + x
        x_new /= np.linalg.norm(x_new)
        delta = np.linalg.norm(x_new - x)
        x = x_new
        if delta < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"power iteration did not converge in {max_iter} iterations", ConvergenceWarning
        )
    x = np.maximum(x, 0.0)
    return CentralityResult(dict(zip(g.nodes, x.tolist())), converged, it)


@dataclass(frozen=True)
class DecReport:
    window_index: int
    ranked_words: Tuple[str, ...]
    scores: Mapping[str, float]

    def top(self, d: int) -> Tuple[str, ...]:
        return self.ranked_words[:d]


def rank_scores(scores: Mapping[str, float]) -> Tuple[str, ...]:
    return tuple(sorted(scores, key=lambda w: (-scores[w], w)))


def dec_scores(
    current: Mapping[str, float],
    history: Sequence[Mapping[str, float]],
    window_index: int = 0,
) -> DecReport:
    """Dynamic score of every word in the current window.

    ``current[w] - mean(h.get(w, 0) for h in history)``, clamped at 0. With
    no history the baseline is 0. Words seen only in the history are not
    reported.
    """
    n_hist = len(history)
    scores: Dict[str, float] = {}
    for word, c in current.items():
        baseline = sum(h.get(word, 0.0) for h in history) / n_hist if n_hist else 0.0
        value = c - baseline
        scores[word] = value if value > SCORE_EPS else 0.0
    return DecReport(window_index, rank_scores(scores), scores)


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


@dataclass(frozen=True)
class TriggerConfig:
    d: int = 200
    P: int = 3
    th: float = 0.15

    def __post_init__(self):
        if self.d < 1 or self.P < 1 or not 0.0 <= self.th <= 1.0:
            raise ValueError(f"invalid trigger config {self}")


def trigger_similarity(
    current: DecReport, previous: Sequence[DecReport], cfg: TriggerConfig
) -> Optional[float]:
    """Max Jaccard of top-d words against each of the last ``P`` reports.

    ``None`` when there is no previous report.
    """
    recent = list(previous)[-cfg.P:]
    if not recent:
        return None
    top_now = current.top(cfg.d)
    return max(jaccard(top_now, p.top(cfg.d)) for p in recent)


def should_trigger(
    current: DecReport, previous: Sequence[DecReport], cfg: TriggerConfig
) -> bool:
    sim = trigger_similarity(current, previous, cfg)
    return sim is not None and sim <= cfg.th


class EmergenceTracker:
    """Sequential coordinator holding the trailing centrality history.

    Windows must be fed in order; ``history_size`` trailing centrality maps
    form the DEC baseline and the last ``cfg.P`` reports feed the trigger.
    """

    def __init__(
        self,
        cfg: TriggerConfig,
        history_size: Optional[int] = None,
        tol: float = 1e-8,
        max_iter: int = 1000,
        warmup: Optional[int] = None,
    ):
        self.cfg = cfg
        self.history_size = history_size or cfg.P
        self.tol = tol
        self.max_iter = max_iter
        # the first report has no baseline; require P full reports before it
        self.warmup = cfg.P + 1 if warmup is None else warmup
        self._centrality: List[Dict[str, float]] = []
        self._reports: List[DecReport] = []
        self.similarities: List[Optional[float]] = []

    def observe(self, window: Window) -> Tuple[DecReport, bool]:
        graph = build_cooccurrence_graph(window)
        cent = eigenvector_centrality(graph, self.tol, self.max_iter)
        if not cent.converged:
            logger.warning("window %d: centrality not converged", window.index)
        history = self._centrality[-self.history_size:]
        report = dec_scores(cent.scores, history, window.index)
        sim = trigger_similarity(report, self._reports, self.cfg)
        # an empty window has nothing to expand, whatever its overlap
        fired = (
            len(self._reports) >= self.warmup
            and bool(report.ranked_words)
            and sim is not None
            and sim <= self.cfg.th
        )
        logger.debug("window %d: max jaccard %s, trigger=%s", window.index, sim, fired)
        self._centrality.append(cent.scores)
        self._reports.append(report)
        self.similarities.append(sim)
        return report, fired


def write_dec_csv(report: DecReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window", "token", "score", "rank"])
        for rank, tok in enumerate(report.ranked_words, 1):
            w.writerow([report.window_index, tok, repr(float(report.scores[tok])), rank])


def read_dec_csv(path) -> DecReport:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: int(r["rank"]))
    scores = {r["token"]: float(r["score"]) for r in rows}
    window = int(rows[0]["window"]) if rows else -1
    return DecReport(window, tuple(r["token"] for r in rows), scores)
