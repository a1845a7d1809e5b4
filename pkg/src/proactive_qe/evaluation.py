"""Result-set metrics: volume, hashtag relevance, conciseness, precision."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .expansion import QueryResult
from .stream import Document

MAX_LLOYD_ITERATIONS = 300


def volume(r: QueryResult) -> int:
    return len(r.matched)


def relevance(r: QueryResult) -> int:
    """Total hashtag occurrences over the matched documents."""
    return sum(len(d.hashtags) for d in r.matched)


# ---------------------------------------------------------------------------
# clustering


@dataclass(frozen=True)
class HashtagFeatureMatrix:
    columns: Tuple[str, ...]
    X: np.ndarray  # (rows, len(columns)) of 0/1

    @property
    def rows(self) -> int:
        return self.X.shape[0]


def hashtag_features(docs: Sequence[Document], H: int = 100) -> HashtagFeatureMatrix:
    """Binary presence of the ``H`` most frequent hashtags in ``docs``.

    Documents carrying none of them stay in the matrix as zero rows.
    """
    if H < 2:
        raise ValueError("H must be >= 2")
    freq = Counter(h for d in docs for h in d.hashtags)
    columns = tuple(sorted(freq, key=lambda h: (-freq[h], h))[:H])
    col = {h: c for c, h in enumerate(columns)}
    X = np.zeros((len(docs), len(columns)))
    for r, d in enumerate(docs):
        for h in d.hashtags:
            c = col.get(h)
            if c is not None:
                X[r, c] = 1.0
    return HashtagFeatureMatrix(columns, X)


class KMeansResult(NamedTuple):
    labels: np.ndarray
    distortion: float
    history: List[float]


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _init_centers(X: np.ndarray, w: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.choice(n, p=w / w.sum()))]
    closest = _sq_dists(X, X[chosen]).ravel()
    for _ in range(1, k):
        p = w * closest
        total = p.sum()
        if total <= 0:
            # every point already coincides with a center
            idx = chosen[-1]
        else:
            idx = int(rng.choice(n, p=p / total))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_dists(X, X[idx:idx + 1]).ravel())
    return X[chosen].copy()


def weighted_kmeans(X: np.ndarray, k: int, seed: int = 0,
                    sample_weight: Optional[np.ndarray] = None,
                    n_init: int = 1) -> KMeansResult:
    """Lloyd's algorithm with squared-distance weighted seeding.

    ``history`` holds the distortion after every assignment step; it never
    increases. Empty clusters keep their previous center. With ``n_init``
    > 1 the lowest-distortion run among independently seeded restarts wins.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < 1:
        raise ValueError("no rows to cluster")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        run = _lloyd(X, w, k, rng)
        if best is None or run.distortion < best.distortion:
            best = run
    return best


def _lloyd(X: np.ndarray, w: np.ndarray, k: int, rng: np.random.Generator) -> KMeansResult:
    n = X.shape[0]
    C = _init_centers(X, w, k, rng)
    labels = None
    history: List[float] = []
    for _ in range(MAX_LLOYD_ITERATIONS):
        D = _sq_dists(X, C)
        new_labels = D.argmin(axis=1)
        history.append(float((w * D[np.arange(n), new_labels]).sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                C[c] = np.average(X[mask], axis=0, weights=w[mask])
    distortion = float((w * ((X - C[labels]) ** 2).sum(1)).sum())
    return KMeansResult(labels, distortion, history)


def kmeans(X, k: int, seed: int = 0) -> KMeansResult:
    """Cluster the rows of ``X``; raises when there are fewer rows than ``k``."""
    X = np.asarray(getattr(X, "X", X), dtype=np.float64)
    if X.shape[0] < k:
        raise ValueError(f"cannot form {k} clusters from {X.shape[0]} rows")
    return weighted_kmeans(X, k, seed)


@dataclass(frozen=True)
class ElbowCurve:
    ks: Tuple[int, ...]
    distortions: Tuple[float, ...]

    def __post_init__(self):
        if len(self.ks) != len(self.distortions):
            raise ValueError("ks and distortions differ in length")
        if any(b <= a for a, b in zip(self.ks, self.ks[1:])):
            raise ValueError("ks must be strictly increasing")


def chord_distances(curve: ElbowCurve) -> np.ndarray:
    """Unnormalized distance of each point to the first-to-last chord."""
    x = np.asarray(curve.ks, dtype=np.float64)
    y = np.asarray(curve.distortions, dtype=np.float64)
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    return np.abs(dy * (x - x[0]) - dx * (y - y[0]))


def elbow(curve: ElbowCurve) -> int:
    """k of the interior point farthest from the chord; ties go to smaller k."""
    if len(curve.ks) < 3:
        raise ValueError("elbow needs at least 3 points")
    dist = chord_distances(curve)[1:-1]
    y = np.abs(np.asarray(curve.distortions, dtype=np.float64))
    span = (curve.ks[-1] - curve.ks[0]) * max(float(y.max()), 1e-300)
    best = dist.max()
    pick = int(np.flatnonzero(dist >= best - 1e-9 * span)[0])
    return curve.ks[1 + pick]


@dataclass(frozen=True)
class ConcisenessConfig:
    H: int = 100
    k_min: int = 2
    k_max: int = 15
    seed: int = 0
    n_init: int = 10


@dataclass(frozen=True)
class Conciseness:
    optimal_k: int
    degenerate: bool = False
    curve: Optional[ElbowCurve] = None


def elbow_curve(fm: HashtagFeatureMatrix, cfg: ConcisenessConfig) -> ElbowCurve:
    # duplicate rows collapse into weighted points; Lloyd's iterates are unchanged
    uniq, counts = np.unique(fm.X, axis=0, return_counts=True)
    ks = tuple(range(cfg.k_min, cfg.k_max + 1))
    distortions = tuple(
        weighted_kmeans(uniq, k, cfg.seed, counts.astype(np.float64), cfg.n_init).distortion
        for k in ks
    )
    return ElbowCurve(ks, distortions)


def conciseness(r: QueryResult | Sequence[Document],
                cfg: ConcisenessConfig = ConcisenessConfig()) -> Conciseness:
    """Elbow of the k-means distortion curve over hashtag features.

    Fewer rows than ``k_max + 1`` gives the row count flagged degenerate;
    so does a result whose feature rows are all identical (k = 1).
    """
    docs = r.matched if isinstance(r, QueryResult) else list(r)
    if len(docs) <= cfg.k_max:
        return Conciseness(len(docs), degenerate=True)
    fm = hashtag_features(docs, cfg.H)
    if fm.X.shape[1] == 0 or len(np.unique(fm.X, axis=0)) == 1:
        return Conciseness(1, degenerate=True)
    curve = elbow_curve(fm, cfg)
    return Conciseness(elbow(curve), False, curve)


# ---------------------------------------------------------------------------
# precision


def hashtag_count(h: str, docs: Iterable[Document]) -> int:
    return sum(d.hashtags.count(h) for d in docs)


def precision(h: str, r: QueryResult, stream_slice: Sequence[Document]) -> Optional[float]:
    """Occurrences of ``h`` in the result over its occurrences in the slice.

    ``None`` when ``h`` never occurs in the slice.
    """
    h = h.lower()
    total = hashtag_count(h, stream_slice)
    if total == 0:
        return None
    return hashtag_count(h, r.matched) / total


def select_hashtags(docs: Sequence[Document], n: int) -> List[str]:
    """The ``n`` most and ``n`` least frequent hashtags in ``docs``."""
    freq = Counter(h for d in docs for h in d.hashtags)
    ranked = sorted(freq, key=lambda h: (-freq[h], h))
    high = ranked[:n]
    low = [h for h in sorted(freq, key=lambda h: (freq[h], h)) if h not in high][:n]
    return high + low


def format_precision(value: Optional[float]) -> str:
    return "NA" if value is None else repr(float(value))


# ---------------------------------------------------------------------------
# CSV writers

METRICS_HEADER = ["window", "topic", "method", "volume", "hashtag_count", "optimal_k"]
PRECISION_HEADER = ["window", "topic", "method", "hashtag", "precision"]


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_csv(path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
