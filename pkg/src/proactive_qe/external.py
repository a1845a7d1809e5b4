"""External knowledge base: subword skip-gram vectors and bigram counts.

Both structures are built once from an archival corpus and then queried
read-only. The vector space follows the subword skip-gram recipe: a word is
represented by its own vector plus the vectors of its character n-grams
(taken from ``<word>``), trained with negative sampling. Lookups use the
same stemmed token space as the stream.
"""

from __future__ import annotations

import csv
import hashlib
import struct
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numba
import numpy as np

from .stream import Document

VECTORS_MAGIC = b"PQEV"
VECTORS_VERSION = 1
VECTORS_FILE = "vectors.bin"
BIGRAMS_FILE = "bigrams.csv"

NEG_TABLE_SIZE = 1_000_000


class KnowledgeBaseError(ValueError):
    pass


@dataclass(frozen=True)
class KbConfig:
    dim: int = 100
    context_window: int = 5
    negative_samples: int = 5
    epochs: int = 5
    min_count: int = 5
    minn: int = 3
    maxn: int = 6
    lr: float = 0.05
    seed: int = 0
    workers: int = 1
    i: int = 5
    j: int = 5

    def __post_init__(self):
        for name in ("dim", "context_window", "negative_samples", "epochs",
                     "min_count", "minn", "maxn", "workers", "i", "j"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.maxn < self.minn or self.lr <= 0:
            raise ValueError("need minn <= maxn and lr > 0")


def _token_lists(corpus: Iterable) -> List[Tuple[str, ...]]:
    return [tuple(d.tokens) if isinstance(d, Document) else tuple(d) for d in corpus]


def corpus_fingerprint(corpus: Iterable) -> str:
    h = hashlib.sha256()
    for toks in _token_lists(corpus):
        h.update(" ".join(toks).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def char_ngrams(word: str, minn: int, maxn: int) -> List[str]:
    """Character n-grams of ``<word>``, excluding the bracketed word itself."""
    padded = f"<{word}>"
    whole = len(padded)
    out = []
    for n in range(minn, maxn + 1):
        for start in range(0, whole - n + 1):
            if n == whole:
                continue
            out.append(padded[start:start + n])
    return out


# ---------------------------------------------------------------------------
# vector space


@dataclass
class VectorSpace:
    dim: int
    words: Tuple[str, ...]
    vectors: np.ndarray  # (V, dim) float32, word + subword sums
    ngram_names: Tuple[str, ...] = ()
    ngram_vectors: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), np.float32))
    minn: int = 3
    maxn: int = 6
    trained_on: str = ""

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.ngram_vectors.size == 0:
            self.ngram_vectors = np.zeros((0, self.dim), np.float32)
        self._index = {w: i for i, w in enumerate(self.words)}
        self._ngram_index = {g: i for i, g in enumerate(self.ngram_names)}
        norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
        norms[norms == 0] = 1.0
        self._unit = self.vectors.astype(np.float64) / norms[:, None]

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __len__(self) -> int:
        return len(self.words)

    def vector(self, word: str) -> Optional[np.ndarray]:
        """Vector of ``word``; out-of-vocabulary words are composed from
        their known n-grams, or ``None`` if none is known."""
        idx = self._index.get(word)
        if idx is not None:
            return self.vectors[idx]
        rows = [self._ngram_index[g] for g in char_ngrams(word, self.minn, self.maxn)
                if g in self._ngram_index]
        if not rows:
            return None
        return self.ngram_vectors[rows].astype(np.float64).sum(axis=0).astype(np.float32)

    def cosine(self, a: str, b: str) -> float:
        va, vb = self.vector(a), self.vector(b)
        if va is None or vb is None:
            raise KeyError(a if va is None else b)
        va = va.astype(np.float64)
        vb = vb.astype(np.float64)
        return float(va @ vb / (np.linalg.norm(va) * np.linalg.norm(vb)))

    def similarities(self, word: str) -> Optional[np.ndarray]:
        vec = self.vector(word)
        if vec is None:
            return None
        v = vec.astype(np.float64)
        norm = np.linalg.norm(v)
        if norm == 0:
            return np.zeros(len(self.words))
        return self._unit @ (v / norm)


def nearest_neighbors(V: VectorSpace, word: str, i: int) -> List[str]:
    """The ``i`` vocabulary words most cosine-similar to ``word``.

    Exhaustive scan; the query word is never returned; ties are broken
    lexicographically. Unknown words with no known n-gram give ``[]``.
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    sims = V.similarities(word)
    if sims is None:
        return []
    order = sorted(
        (j for j in range(len(V.words)) if V.words[j] != word),
        key=lambda j: (-sims[j], V.words[j]),
    )
    return [V.words[j] for j in order[:i]]


@numba.njit(cache=True, nogil=True)
def _sgns_train(tokens, doc_offsets, sub_offsets, sub_idx, w_in, w_out, neg_table,
                window, negative, epochs, lr0, seed, progress_total):
    dim = w_in.shape[1]
    rng = np.uint64(seed) * np.uint64(2862933555777941757) + np.uint64(3037000493)
    hidden = np.zeros(dim)
    grad = np.zeros(dim)
    n_docs = doc_offsets.shape[0] - 1
    processed = 0
    for _ in range(epochs):
        for d in range(n_docs):
            start = doc_offsets[d]
            stop = doc_offsets[d + 1]
            for pos in range(start, stop):
                lr = lr0 * (1.0 - processed / progress_total)
                if lr < lr0 * 1e-4:
                    lr = lr0 * 1e-4
                processed += 1
                center = tokens[pos]
                if center < 0:
                    continue
                rng = rng * np.uint64(25214903917) + np.uint64(11)
                b = np.int64((rng >> np.uint64(16)) % np.uint64(window)) + 1
                s0 = sub_offsets[center]
                s1 = sub_offsets[center + 1]
                scale = 1.0 / (s1 - s0)
                for c in range(pos - b, pos + b + 1):
                    if c == pos or c < start or c >= stop:
                        continue
                    target = tokens[c]
                    if target < 0:
                        continue
                    for k in range(dim):
                        hidden[k] = 0.0
                        grad[k] = 0.0
                    for s in range(s0, s1):
                        row = sub_idx[s]
                        for k in range(dim):
                            hidden[k] += w_in[row, k]
                    for k in range(dim):
                        hidden[k] *= scale
                    for n in range(negative + 1):
                        if n == 0:
                            out = target
                            label = 1.0
                        else:
                            rng = rng * np.uint64(25214903917) + np.uint64(11)
                            out = neg_table[np.int64((rng >> np.uint64(16)) % np.uint64(neg_table.shape[0]))]
                            if out == target:
                                continue
                            label = 0.0
                        dot = 0.0
                        for k in range(dim):
                            dot += hidden[k] * w_out[out, k]
                        if dot > 30.0:
                            sig = 1.0
                        elif dot < -30.0:
                            sig = 0.0
                        else:
                            sig = 1.0 / (1.0 + np.exp(-dot))
                        alpha = lr * (label - sig)
                        for k in range(dim):
                            grad[k] += alpha * w_out[out, k]
                            w_out[out, k] += alpha * hidden[k]
                    for k in range(dim):
                        grad[k] *= scale
                    for s in range(s0, s1):
                        row = sub_idx[s]
                        for k in range(dim):
                            w_in[row, k] += grad[k]
    return processed


def train_embeddings(corpus: Iterable, cfg: KbConfig = KbConfig()) -> VectorSpace:
    """Train subword skip-gram vectors with negative sampling.

    Deterministic for a given seed when ``cfg.workers == 1``. With more
    workers the documents are sharded over threads that update shared
    weights without locks, which is faster but not reproducible.
    """
    docs = [t for t in _token_lists(corpus) if t]
    counts = Counter(w for toks in docs for w in toks)
    vocab = sorted((w for w, c in counts.items() if c >= cfg.min_count),
                   key=lambda w: (-counts[w], w))
    if not vocab:
        raise KnowledgeBaseError("external corpus too small")
    index = {w: i for i, w in enumerate(vocab)}

    ngram_index: Dict[str, int] = {}
    word_ngrams: List[List[int]] = []
    for w in vocab:
        rows = []
        for g in char_ngrams(w, cfg.minn, cfg.maxn):
            if g not in ngram_index:
                ngram_index[g] = len(ngram_index)
            rows.append(ngram_index[g])
        word_ngrams.append(rows)
    V, G, dim = len(vocab), len(ngram_index), cfg.dim

    sub_offsets = np.zeros(V + 1, dtype=np.int64)
    sub_list: List[int] = []
    for wi, rows in enumerate(word_ngrams):
        sub_list.append(wi)
        sub_list.extend(V + r for r in rows)
        sub_offsets[wi + 1] = len(sub_list)
    sub_idx = np.asarray(sub_list, dtype=np.int64)

    # rare tokens are removed before windowing, as if never seen
    id_lists = [[index[w] for w in toks if w in index] for toks in docs]
    flat = np.asarray([i for ids in id_lists for i in ids], dtype=np.int64)
    doc_offsets = np.zeros(len(id_lists) + 1, dtype=np.int64)
    doc_offsets[1:] = np.cumsum([len(ids) for ids in id_lists])

    freqs = np.asarray([counts[w] for w in vocab], dtype=np.float64) ** 0.75
    cum = np.cumsum(freqs / freqs.sum())
    neg_table = np.searchsorted(cum, (np.arange(NEG_TABLE_SIZE) + 0.5) / NEG_TABLE_SIZE)
    neg_table = np.minimum(neg_table, V - 1).astype(np.int64)

    rng = np.random.default_rng(cfg.seed)
    w_in = rng.uniform(-1.0 / dim, 1.0 / dim, size=(V + G, dim))
    w_out = np.zeros((V, dim))

    if cfg.workers == 1:
        _sgns_train(flat, doc_offsets, sub_offsets, sub_idx, w_in, w_out, neg_table,
                    cfg.context_window, cfg.negative_samples, cfg.epochs, cfg.lr,
                    cfg.seed, float(cfg.epochs * len(flat)))
    else:
        shards = np.array_split(np.arange(len(id_lists)), cfg.workers)
        threads = []
        for tid, shard in enumerate(shards):
            if len(shard) == 0:
                continue
            lo, hi = doc_offsets[shard[0]], doc_offsets[shard[-1] + 1]
            offs = doc_offsets[shard[0]:shard[-1] + 2] - lo
            args = (flat[lo:hi], offs, sub_offsets, sub_idx, w_in, w_out, neg_table,
                    cfg.context_window, cfg.negative_samples, cfg.epochs, cfg.lr,
                    cfg.seed + 7919 * tid, float(cfg.epochs * max(hi - lo, 1)))
            threads.append(threading.Thread(target=_sgns_train, args=args))
        for t in threads:
            t.start()
        for t in threads:
            t.join()

    composed = np.zeros((V, dim))
    for wi in range(V):
        composed[wi] = w_in[sub_idx[sub_offsets[wi]:sub_offsets[wi + 1]]].sum(axis=0)
    if not np.all(np.isfinite(composed)):
        raise KnowledgeBaseError("embedding training diverged")
    ngram_names = tuple(sorted(ngram_index, key=ngram_index.get))
    return VectorSpace(
        dim=dim,
        words=tuple(vocab),
        vectors=composed.astype(np.float32),
        ngram_names=ngram_names,
        ngram_vectors=w_in[V:].astype(np.float32),
        minn=cfg.minn,
        maxn=cfg.maxn,
        trained_on=corpus_fingerprint(docs),
    )


def _write_records(fh, names: Sequence[str], matrix: np.ndarray) -> None:
    data = np.ascontiguousarray(matrix, dtype="<f4")
    for name, row in zip(names, data):
        raw = name.encode("utf-8")
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        fh.write(row.tobytes())


def _read_records(fh, count: int, dim: int) -> Tuple[List[str], np.ndarray]:
    names = []
    matrix = np.zeros((count, dim), dtype=np.float32)
    for r in range(count):
        (length,) = struct.unpack("<I", _read_exact(fh, 4))
        names.append(_read_exact(fh, length).decode("utf-8"))
        matrix[r] = np.frombuffer(_read_exact(fh, 4 * dim), dtype="<f4")
    return names, matrix


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise KnowledgeBaseError("truncated vectors file")
    return buf


def save_vectors(V: VectorSpace, path) -> None:
    """Binary layout (all little-endian)::

        magic "PQEV" | u32 version | u32 dim | u32 vocab_size
        vocab_size x (u32 len | utf-8 token | dim x f32)
        u32 ngram_count | u8 minn | u8 maxn
        ngram_count x (u32 len | utf-8 ngram | dim x f32)
        u32 len | utf-8 corpus fingerprint
    """
    with open(path, "wb") as fh:
        fh.write(VECTORS_MAGIC)
        fh.write(struct.pack("<III", VECTORS_VERSION, V.dim, len(V.words)))
        _write_records(fh, V.words, V.vectors)
        fh.write(struct.pack("<IBB", len(V.ngram_names), V.minn, V.maxn))
        _write_records(fh, V.ngram_names, V.ngram_vectors)
        fp = V.trained_on.encode("utf-8")
        fh.write(struct.pack("<I", len(fp)))
        fh.write(fp)


def load_vectors(path) -> VectorSpace:
    with open(path, "rb") as fh:
        if fh.read(4) != VECTORS_MAGIC:
            raise KnowledgeBaseError(f"{path}: not a vectors file")
        version, dim, vocab_size = struct.unpack("<III", _read_exact(fh, 12))
        if version != VECTORS_VERSION:
            raise KnowledgeBaseError(f"{path}: unsupported version {version}")
        words, vectors = _read_records(fh, vocab_size, dim)
        n_ngrams, minn, maxn = struct.unpack("<IBB", _read_exact(fh, 6))
        ngrams, ngram_vectors = _read_records(fh, n_ngrams, dim)
        (fp_len,) = struct.unpack("<I", _read_exact(fh, 4))
        trained_on = _read_exact(fh, fp_len).decode("utf-8")
    return VectorSpace(dim, tuple(words), vectors, tuple(ngrams), ngram_vectors,
                       minn, maxn, trained_on)


# ---------------------------------------------------------------------------
# bigram dictionary


def pair_key(a: str, b: str) -> Tuple[str, str]:
    return (a, b) if a < b else (b, a)


class BigramDictionary:
    """Unordered adjacent-pair counts, keyed by the sorted token pair."""

    def __init__(self, counts: Optional[Mapping[Tuple[str, str], int]] = None):
        self.counts: Dict[Tuple[str, str], int] = {}
        for (a, b), c in (counts or {}).items():
            if c < 1:
                continue
            key = pair_key(a, b)
            self.counts[key] = self.counts.get(key, 0) + int(c)
        self._partners: Optional[Dict[str, List[Tuple[str, int]]]] = None

    def __len__(self) -> int:
        return len(self.counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, BigramDictionary) and self.counts == other.counts

    def count(self, a: str, b: str) -> int:
        return self.counts.get(pair_key(a, b), 0)

    def partners(self, word: str) -> List[Tuple[str, int]]:
        if self._partners is None:
            table: Dict[str, List[Tuple[str, int]]] = {}
            for (a, b), c in self.counts.items():
                table.setdefault(a, []).append((b, c))
                table.setdefault(b, []).append((a, c))
            for lst in table.values():
                lst.sort(key=lambda pc: (-pc[1], pc[0]))
            self._partners = table
        return self._partners.get(word, [])


def build_bigram_dict(corpus: Iterable) -> BigramDictionary:
    """Count adjacent token pairs within each document, order ignored.

    A token adjacent to itself ("a a") is not a pair.
    """
    counts: Counter = Counter()
    for toks in _token_lists(corpus):
        for a, b in zip(toks, toks[1:]):
            if a != b:
                counts[pair_key(a, b)] += 1
    return BigramDictionary(counts)


def top_cooccurring(F: BigramDictionary, word: str, j: int) -> List[str]:
    if j < 1:
        raise ValueError("j must be >= 1")
    return [w for w, _ in F.partners(word)[:j]]


def save_bigrams(F: BigramDictionary, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["token_a", "token_b", "count"])
        for (a, b) in sorted(F.counts):
            w.writerow([a, b, F.counts[(a, b)]])


def load_bigrams(path) -> BigramDictionary:
    counts = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            counts[(row["token_a"], row["token_b"])] = int(row["count"])
    return BigramDictionary(counts)


# ---------------------------------------------------------------------------
# knowledge base


@dataclass
class KnowledgeBase:
    vectors: VectorSpace
    bigrams: BigramDictionary

    def save(self, directory) -> Tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        vpath, bpath = directory / VECTORS_FILE, directory / BIGRAMS_FILE
        save_vectors(self.vectors, vpath)
        save_bigrams(self.bigrams, bpath)
        return vpath, bpath

    @classmethod
    def load(cls, directory) -> "KnowledgeBase":
        directory = Path(directory)
        vpath, bpath = directory / VECTORS_FILE, directory / BIGRAMS_FILE
        for p in (vpath, bpath):
            if not p.is_file():
                raise FileNotFoundError(f"knowledge base file missing: {p}")
        return cls(load_vectors(vpath), load_bigrams(bpath))


def build_knowledge_base(corpus: Sequence, cfg: KbConfig = KbConfig()) -> KnowledgeBase:
    return KnowledgeBase(train_embeddings(corpus, cfg), build_bigram_dict(corpus))
