"""Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

Topic-word distributions are read off the final sampler state with
``beta`` smoothing; there is no averaging over samples.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numba
import numpy as np

from .stream import Document


class TopicModelError(ValueError):
    pass


@dataclass(frozen=True)
class LdaConfig:
    m: int = 5
    k: int = 20
    alpha: float = 0.1
    beta: float = 0.01
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.k < 1 or self.iterations < 1:
            raise ValueError("m, k and iterations must be >= 1")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")


def rank_probs(probs: Mapping[str, float], k: int) -> List[str]:
    return sorted(probs, key=lambda w: (-probs[w], w))[:k]


@dataclass(frozen=True)
class Topic:
    topic_id: int
    word_probs: Mapping[str, float]

    def top_words(self, k: int) -> List[str]:
        return top_words(self, k)


def top_words(t: Topic, k: int) -> List[str]:
    """The ``k`` most probable words, ties broken lexicographically."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return rank_probs(t.word_probs, k)


@dataclass(frozen=True)
class TopicSet:
    topics: Tuple[Topic, ...]
    vocabulary: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.topics)

    def to_json(self, k: int) -> list:
        out = []
        for t in self.topics:
            out.append({
                "topic_id": t.topic_id,
                "top_words": [
                    {"token": w, "prob": float(t.word_probs[w])} for w in t.top_words(k)
                ],
            })
        return out

    def dump(self, path, k: int) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(k), fh, indent=1)
            fh.write("\n")


@numba.njit(cache=True)
def _gibbs_sweep(words, docs, z, ndk, nkw, nk, alpha, beta, vbeta, uniforms):
    n_topics = nk.shape[0]
    p = np.empty(n_topics)
    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        old = z[i]
        ndk[d, old] -= 1
        nkw[old, w] -= 1
        nk[old] -= 1
        total = 0.0
        for t in range(n_topics):
            total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
            p[t] = total
        u = uniforms[i] * total
        new = n_topics - 1
        for t in range(n_topics):
            if u < p[t]:
                new = t
                break
        z[i] = new
        ndk[d, new] += 1
        nkw[new, w] += 1
        nk[new] += 1


@dataclass
class GibbsState:
    """Count tables of the sampler, exposed to sweep callbacks."""

    words: np.ndarray
    docs: np.ndarray
    z: np.ndarray
    ndk: np.ndarray
    nkw: np.ndarray
    nk: np.ndarray


def _encode(docs: Sequence[Document] | Sequence[Sequence[str]]):
    token_lists = [
        tuple(d.tokens) if isinstance(d, Document) else tuple(str(w) for w in d) for d in docs
    ]
    token_lists = [t for t in token_lists if t]
    if not token_lists:
        raise TopicModelError("no documents in triggered window")
    vocab = sorted({w for toks in token_lists for w in toks})
    index = {w: i for i, w in enumerate(vocab)}
    words = np.fromiter((index[w] for toks in token_lists for w in toks), dtype=np.int64)
    doc_ids = np.repeat(np.arange(len(token_lists), dtype=np.int64), [len(t) for t in token_lists])
    return vocab, words, doc_ids, len(token_lists)


def fit_lda(
    docs: Sequence[Document] | Sequence[Sequence[str]],
    cfg: LdaConfig,
    callback: Optional[Callable[[int, GibbsState], None]] = None,
) -> TopicSet:
    """Fit ``cfg.m`` topics on the documents' tokens.

    Documents without tokens are ignored. ``callback(sweep, state)`` runs
    after every sweep.
    """
    vocab, words, doc_ids, n_docs = _encode(docs)
    if len(vocab) < cfg.m:
        raise TopicModelError(
            f"vocabulary of {len(vocab)} tokens is smaller than m={cfg.m} topics"
        )
    m, V = cfg.m, len(vocab)
    alpha, beta = float(cfg.alpha), float(cfg.beta)
    rng = np.random.default_rng(cfg.seed)

    z = rng.integers(0, m, size=words.shape[0]).astype(np.int64)
    ndk = np.zeros((n_docs, m), dtype=np.int64)
    nkw = np.zeros((m, V), dtype=np.int64)
    np.add.at(ndk, (doc_ids, z), 1)
    np.add.at(nkw, (z, words), 1)
    nk = nkw.sum(axis=1)
    state = GibbsState(words, doc_ids, z, ndk, nkw, nk)

    for sweep in range(cfg.iterations):
        uniforms = rng.random(words.shape[0])
        _gibbs_sweep(words, doc_ids, z, ndk, nkw, nk, alpha, beta, V * beta, uniforms)
        if callback is not None:
            callback(sweep, state)

    phi = (nkw + beta) / (nk[:, None] + V * beta)
    topics = tuple(
        Topic(t, dict(zip(vocab, phi[t].tolist()))) for t in range(m)
    )
    return TopicSet(topics=topics, vocabulary=tuple(vocab))
