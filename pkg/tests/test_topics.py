import json
import time

import numpy as np
import pytest

from proactive_qe.synth import planted_topic_corpus
from proactive_qe.topics import (LdaConfig, Topic, TopicModelError, fit_lda, rank_probs,
                                 top_words)

from conftest import doc


def reference_gibbs(token_lists, m, alpha, beta, iterations, seed):
    """Plain-Python collapsed Gibbs sampler consuming the same random stream."""
    vocab = sorted({w for t in token_lists for w in t})
    idx = {w: i for i, w in enumerate(vocab)}
    words = [idx[w] for t in token_lists for w in t]
    docs = [d for d, t in enumerate(token_lists) for _ in t]
    rng = np.random.default_rng(seed)
    z = list(rng.integers(0, m, size=len(words)))
    ndk = [[0] * m for _ in token_lists]
    nkw = [[0] * len(vocab) for _ in range(m)]
    nk = [0] * m
    for w, d, t in zip(words, docs, z):
        ndk[d][t] += 1
        nkw[t][w] += 1
        nk[t] += 1
    for _ in range(iterations):
        u = rng.random(len(words))
        for i, (w, d) in enumerate(zip(words, docs)):
            t = z[i]
            ndk[d][t] -= 1
            nkw[t][w] -= 1
            nk[t] -= 1
            weights = [(ndk[d][s] + alpha) * (nkw[s][w] + beta) / (nk[s] + len(vocab) * beta)
                       for s in range(m)]
            target = u[i] * sum(weights)
            acc, new = 0.0, m - 1
            for s in range(m):
                acc += weights[s]
                if target < acc:
                    new = s
                    break
            z[i] = new
            ndk[d][new] += 1
            nkw[new][w] += 1
            nk[new] += 1
    return z


def test_sampler_matches_reference_implementation():
    docs, _, _ = planted_topic_corpus(n_per_topic=20, doc_len=6, seed=3)
    cfg = LdaConfig(m=3, alpha=0.1, beta=0.01, iterations=4, seed=11)
    seen = {}
    fit_lda(docs, cfg, callback=lambda s, st: seen.__setitem__(s, st.z.copy()))
    assert list(seen[3]) == reference_gibbs(docs, 3, 0.1, 0.01, 4, 11)


def test_counts_conserved_every_sweep():
    docs, _, _ = planted_topic_corpus(n_per_topic=30, seed=1)
    total = sum(len(d) for d in docs)
    lengths = np.array([len(d) for d in docs])

    def check(sweep, st):
        assert st.nk.sum() == total
        assert (st.ndk.sum(axis=1) == lengths).all()
        assert (st.nkw.sum(axis=1) == st.nk).all()
        assert (st.ndk >= 0).all() and (st.nkw >= 0).all()
        rebuilt = np.zeros_like(st.nkw)
        np.add.at(rebuilt, (st.z, st.words), 1)
        assert (rebuilt == st.nkw).all()

    fit_lda(docs, LdaConfig(m=4, iterations=25, seed=0), callback=check)


def test_single_topic_is_smoothed_unigram():
    docs = [["a", "b", "a"], ["c", "a"]]
    ts = fit_lda(docs, LdaConfig(m=1, iterations=5, beta=0.01))
    counts = {"a": 3, "b": 1, "c": 1}
    for w, c in counts.items():
        assert ts.topics[0].word_probs[w] == pytest.approx((c + 0.01) / (5 + 3 * 0.01), abs=1e-15)


def test_planted_topics_recovered():
    docs, va, vb = planted_topic_corpus(seed=0)
    ts = fit_lda(docs, LdaConfig(m=2, iterations=300, seed=0))
    groups = []
    for t in ts.topics:
        top = set(t.top_words(5))
        assert top <= set(va) or top <= set(vb)
        groups.append(top <= set(va))
    assert sorted(groups) == [False, True]


def test_deterministic_for_fixed_seed():
    docs, _, _ = planted_topic_corpus(n_per_topic=50, seed=2)
    a = fit_lda(docs, LdaConfig(m=3, iterations=50, seed=7))
    b = fit_lda(docs, LdaConfig(m=3, iterations=50, seed=7))
    assert a == b


def test_probabilities_normalized():
    docs, _, _ = planted_topic_corpus(n_per_topic=40, seed=4)
    for t in fit_lda(docs, LdaConfig(m=3, iterations=20)).topics:
        assert sum(t.word_probs.values()) == pytest.approx(1.0, abs=1e-12)


def test_accepts_documents_and_skips_empty_ones():
    docs = [doc(["riot", "fire"]), doc([]), doc(["fire", "smoke"])]
    ts = fit_lda(docs, LdaConfig(m=2, iterations=10))
    assert ts.vocabulary == ("fire", "riot", "smoke")


def test_errors():
    with pytest.raises(TopicModelError, match="no documents"):
        fit_lda([doc([])], LdaConfig(m=2))
    with pytest.raises(TopicModelError, match="smaller than"):
        fit_lda([["a", "b"]], LdaConfig(m=3))
    with pytest.raises(ValueError):
        LdaConfig(alpha=0)


def test_top_words_rules():
    uniform = Topic(0, {"c": 1 / 3, "a": 1 / 3, "b": 1 / 3})
    assert top_words(uniform, 2) == ["a", "b"]
    probs = {"x": 0.5, "y": 0.3, "z": 0.2}
    assert top_words(Topic(1, probs), 2) == ["x", "y"]
    order = np.argsort([-probs[w] for w in "xyz"], kind="stable")
    assert top_words(Topic(1, probs), 2) == ["xyz"[i] for i in order[:2]]
    assert top_words(Topic(1, probs), 10) == ["x", "y", "z"]
    with pytest.raises(ValueError):
        top_words(uniform, 0)
    assert rank_probs({"b": 0.1, "a": 0.1}, 1) == ["a"]


def test_dump_format(tmp_path):
    docs, _, _ = planted_topic_corpus(n_per_topic=20, seed=0)
    ts = fit_lda(docs, LdaConfig(m=2, iterations=10))
    ts.dump(tmp_path / "t.json", 3)
    data = json.loads((tmp_path / "t.json").read_text())
    assert [e["topic_id"] for e in data] == [0, 1]
    assert [w["token"] for w in data[0]["top_words"]] == ts.topics[0].top_words(3)


def test_fit_is_fast():
    docs, _, _ = planted_topic_corpus(seed=5)
    fit_lda(docs, LdaConfig(m=2, iterations=5))  # compile
    t0 = time.perf_counter()
    fit_lda(docs, LdaConfig(m=2, iterations=1000, seed=5))
    assert time.perf_counter() - t0 < 10
