"""
Topics of a triggered window
============================

Collapsed Gibbs sampling fits the topic model. On a corpus built from two
disjoint vocabularies the two topics separate cleanly.
"""

from proactive_qe.synth import planted_topic_corpus
from proactive_qe.topics import LdaConfig, fit_lda

docs, vocab_a, vocab_b = planted_topic_corpus(seed=0)
topics = fit_lda(docs, LdaConfig(m=2, iterations=300, seed=0))
for t in topics.topics:
    words = t.top_words(5)
    source = "A" if set(words) <= set(vocab_a) else "B" if set(words) <= set(vocab_b) else "mixed"
    print(f"topic {t.topic_id} (vocabulary {source}):",
          ", ".join(f"{w} {t.word_probs[w]:.3f}" for w in words))
