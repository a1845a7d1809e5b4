"""
An external knowledge base
==========================

An archive corpus gives two lookups: nearest neighbours in a trained
subword vector space, and the most frequent adjacent-word partners.
In the archive, each event's words appear next to the words of the event
that tends to follow it.
"""

import tempfile

from proactive_qe.external import (KbConfig, KnowledgeBase, build_knowledge_base,
                                   nearest_neighbors, top_cooccurring)
from proactive_qe.stream import Document
from proactive_qe.synth import archive_corpus

corpus = [Document.from_text(r["id"], 0, r["text"]) for r in archive_corpus(3000, seed=1)]
kb = build_knowledge_base(corpus, KbConfig(dim=50, epochs=5, seed=0))
print(f"{len(kb.vectors)} words, {len(kb.bigrams)} bigram pairs")

for word in ("curfew", "riot", "protest"):
    print(f"{word:8s} neighbours: {nearest_neighbors(kb.vectors, word, 5)}")
    print(f"{'':8s} partners:   {top_cooccurring(kb.bigrams, word, 5)}")

# an unseen word still gets a vector from its character n-grams
print("curfews  neighbours:", nearest_neighbors(kb.vectors, "curfews", 3))

with tempfile.TemporaryDirectory() as d:
    kb.save(d)
    again = KnowledgeBase.load(d)
    print("reloaded identical:", (again.vectors.vectors == kb.vectors.vectors).all()
          and again.bigrams == kb.bigrams)
