"""
Four ways to build a query
==========================

static       the topic's top words
emergent     plus dynamic words of the window the topic misses
proactive_vs plus vector-space neighbours
proactive_co plus frequent bigram partners

Each step only adds terms, so with the same minimum match length every
query retrieves a superset of the one before it.
"""

from proactive_qe.emergence import EmergenceTracker, TriggerConfig
from proactive_qe.expansion import METHODS, build_queries, match_query
from proactive_qe.external import KbConfig, build_knowledge_base
from proactive_qe.stream import Document, WindowConfig, assign_windows, stream_slice
from proactive_qe.synth import archive_corpus, synthetic_stream
from proactive_qe.topics import LdaConfig, fit_lda

records = synthetic_stream(n_windows=14, docs_per_window=200, events={8: "protest"}, seed=1)
windows = assign_windows([Document.from_text(r["id"], r["timestamp"], r["text"]) for r in records],
                         WindowConfig())
tracker = EmergenceTracker(TriggerConfig(d=20))
reports = [tracker.observe(w)[0] for w in windows]

kb = build_knowledge_base([Document.from_text(r["id"], 0, r["text"]) for r in archive_corpus()],
                          KbConfig(dim=50, seed=0))
topics = fit_lda(windows[8].documents, LdaConfig(m=3, k=10, iterations=300))
queries = build_queries(topics, reports[8], k=10, d=20, l=2, V=kb.vectors, F=kb.bigrams, i=3, j=3)

later = stream_slice(windows, 8)
for q in queries:
    if q.topic_id == 0:
        r = match_query(q, later)
        print(f"{q.method:13s} {len(q.terms):3d} terms  {len(r.matched):5d} matches")
extra = sorted(next(q for q in queries if q.topic_id == 0 and q.method == "proactive_co").terms
               - next(q for q in queries if q.topic_id == 0 and q.method == "emergent").terms)
print("bigram partners added to topic 0:", extra)
