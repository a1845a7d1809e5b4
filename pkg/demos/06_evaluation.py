"""
Measuring a result set
======================

Volume counts matched posts, relevance counts their hashtags, and
conciseness is the elbow of a k-means distortion curve over hashtag
features: fewer natural groups means a more focused result. Precision
asks what share of a hashtag's later occurrences a query caught.
"""

from proactive_qe.evaluation import ElbowCurve, conciseness, elbow, precision
from proactive_qe.expansion import Query, QueryResult
from proactive_qe.stream import Document
from proactive_qe.synth import hashtag_communities

for n in (3, 8):
    docs = [Document.from_text(r["id"], r["timestamp"], r["text"])
            for r in hashtag_communities(n, seed=0)]
    c = conciseness(docs)
    print(f"{n} planted hashtag communities -> optimal k {c.optimal_k}")
    print("   distortion:", " ".join(f"{d:.0f}" for d in c.curve.distortions))

ks = tuple(range(2, 16))
print("elbow of 100/k:", elbow(ElbowCurve(ks, tuple(100 / k for k in ks))))

stream = [Document.from_text(str(i), 0, t) for i, t in
          enumerate(["#curfew tonight", "#curfew #curfew again", "#curfew here", "quiet"])]
q = Query(0, frozenset({"tonight", "again"}), "static", l=1)
result = QueryResult(q, tuple(stream[:2]))
print("precision of #curfew:", precision("#curfew", result, stream))
