"""
Spotting an emerging event
==========================

Each window becomes a word co-occurrence graph. A word's dynamic score is
its eigenvector centrality now minus its average over the previous windows.
When the top dynamic words barely overlap with those of the last few
windows, the window triggers query expansion.
"""

from proactive_qe.emergence import EmergenceTracker, TriggerConfig
from proactive_qe.stream import Document, WindowConfig, assign_windows
from proactive_qe.synth import synthetic_stream

# 14 quiet windows with a riot planted at window 8
records = synthetic_stream(n_windows=14, docs_per_window=200, events={8: "riot"}, seed=0)
docs = [Document.from_text(r["id"], r["timestamp"], r["text"]) for r in records]
windows = assign_windows(docs, WindowConfig())

tracker = EmergenceTracker(TriggerConfig(d=20, P=3, th=0.15))
for w in windows:
    report, fired = tracker.observe(w)
    sim = tracker.similarities[-1]
    sim_text = "   -  " if sim is None else f"{sim:.3f}"
    flag = "  <-- trigger" if fired else ""
    print(f"window {w.index:2d}  max overlap {sim_text}  top: {' '.join(report.top(5))}{flag}")
