"""
The whole pipeline
==================

Build a knowledge base, replay a recorded stream through detection,
expansion and scoring, then draw the charts. The same steps are available
from the command line as ``proactive-qe build-kb``, ``run`` and ``report``.

Pass ``--full`` to use the bundled 10,000-post sample (about half a minute).
"""

import json
import sys
import tempfile
from pathlib import Path

from proactive_qe.data import SAMPLE_CONFIG, SAMPLE_CORPUS, SAMPLE_STREAM, data_path
from proactive_qe.evaluation import read_csv
from proactive_qe.external import build_knowledge_base
from proactive_qe.pipeline import RunConfig, run_pipeline
from proactive_qe.report import write_report
from proactive_qe.stream import load_stream
from proactive_qe.synth import synthetic_stream, write_jsonl

out = Path(tempfile.mkdtemp(prefix="proactive_qe_demo_"))
config = json.loads(data_path(SAMPLE_CONFIG).read_text())
if "--full" in sys.argv:
    stream = data_path(SAMPLE_STREAM)
else:
    stream = write_jsonl(synthetic_stream(n_windows=16, docs_per_window=150,
                                          events={8: "protest"}, seed=0), out / "stream.jsonl")
    config["lda"]["iterations"] = 100
cfg = RunConfig.from_dict(config)

kb = build_knowledge_base(load_stream(data_path(SAMPLE_CORPUS), require_timestamp=False), cfg.kb)
kb.save(out / "kb")
manifest = run_pipeline(stream, out / "kb", cfg, out / "run")
print(f"{manifest.windows_total} windows, triggered: {manifest.triggered}")

rows = read_csv(out / "run" / "metrics.csv")
first = manifest.triggered[0]
print(f"window {first}, topic 0:")
for r in rows:
    if int(r["window"]) == first and r["topic"] == "0":
        print(f"  {r['method']:13s} volume {r['volume']:>5s}  hashtags {r['hashtag_count']:>5s}"
              f"  optimal k {r['optimal_k']}")

charts = write_report(out / "run", out / "report")
print(f"{len(charts) - 1} charts written to {out / 'report'}")
