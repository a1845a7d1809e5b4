import json
import time
from pathlib import Path

import pytest

from proactive_qe.data import SAMPLE_CONFIG, SAMPLE_CORPUS, SAMPLE_STREAM, data_path
from proactive_qe.external import KbConfig, build_knowledge_base
from proactive_qe.pipeline import RunConfig, run_pipeline
from proactive_qe.stream import Document, load_stream
from proactive_qe.synth import archive_corpus, synthetic_stream, write_jsonl

SMALL_CONFIG = {
    "trigger": {"d": 20, "P": 3, "th": 0.15},
    "lda": {"m": 3, "k": 10, "iterations": 100},
    "kb": {"dim": 20, "epochs": 2, "min_count": 3, "i": 3, "j": 3},
    "evaluation": {"extra_windows": [10]},
    "l": 2,
    "seed": 0,
}


def doc(tokens, id="d", hashtags=(), timestamp=0.0):
    """Document with pre-tokenized content, bypassing text preparation."""
    return Document(id=id, timestamp=timestamp, raw=" ".join(tokens),
                    tokens=tuple(tokens), hashtags=tuple(hashtags))


@pytest.fixture(scope="session")
def small_inputs(tmp_path_factory):
    """Small stream with one planted shift at window 8, a toy corpus and KB."""
    d = tmp_path_factory.mktemp("small")
    stream = write_jsonl(synthetic_stream(n_windows=14, docs_per_window=150,
                                          events={8: "riot"}, seed=0), d / "stream.jsonl")
    corpus = write_jsonl(archive_corpus(400), d / "corpus.jsonl")
    config = d / "config.json"
    config.write_text(json.dumps(SMALL_CONFIG))
    cfg = RunConfig.from_dict(SMALL_CONFIG)
    kb = build_knowledge_base(load_stream(corpus, require_timestamp=False), cfg.kb)
    kb.save(d / "kb")
    return {"dir": d, "stream": stream, "corpus": corpus, "config": config,
            "kb": d / "kb", "cfg": cfg}


@pytest.fixture(scope="session")
def small_run(small_inputs, tmp_path_factory):
    out = tmp_path_factory.mktemp("small_run")
    manifest = run_pipeline(small_inputs["stream"], small_inputs["kb"], small_inputs["cfg"], out)
    return out, manifest


@pytest.fixture(scope="session")
def sample_kb(tmp_path_factory):
    cfg = RunConfig.from_dict(json.loads(data_path(SAMPLE_CONFIG).read_text()))
    out = tmp_path_factory.mktemp("sample_kb")
    build_knowledge_base(load_stream(data_path(SAMPLE_CORPUS), require_timestamp=False),
                         cfg.kb).save(out)
    return out


@pytest.fixture(scope="session")
def sample_run(sample_kb, tmp_path_factory):
    """The bundled 10k-document stream run once, single-threaded, with l=2."""
    cfg = RunConfig.from_dict({**json.loads(data_path(SAMPLE_CONFIG).read_text()),
                               "l": 2, "workers": 1})
    out = tmp_path_factory.mktemp("sample_run")
    t0 = time.perf_counter()
    manifest = run_pipeline(data_path(SAMPLE_STREAM), sample_kb, cfg, out)
    return {"dir": out, "manifest": manifest, "seconds": time.perf_counter() - t0,
            "cfg": cfg}


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
