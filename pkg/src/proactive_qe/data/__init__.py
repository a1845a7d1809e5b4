"""Bundled resources: stopwords, config schema and the sample stream and corpus."""

from importlib import resources
from pathlib import Path

SAMPLE_STREAM = "sample_stream.jsonl"
SAMPLE_CORPUS = "sample_corpus.jsonl"
SAMPLE_CONFIG = "sample_config.json"


def data_path(name: str) -> Path:
    """Filesystem path of a bundled file."""
    return Path(str(resources.files(__name__).joinpath(name)))
