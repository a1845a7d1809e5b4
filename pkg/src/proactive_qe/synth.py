"""Synthetic streams and corpora with planted structure.

Used by the test-suite, the demos and to regenerate the bundled sample
files. All generators are deterministic in their ``seed``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

SAMPLE_START = 1429315200  # 2015-04-18T00:00:00Z

BACKGROUND = (
    "police officer city street people report news video watch community chief "
    "department station patrol county mayor neighborhood question answer morning "
    "evening weekend story photo update local state public meeting support family "
    "school traffic driver highway weather sunday council budget office statement "
    "interview reporter"
).split()

BACKGROUND_TAGS = ["#police", "#news", "#city", "#local", "#breaking", "#update"]

EVENTS: Dict[str, dict] = {
    "protest": {
        "words": (
            "protest march rally crowd chant banner demand downtown gather peaceful "
            "student speech megaphone walkout organizer solidarity unity marcher "
            "petition boycott vigil demonstration slogan activist sign placard"
        ).split(),
        "tags": ["#protest", "#justice", "#marchforjustice", "#solidarity", "#vigil"],
    },
    "riot": {
        "words": (
            "riot looting fire burn smash storefront vandalism arson destroy damage "
            "chaos violence brick teargas rubber bullet pharmacy flames shattered "
            "rampage mob torched injured clash looter"
        ).split(),
        "tags": ["#riot", "#looting", "#unrest", "#fire", "#teargas"],
    },
    "curfew": {
        "words": (
            "curfew lockdown nightfall imposed military guard troop nationwide "
            "overnight midnight deadline enforce mandatory citywide emergency "
            "declared governor soldier checkpoint violation restriction hummer "
            "deployment order barricade"
        ).split(),
        "tags": ["#curfew", "#lockdown", "#nationalguard", "#emergency", "#stayhome"],
    },
}

# which event's words an archive associates with each event, i.e. what
# tends to follow it
FOLLOWS = {"protest": "riot", "riot": "curfew", "curfew": "protest"}

RARE_TAGS = ["#health", "#prayers", "#peace", "#history", "#music"]

DEFAULT_EVENT_WINDOWS = {12: "protest", 22: "riot", 32: "curfew"}


def _pick(rng: np.random.Generator, items: Sequence[str], n: int) -> List[str]:
    idx = rng.choice(len(items), size=min(n, len(items)), replace=False)
    return [items[i] for i in idx]


def _background_doc(rng, vocab=BACKGROUND, tags=BACKGROUND_TAGS) -> List[str]:
    words = _pick(rng, vocab, int(rng.integers(4, 8)))
    if rng.random() < 0.5:
        words.append(tags[int(rng.integers(len(tags)))])
    return words


def _event_doc(rng, event: str, vocab=BACKGROUND) -> List[str]:
    event_def = EVENTS[event]
    words = _pick(rng, event_def["words"], int(rng.integers(4, 7)))
    words += _pick(rng, vocab, int(rng.integers(1, 3)))
    words += _pick(rng, event_def["tags"], int(rng.integers(1, 3)))
    return words


def _decorate(rng, words: List[str]) -> str:
    """Shuffle and sprinkle stopwords, numbers and links, as in real posts."""
    words = list(words)
    rng.shuffle(words)
    if rng.random() < 0.3:
        words.insert(int(rng.integers(len(words) + 1)), "the")
    if rng.random() < 0.1:
        words.append(str(int(rng.integers(1, 500))))
    if rng.random() < 0.1:
        words.append(f"http://t.co/{int(rng.integers(1e6)):06d}")
    return " ".join(words)


def synthetic_stream(
    n_windows: int = 40,
    docs_per_window: int = 250,
    events: Optional[Mapping[int, str]] = None,
    seed: int = 0,
    start: int = SAMPLE_START,
    window_minutes: int = 15,
    event_share: float = 0.6,
    aftermath_share: float = 0.15,
    background: Sequence[str] = BACKGROUND,
) -> List[dict]:
    """Stream records with vocabulary shifts planted at ``events`` windows.

    An event takes ``event_share`` of its window's documents and keeps
    ``aftermath_share`` of every later window. A few documents carry rare
    hashtags so that low-frequency precision has something to measure.
    """
    events = dict(DEFAULT_EVENT_WINDOWS if events is None else events)
    rng = np.random.default_rng(seed)
    width = window_minutes * 60
    records = []
    active: List[str] = []
    for w in range(n_windows):
        if w in events:
            active.append(events[w])
        offsets = np.sort(rng.uniform(0, width, size=docs_per_window))
        for n, off in enumerate(offsets):
            r = rng.random()
            if w in events and r < event_share:
                words = _event_doc(rng, events[w], background)
            elif w not in events and active and r < aftermath_share * len(active):
                words = _event_doc(rng, active[int(rng.integers(len(active)))], background)
            else:
                words = _background_doc(rng, background)
            if rng.random() < 0.02:
                words.append(RARE_TAGS[int(rng.integers(len(RARE_TAGS)))])
            records.append({
                "id": f"w{w:04d}-{n:04d}",
                "timestamp": int(start + w * width + off),
                "text": _decorate(rng, words),
            })
    return records


def archive_corpus(n_docs: int = 3000, seed: int = 1) -> List[dict]:
    """News-archive records linking each event's words to what follows it."""
    rng = np.random.default_rng(seed)
    names = list(EVENTS)
    records = []
    for n in range(n_docs):
        event = names[int(rng.integers(len(names)))]
        words = _pick(rng, EVENTS[event]["words"], 5)
        if rng.random() < 0.7:
            follow = EVENTS[FOLLOWS[event]]["words"]
            words += _pick(rng, follow, 3)
        words += _pick(rng, BACKGROUND, 3)
        rng.shuffle(words)
        records.append({"id": f"a{n:05d}", "text": " ".join(words)})
    return records


def stationary_stream(n_windows: int = 12, docs_per_window: int = 200, seed: int = 0,
                      **kw) -> List[dict]:
    return synthetic_stream(n_windows, docs_per_window, events={}, seed=seed, **kw)


def burst_stream(n_windows: int = 8, docs_per_window: int = 200, burst_window: int = 5,
                 word: str = "zeppelin", share: float = 0.3, seed: int = 0) -> List[dict]:
    """Stationary stream with ``word`` injected into ``share`` of one window."""
    records = stationary_stream(n_windows, docs_per_window, seed=seed)
    rng = np.random.default_rng(seed + 10_000)
    in_window = [r for r in records if r["id"].startswith(f"w{burst_window:04d}-")]
    n_inject = int(np.ceil(share * len(in_window)))
    for i in rng.choice(len(in_window), size=n_inject, replace=False):
        in_window[i]["text"] += " " + word
    return records


def planted_topic_corpus(n_per_topic: int = 250, doc_len: int = 10, seed: int = 0
                         ) -> Tuple[List[List[str]], List[str], List[str]]:
    """Two disjoint 10-word vocabularies; returns (docs, vocab_a, vocab_b)."""
    rng = np.random.default_rng(seed)
    vocab_a = [f"alpha{c}" for c in "abcdefghij"]
    vocab_b = [f"beta{c}" for c in "abcdefghij"]
    docs = [[vocab_a[i] for i in rng.integers(0, 10, doc_len)] for _ in range(n_per_topic)]
    docs += [[vocab_b[i] for i in rng.integers(0, 10, doc_len)] for _ in range(n_per_topic)]
    order = rng.permutation(len(docs))
    return [docs[i] for i in order], vocab_a, vocab_b


def hashtag_communities(n_communities: int, n_docs: int = 400, side_share: float = 0.1,
                        seed: int = 0) -> List[dict]:
    """Records whose hashtags form ``n_communities`` tight groups.

    Each document carries its community's core tag and, with probability
    ``side_share``, one of two side tags of the same community.
    """
    rng = np.random.default_rng(seed)
    records = []
    for n in range(n_docs):
        c = int(rng.integers(n_communities))
        tags = [f"#core{c}"]
        if rng.random() < side_share:
            tags.append(f"#side{c}x{int(rng.integers(2))}")
        records.append({"id": f"h{n:05d}", "timestamp": SAMPLE_START + n,
                        "text": "police update " + " ".join(tags)})
    return records


def synonym_corpus(n_pairs: int = 10, n_docs: int = 3000, seed: int = 0
                   ) -> Tuple[List[List[str]], List[Tuple[str, str]]]:
    """Pseudo-word corpus where each synonym pair shares one context group."""
    rng = np.random.default_rng(seed)
    consonants, vowels = "bcdfghjklmnprstvz", "aeiou"

    used = set()

    def word(syllables: int) -> str:
        while True:
            w = "".join(consonants[int(rng.integers(len(consonants)))]
                        + vowels[int(rng.integers(len(vowels)))] for _ in range(syllables))
            if w not in used:
                used.add(w)
                return w

    pairs = [(word(3), word(3)) for _ in range(n_pairs)]
    contexts = [[word(2) for _ in range(6)] for _ in range(n_pairs)]
    noise = [word(2) for _ in range(30)]
    docs = []
    for _ in range(n_docs):
        p = int(rng.integers(n_pairs))
        toks = _pick(rng, contexts[p], 4) + [pairs[p][int(rng.integers(2))]] + _pick(rng, noise, 2)
        rng.shuffle(toks)
        docs.append(toks)
    return docs, pairs


def write_jsonl(records: Iterable[dict], path) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
    return path


SAMPLE_CONFIG = {
    "trigger": {"d": 20, "P": 3, "th": 0.15},
    "lda": {"m": 5, "k": 20, "iterations": 300},
    "kb": {"dim": 50, "epochs": 5, "min_count": 5, "i": 5, "j": 5},
    "l": 2,
    "seed": 0,
}
