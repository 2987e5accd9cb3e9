"""Triplet knowledge base plus lexicon-driven entity extraction.

The store is a flat list of (subject, relation, object) triplets with an
entity index; reports are matched against an entity lexicon by longest-match
scanning, and triplets are retrieved per extracted entity with a hard cap.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .graph import Triplet, normalize_entity
from .text import tokenize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntityLexicon:
    """Set of normalized entity surface forms, possibly multi-word."""

    entries: frozenset[str]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("lexicon is empty")

    @classmethod
    def from_names(cls, names) -> "EntityLexicon":
        return cls(entries=frozenset(normalize_entity(n) for n in names))

    @classmethod
    def from_file(cls, path) -> "EntityLexicon":
        with open(path) as f:
            names = [line.strip() for line in f if line.strip()]
        return cls.from_names(names)

    def to_file(self, path) -> None:
        with open(path, "w") as f:
            for name in sorted(self.entries):
                f.write(name + "\n")


@dataclass
class TripletStore:
    """Immutable-after-load triplet list with an entity -> positions index."""

    triplets: tuple[Triplet, ...]
    index: dict[str, tuple[int, ...]] = field(default_factory=dict)
    duplicates_dropped: int = 0

    def __post_init__(self):
        idx: dict[str, list[int]] = {}
        for pos, t in enumerate(self.triplets):
            idx.setdefault(t.subject, []).append(pos)
            if t.object != t.subject:
                idx.setdefault(t.object, []).append(pos)
        self.index = {k: tuple(v) for k, v in idx.items()}

    def __len__(self) -> int:
        return len(self.triplets)


def load_store(path) -> TripletStore:
    """Load a JSONL knowledge base ({subject, relation, object} per line).

    Duplicate triplets are dropped (count kept on the store and logged);
    malformed lines and unknown relation strings are rejected with the
    offending line number.
    """
    triplets: list[Triplet] = []
    seen: set[Triplet] = set()
    dropped = 0
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                t = Triplet(raw["subject"], raw["relation"], raw["object"])
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ValueError(f"{path}: malformed triplet at line {lineno}: {e}") from e
            except ValueError as e:
                raise ValueError(f"{path}: line {lineno}: {e}") from e
            if t in seen:
                dropped += 1
                continue
            seen.add(t)
            triplets.append(t)
    if dropped:
        log.info("dropped %d duplicate triplets while loading %s", dropped, path)
    return TripletStore(triplets=tuple(triplets), duplicates_dropped=dropped)


def extract_entities(text: str, lexicon: EntityLexicon) -> list[str]:
    """Longest-match entity extraction over word tokens.

    Case-insensitive, word-boundary-respecting (whole tokens only). Matches
    are consumed left to right, preferring the longest lexicon entry at each
    position; output preserves first-occurrence order and is deduplicated.
    """
    by_words = {tuple(e.split(" ")): e for e in lexicon.entries}
    max_words = max(len(w) for w in by_words)
    tokens = tokenize(text)
    found: list[str] = []
    seen: set[str] = set()
    i = 0
    while i < len(tokens):
        for span in range(min(max_words, len(tokens) - i), 0, -1):
            entry = by_words.get(tuple(tokens[i : i + span]))
            if entry is not None:
                if entry not in seen:
                    seen.add(entry)
                    found.append(entry)
                i += span
                break
        else:
            i += 1
    return found


def query_triplets(store: TripletStore, entities: list[str], cap: int) -> list[Triplet]:
    """All triplets mentioning any query entity, deterministically ordered.

    Ordering is (rank of the first query entity mentioning the triplet,
    store position); the merged, deduplicated list is truncated to `cap`.
    """
    if cap < 0:
        raise ValueError(f"cap must be >= 0, got {cap}")
    best_rank: dict[int, int] = {}
    for rank, entity in enumerate(entities):
        for pos in store.index.get(normalize_entity(entity), ()):
            if pos not in best_rank:
                best_rank[pos] = rank
    order = sorted(best_rank, key=lambda pos: (best_rank[pos], pos))
    return [store.triplets[pos] for pos in order[:cap]]
