"""Frozen word-embedding tables used to initialize graph node features.

Node features are not trained: each entity vector is the mean of its word
vectors plus a level vector (global / organ / finding), and pad rows get a
dedicated pad vector. The desk-scale table derives every word vector
deterministically from a seed, so unknown words always resolve; a file-backed
table (one `word v1 ... vd` row per line) plugs in real pretrained vectors
and rejects words it does not carry.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch

from .graph import KnowledgeGraph, NodeLevel

_LEVEL_KEYS = {
    NodeLevel.GLOBAL: "[level-global]",
    NodeLevel.ORGAN: "[level-organ]",
    NodeLevel.FINDING: "[level-finding]",
}


def _seeded_vector(key: str, seed: int, dim: int) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}:{key}".encode()).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.standard_normal(dim) / np.sqrt(dim)


class HashedEmbeddingTable:
    """Deterministic per-word vectors from (seed, word); never fails to resolve."""

    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def word_vector(self, word: str) -> np.ndarray:
        vec = self._cache.get(word)
        if vec is None:
            vec = _seeded_vector(word, self.seed, self.dim)
            self._cache[word] = vec
        return vec

    def entity_vector(self, entity: str) -> np.ndarray:
        words = entity.split(" ")
        return np.mean([self.word_vector(w) for w in words], axis=0)

    def level_vector(self, level: NodeLevel) -> np.ndarray:
        return self.word_vector(_LEVEL_KEYS[level])


class FileEmbeddingTable(HashedEmbeddingTable):
    """Word vectors loaded from a text file; unknown words are rejected.

    Level vectors and the `[cls]` global-node vector fall back to the seeded
    scheme unless the file carries rows for `[level-global]`, `[level-organ]`,
    `[level-finding]`, or `[cls]`.
    """

    _FALLBACK_WORDS = frozenset(_LEVEL_KEYS.values()) | {"[cls]"}

    def __init__(self, path, seed: int = 0):
        vectors: dict[str, np.ndarray] = {}
        dim = None
        with open(path) as f:
            for lineno, line in enumerate(f, start=1):
                parts = line.split()
                if not parts:
                    continue
                word, values = parts[0], parts[1:]
                if dim is None:
                    dim = len(values)
                elif len(values) != dim:
                    raise ValueError(
                        f"{path}: line {lineno} has {len(values)} values, expected {dim}"
                    )
                vectors[word] = np.array([float(v) for v in values])
        if not vectors:
            raise ValueError(f"{path}: empty embedding table")
        super().__init__(dim=dim, seed=seed)
        self._vectors = vectors

    def word_vector(self, word: str) -> np.ndarray:
        vec = self._vectors.get(word)
        if vec is None:
            if word in _LEVEL_KEYS.values():
                return super().word_vector(word)
            raise KeyError(f"word not in embedding table: {word!r}")
        return vec


def init_node_features(
    g: KnowledgeGraph, table: HashedEmbeddingTable, dtype=torch.float32
) -> torch.Tensor:
    """Initial node features: mean word vector per entity plus its level vector.

    Pad rows get the zero pad vector; their encoded features are zeroed again
    after the graph encoder, so they never contribute downstream.
    """
    rows = np.zeros((g.num_nodes, table.dim))
    for i, (entity, level) in enumerate(g.nodes):
        if level is NodeLevel.PAD:
            continue
        try:
            rows[i] = table.entity_vector(entity) + table.level_vector(level)
        except KeyError as e:
            raise ValueError(f"cannot resolve node {entity!r}: {e}") from e
    return torch.as_tensor(rows, dtype=dtype)
