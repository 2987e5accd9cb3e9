"""Per-image dynamic knowledge graph: base structure, triplet updates, padding, masks.

The graph is a node list (entity name, level) plus a symmetric binary adjacency
matrix. Node 0 is always the single global node. Real nodes are self-visible
(diagonal 1); pad nodes are fully invisible, including to themselves (all-zero
row and column, diagonal included).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

_WORD_RE = re.compile(r"[a-z0-9_]+")

# Additive attention-mask value for blocked pairs. Large enough that
# exp(score + BLOCKED) underflows to exactly 0.0 in float32 and float64,
# so masked nodes cannot leak into attention outputs even at the bit level.
MASK_BLOCKED = -1.0e9


def normalize_entity(text: str) -> str:
    """Canonical entity form: lowercase word tokens joined by single spaces.

    Idempotent; raises ValueError if nothing token-like remains.
    """
    words = _WORD_RE.findall(text.lower())
    if not words:
        raise ValueError(f"entity name has no word characters: {text!r}")
    return " ".join(words)


class NodeLevel(str, Enum):
    GLOBAL = "global"
    ORGAN = "organ"
    FINDING = "finding"
    PAD = "pad"


class Relation(str, Enum):
    SUGGESTIVE_OF = "suggestive_of"
    MODIFY = "modify"
    LOCATED_AT = "located_at"


@dataclass(frozen=True)
class Triplet:
    """(subject, relation, object) fact linking two entities."""

    subject: str
    relation: Relation
    object: str

    def __post_init__(self):
        object.__setattr__(self, "subject", normalize_entity(self.subject))
        object.__setattr__(self, "object", normalize_entity(self.object))
        object.__setattr__(self, "relation", Relation(self.relation))


@dataclass(frozen=True)
class BaseGraphSpec:
    """Static graph description: organ names plus (finding, owning organ) pairs."""

    organs: tuple[str, ...]
    findings: tuple[tuple[str, str], ...]

    @classmethod
    def from_json(cls, path) -> "BaseGraphSpec":
        with open(path) as f:
            raw = json.load(f)
        organs = tuple(normalize_entity(o) for o in raw["organs"])
        findings = tuple(
            (normalize_entity(e["name"]), normalize_entity(e["organ"]))
            for e in raw["findings"]
        )
        return cls(organs=organs, findings=findings)

    def to_json(self, path) -> None:
        raw = {
            "organs": list(self.organs),
            "findings": [{"name": n, "organ": o} for n, o in self.findings],
        }
        with open(path, "w") as f:
            json.dump(raw, f, indent=2)
            f.write("\n")


GLOBAL_NODE = "[cls]"


@dataclass(frozen=True)
class KnowledgeGraph:
    """Immutable graph value: ordered nodes and a {0,1} adjacency matrix.

    All operations return new graphs; instances are safe to share across workers.
    """

    nodes: tuple[tuple[str, NodeLevel], ...]
    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.int8)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_real_nodes(self) -> int:
        return sum(1 for _, lvl in self.nodes if lvl is not NodeLevel.PAD)

    def index_of(self, entity: str) -> int | None:
        entity = normalize_entity(entity)
        for i, (name, lvl) in enumerate(self.nodes):
            if name == entity and lvl is not NodeLevel.PAD:
                return i
        return None

    def validate(self) -> None:
        n = self.num_nodes
        adj = self.adjacency
        if adj.shape != (n, n):
            raise ValueError(f"adjacency shape {adj.shape} != node count {n}")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if (adj != adj.T).any():
            raise ValueError("adjacency must be symmetric")
        if n == 0 or self.nodes[0][1] is not NodeLevel.GLOBAL:
            raise ValueError("node 0 must be the global node")
        if sum(1 for _, lvl in self.nodes if lvl is NodeLevel.GLOBAL) != 1:
            raise ValueError("exactly one global node required")
        for i, (name, lvl) in enumerate(self.nodes):
            if lvl is NodeLevel.PAD:
                if adj[i].any() or adj[:, i].any():
                    raise ValueError(f"pad node {i} must have all-zero row/column")
            elif adj[i, i] != 1:
                raise ValueError(f"real node {i} ({name}) must be self-visible")

    def to_json_dict(self) -> dict:
        return {
            "nodes": [{"entity": name, "level": lvl.value} for name, lvl in self.nodes],
            "adjacency": self.adjacency.tolist(),
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "KnowledgeGraph":
        nodes = tuple(
            (e["entity"], NodeLevel(e["level"])) for e in raw["nodes"]
        )
        return cls(nodes=nodes, adjacency=np.array(raw["adjacency"], dtype=np.int8))


def build_base_graph(spec: BaseGraphSpec) -> KnowledgeGraph:
    """Build the static graph: global node, mutually connected organs, and
    findings linked to their organ, to same-organ findings, and to the global node.
    """
    names = [GLOBAL_NODE] + list(spec.organs) + [n for n, _ in spec.findings]
    seen = set()
    for name in names:
        if name in seen:
            raise ValueError(f"duplicate entity name in base graph spec: {name!r}")
        seen.add(name)
    for _, organ in spec.findings:
        if organ not in spec.organs:
            raise ValueError(f"finding references unknown organ: {organ!r}")

    nodes = [(GLOBAL_NODE, NodeLevel.GLOBAL)]
    nodes += [(o, NodeLevel.ORGAN) for o in spec.organs]
    nodes += [(n, NodeLevel.FINDING) for n, _ in spec.findings]

    n = len(nodes)
    adj = np.eye(n, dtype=np.int8)
    organ_idx = {o: 1 + i for i, o in enumerate(spec.organs)}

    # organs: all pairs, plus the global node
    for i in organ_idx.values():
        adj[0, i] = adj[i, 0] = 1
        for j in organ_idx.values():
            adj[i, j] = 1

    base = 1 + len(spec.organs)
    by_organ: dict[str, list[int]] = {}
    for k, (name, organ) in enumerate(spec.findings):
        i = base + k
        adj[0, i] = adj[i, 0] = 1
        oi = organ_idx[organ]
        adj[oi, i] = adj[i, oi] = 1
        by_organ.setdefault(organ, []).append(i)
    for members in by_organ.values():
        for i in members:
            for j in members:
                adj[i, j] = 1

    g = KnowledgeGraph(nodes=tuple(nodes), adjacency=adj)
    g.validate()
    return g


def _with_edge(g: KnowledgeGraph, i: int, j: int) -> KnowledgeGraph:
    if g.adjacency[i, j] == 1 and g.adjacency[j, i] == 1:
        return g
    adj = np.array(g.adjacency, dtype=np.int8)
    adj[i, j] = adj[j, i] = 1
    return KnowledgeGraph(nodes=g.nodes, adjacency=adj)


def _with_node(g: KnowledgeGraph, entity: str, level: NodeLevel) -> KnowledgeGraph:
    n = g.num_nodes
    adj = np.zeros((n + 1, n + 1), dtype=np.int8)
    adj[:n, :n] = g.adjacency
    adj[n, n] = 1
    adj[0, n] = adj[n, 0] = 1  # new nodes always link to the global node
    return KnowledgeGraph(nodes=g.nodes + ((entity, level),), adjacency=adj)


def apply_triplet(g: KnowledgeGraph, t: Triplet) -> KnowledgeGraph:
    """Fold one triplet into the graph.

    Both endpoints present: connect them. Exactly one present: append the
    missing entity (organ level when the relation is located_at and the
    missing side is the object, finding level otherwise) and connect.
    Neither present: no-op. Idempotent.
    """
    si = g.index_of(t.subject)
    oi = g.index_of(t.object)
    if si is not None and oi is not None:
        return _with_edge(g, si, oi)
    if si is None and oi is None:
        return g
    if oi is None:
        level = (
            NodeLevel.ORGAN
            if t.relation is Relation.LOCATED_AT
            else NodeLevel.FINDING
        )
        g = _with_node(g, t.object, level)
        return _with_edge(g, si, g.num_nodes - 1)
    g = _with_node(g, t.subject, NodeLevel.FINDING)
    return _with_edge(g, oi, g.num_nodes - 1)


def update_graph(
    g: KnowledgeGraph,
    triplets: list[Triplet],
    max_triplets: int = 90,
    max_nodes: int | None = None,
) -> KnowledgeGraph:
    """Fold a triplet list into the graph, in list order.

    The result is order-independent when every endpoint already exists in the
    graph (pure edge-set union); order can matter when one triplet introduces
    a node that another triplet references.

    `max_nodes` optionally bounds growth: triplets that would append a node
    beyond the budget are skipped (edge-only triplets still apply), which
    keeps the graph paddable to a fixed size downstream.
    """
    if len(triplets) > max_triplets:
        raise ValueError(
            f"{len(triplets)} triplets exceed the configured maximum of {max_triplets}"
        )
    for t in triplets:
        if max_nodes is not None and g.num_nodes >= max_nodes:
            si, oi = g.index_of(t.subject), g.index_of(t.object)
            if (si is None) != (oi is None):
                continue  # would append a node past the budget
        g = apply_triplet(g, t)
    return g


def pad_graph(g: KnowledgeGraph, target: int) -> KnowledgeGraph:
    """Append fully-masked pad nodes until the graph has `target` nodes."""
    n = g.num_nodes
    if n > target:
        raise ValueError(f"graph has {n} nodes, cannot pad down to {target}")
    if n == target:
        return g
    adj = np.zeros((target, target), dtype=np.int8)
    adj[:n, :n] = g.adjacency
    pads = tuple(("[pad]", NodeLevel.PAD) for _ in range(target - n))
    return KnowledgeGraph(nodes=g.nodes + pads, adjacency=adj)


def adjacency_to_mask(g: KnowledgeGraph, dtype=np.float32) -> np.ndarray:
    """Additive attention mask from the adjacency matrix.

    Entry (i, j) is 0 where node i may attend to node j (A[i][j] = 1) and
    MASK_BLOCKED (-1e9) elsewhere. Rows of pad nodes are fully blocked; the
    attention primitive defines such rows to produce zero output.
    """
    return np.where(g.adjacency == 1, 0.0, MASK_BLOCKED).astype(dtype)
