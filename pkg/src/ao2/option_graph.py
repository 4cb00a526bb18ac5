"""Option nodes, the global option pool, and the weighted L1 similarity.

The pool is the learner's whole memory. Action leaves occupy ids ``0..K-1``
(leaf id == action index) and interior nodes are appended after them with
dense ids. Interior values are mirrored into a contiguous matrix so that a
nearest-node query is a single vectorised scan.
"""
from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import ContractViolation

WEIGHT_FLOOR = 1e-6


class NodeKind(str, enum.Enum):
    INTERIOR = "interior"
    ACTION_LEAF = "action"


class Edge(NamedTuple):
    child: int
    weight: float


@dataclass(eq=False)
class OptionNode:
    id: int
    value: np.ndarray
    kind: NodeKind = NodeKind.INTERIOR
    # child id -> weight; insertion order is the edge order and keys are
    # unique, so no node can hold two edges to the same child
    children: dict[int, float] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.kind is NodeKind.ACTION_LEAF

    @property
    def action_index(self) -> int | None:
        return self.id if self.is_leaf else None

    def edges(self) -> Iterator[Edge]:
        for child, weight in self.children.items():
            yield Edge(child, weight)


def attention(w, obs_dim: int | None = None) -> np.ndarray:
    """Validate and return attention weights as a float array."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or (obs_dim is not None and w.shape[0] != obs_dim):
        raise ContractViolation(f"attention weights have shape {w.shape}, expected ({obs_dim},)")
    if not np.all(w > 0):
        raise ContractViolation("attention weights must be strictly positive")
    return w


class OptionPool:
    """All option nodes and action leaves of one learner."""

    def __init__(self, obs_dim: int, action_count: int):
        if obs_dim < 1 or action_count < 1:
            raise ContractViolation("obs_dim and action_count must be positive")
        self.obs_dim = obs_dim
        self.action_count = action_count
        self.nodes: dict[int, OptionNode] = {}
        self._values = np.empty((64, obs_dim))
        self._n_interior = 0
        for a in range(action_count):
            self.nodes[a] = OptionNode(a, np.zeros(obs_dim), NodeKind.ACTION_LEAF)

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, node_id: int) -> OptionNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise KeyError(f"no node with id {node_id}") from None

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.nodes

    @property
    def n_interior(self) -> int:
        return self._n_interior

    @property
    def interior_values(self) -> np.ndarray:
        """Read-only ``(n_interior, obs_dim)`` matrix; row ``i`` is node ``K + i``."""
        v = self._values[: self._n_interior]
        v.flags.writeable = False
        return v

    def interior_ids(self) -> range:
        return range(self.action_count, self.action_count + self._n_interior)

    def row_of(self, node_id: int) -> int:
        return node_id - self.action_count

    def add_interior(self, value, parent: int | None = None) -> int:
        """Create an interior node wired to every action leaf with weight 0.

        When ``parent`` is given the new node is also attached to it as a
        child with weight 0.
        """
        value = np.array(value, dtype=np.float64)
        if value.shape != (self.obs_dim,):
            raise ContractViolation(f"value shape {value.shape} != ({self.obs_dim},)")
        if parent is not None and self[parent].is_leaf:
            raise ContractViolation("action leaves cannot have children")
        if self._n_interior == self._values.shape[0]:
            grown = np.empty((2 * self._values.shape[0], self.obs_dim))
            grown[: self._n_interior] = self._values[: self._n_interior]
            self._values = grown
        node_id = self.action_count + self._n_interior
        self._values[self._n_interior] = value
        self._n_interior += 1
        value.flags.writeable = False
        self.nodes[node_id] = OptionNode(node_id, value, children=dict.fromkeys(range(self.action_count), 0.0))
        if parent is not None:
            self.nodes[parent].children[node_id] = 0.0
        return node_id

    def add_edge(self, parent: int, child: int, weight: float = 0.0) -> None:
        p = self[parent]
        self[child]
        if p.is_leaf:
            raise ContractViolation("action leaves cannot have children")
        if child in p.children:
            raise ContractViolation(f"node {parent} already has an edge to {child}")
        p.children[child] = float(weight)

    def interior_children(self, node_id: int) -> list[int]:
        k = self.action_count
        return [c for c in self[node_id].children if c >= k]

    def action_children(self, node_id: int) -> list[int]:
        k = self.action_count
        return [c for c in self[node_id].children if c < k]

    def edge_count(self) -> int:
        return sum(len(n.children) for n in self.nodes.values())

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "obs_dim": self.obs_dim,
            "action_count": self.action_count,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "value": [_enc(x) for x in n.value],
                    "children": [{"child": c, "weight": _enc(w)} for c, w in n.children.items()],
                }
                for n in (self.nodes[i] for i in sorted(self.nodes))
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc: dict) -> "OptionPool":
        pool = cls(int(doc["obs_dim"]), int(doc["action_count"]))
        k = pool.action_count
        pending = []
        for i, nd in enumerate(sorted(doc["nodes"], key=lambda d: d["id"])):
            if nd["id"] != i:
                raise ContractViolation(f"node ids must be dense from 0, got {nd['id']} at position {i}")
            kind = NodeKind(nd["kind"])
            if (kind is NodeKind.ACTION_LEAF) != (i < k):
                raise ContractViolation(f"node {i} has kind {kind.value} but ids 0..{k - 1} are action leaves")
            if kind is NodeKind.INTERIOR:
                pool.add_interior([float(x) for x in nd["value"]])
                pool.nodes[i].children.clear()
            pending.append((i, nd["children"]))
        for i, children in pending:
            for e in children:
                pool.add_edge(i, int(e["child"]), float(e["weight"]))
        return pool

    @classmethod
    def from_json(cls, text: str) -> "OptionPool":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "OptionPool":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _enc(x: float) -> str:
    # 17 significant digits always round-trip a binary64
    return format(float(x), ".17g")


def distance(u, node: OptionNode, w) -> float:
    """Attention-weighted L1 distance ``sum_i w_i |u_i - v_i|``."""
    if node.is_leaf:
        raise ContractViolation(f"node {node.id} is an action leaf and has no comparable value")
    u = np.asarray(u, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if not (u.shape == node.value.shape == w.shape):
        raise ContractViolation(f"dimension mismatch: u{u.shape} v{node.value.shape} w{w.shape}")
    return float((np.abs(node.value - u) * w).sum())


def distances(values: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row-wise :func:`distance`; same operation order, so results agree bit for bit."""
    return (np.abs(values - u) * w).sum(axis=1)


def score_from_distance(d):
    return 1.0 / (1.0 + d)


def similarity_score(u, node: OptionNode, w) -> float:
    """Map the distance onto ``(0, 1]``; 1 only for an exact match."""
    return score_from_distance(distance(u, node, w))


def descendants(pool: OptionPool, root_id: int, max_depth: int = 8) -> set[int]:
    """Interior nodes within ``max_depth`` hops of ``root_id``, root included."""
    root = pool[root_id]
    if root.is_leaf:
        return set()
    k = pool.action_count
    seen = {root_id}
    frontier = deque([(root_id, 0)])
    while frontier:
        nid, depth = frontier.popleft()
        if depth == max_depth:
            continue
        for c in pool.nodes[nid].children:
            if c >= k and c not in seen:
                seen.add(c)
                frontier.append((c, depth + 1))
    return seen


def prune_children(pool: OptionPool, node_id: int, max_children: int, w) -> int:
    """Drop the least similar interior children until at most ``max_children`` remain.

    Similarity is measured between each child's value and the node's own
    value. Action-leaf edges are untouched. Among equally distant children
    the highest id goes first.
    """
    node = pool[node_id]
    if node.is_leaf:
        raise ContractViolation("cannot prune an action leaf")
    kids = pool.interior_children(node_id)
    excess = len(kids) - max_children
    if excess <= 0:
        return 0
    rows = [pool.row_of(c) for c in kids]
    d = distances(pool.interior_values[rows], node.value, np.asarray(w, dtype=np.float64))
    order = sorted(range(len(kids)), key=lambda i: (-d[i], -kids[i]))
    for i in order[:excess]:
        del node.children[kids[i]]
    return excess


def prune_actions(pool: OptionPool, node_id: int, keep_top: int) -> int:
    """Keep the ``keep_top`` heaviest action edges (ties favour lower action index)."""
    if keep_top < 1:
        raise ContractViolation("keep_top must be at least 1")
    node = pool[node_id]
    if node.is_leaf:
        raise ContractViolation("cannot prune an action leaf")
    acts = sorted(pool.action_children(node_id), key=lambda a: (-node.children[a], a))
    for a in acts[keep_top:]:
        del node.children[a]
    return max(0, len(acts) - keep_top)


def cleanse(pool: OptionPool, w, max_children: int, keep_top: int) -> int:
    """Run both pruning passes over every interior node; returns edges removed."""
    removed = 0
    k = pool.action_count
    for nid in pool.interior_ids():
        if len(pool.nodes[nid].children) > k + max_children:
            removed += prune_children(pool, nid, max_children, w)
        if keep_top < pool.action_count:
            removed += prune_actions(pool, nid, keep_top)
    return removed
