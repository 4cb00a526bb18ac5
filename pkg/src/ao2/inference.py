"""Nearest-option lookup and bi-level action selection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import nearest_l1
from .errors import ContractViolation, NoAction, NoSchema
from .option_graph import OptionPool, descendants, distances


@dataclass(frozen=True)
class InferenceConfig:
    epsilon: float = 0.0
    alpha: float = 1.0
    max_depth: int = 8

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ContractViolation(f"epsilon={self.epsilon} outside [0, 1]")
        if not 0.0 <= self.alpha <= 1.0:
            raise ContractViolation(f"alpha={self.alpha} outside [0, 1]")
        if self.max_depth < 0:
            raise ContractViolation("max_depth must be non-negative")


@dataclass(frozen=True)
class DecisionPath:
    """Edges traversed by one decision, entry node first.

    Each step is ``(node_id, child_id)``; the last child is an action leaf.
    ``distances`` holds the distance from the observation to each visited
    interior node, in step order.
    """

    steps: tuple[tuple[int, int], ...]
    action_index: int
    distances: tuple[float, ...] = ()
    exploratory: bool = False

    def __post_init__(self):
        if not self.steps:
            raise ContractViolation("a decision path needs at least one step")

    @property
    def entry(self) -> int:
        return self.steps[0][0]

    @property
    def selected(self) -> int:
        """Node whose action edge was taken."""
        return self.steps[-1][0]

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.steps) + (self.steps[-1][1],)


def nearest(pool: OptionPool, u, w) -> tuple[int, float]:
    """Closest interior node and its distance; lowest id wins ties."""
    if pool.n_interior == 0:
        raise NoSchema("pool has no interior node")
    i, d = nearest_l1(pool._values, pool.n_interior, np.asarray(u, dtype=np.float64), np.asarray(w, dtype=np.float64))
    return pool.action_count + int(i), float(d)


def find_most_similar(pool: OptionPool, u, w) -> int:
    return nearest(pool, u, w)[0]


def _best_action(pool: OptionPool, node_id: int) -> int | None:
    node = pool.nodes[node_id]
    best = None
    for a in pool.action_children(node_id):
        if best is None or node.children[a] > node.children[best] or (
            node.children[a] == node.children[best] and a < best
        ):
            best = a
    return best


def _best_interior_child(pool: OptionPool, node_id: int, exclude: set[int]) -> int | None:
    node = pool.nodes[node_id]
    best = None
    for c in pool.interior_children(node_id):
        if c in exclude:
            continue
        if best is None or node.children[c] > node.children[best]:
            best = c
    return best


def _path_to(pool: OptionPool, root: int, target: int, max_depth: int) -> list[int]:
    """Shortest interior-node route from root to target (both included)."""
    if root == target:
        return [root]
    k = pool.action_count
    parent = {root: None}
    frontier = [root]
    for _ in range(max_depth):
        nxt = []
        for nid in frontier:
            for c in pool.nodes[nid].children:
                if c >= k and c not in parent:
                    parent[c] = nid
                    if c == target:
                        route = [c]
                        while parent[route[-1]] is not None:
                            route.append(parent[route[-1]])
                        return route[::-1]
                    nxt.append(c)
        frontier = nxt
    raise ContractViolation(f"node {target} not reachable from {root} within {max_depth} hops")


def resolve(pool: OptionPool, entry: int, u, w, max_depth: int = 8, scan_descendants: bool = True,
            entry_distance: float | None = None) -> DecisionPath:
    """Levels two and three of action selection, starting from ``entry``.

    Picks the descendant of ``entry`` closest to ``u`` (lowest id on ties),
    then that node's heaviest action edge. A node without action edges
    hands over to its heaviest interior child.
    """
    u = np.asarray(u, dtype=np.float64)
    if scan_descendants:
        cands = sorted(descendants(pool, entry, max_depth))
        d = distances(pool.interior_values[[pool.row_of(c) for c in cands]], u, w)
        i = int(np.argmin(d))
        target = cands[i]
        route = _path_to(pool, entry, target, max_depth)
    else:
        route = [entry]

    def dist_of(nid):
        if nid == entry and entry_distance is not None:
            return entry_distance
        return float(distances(pool.interior_values[[pool.row_of(nid)]], u, w)[0])

    seen = set(route)
    node = route[-1]
    action = _best_action(pool, node)
    while action is None:
        nxt = _best_interior_child(pool, node, seen)
        if nxt is None:
            raise NoAction(f"no action leaf reachable from node {entry}")
        route.append(nxt)
        seen.add(nxt)
        node = nxt
        action = _best_action(pool, node)
    steps = tuple(zip(route, route[1:])) + ((node, action),)
    return DecisionPath(steps, action, tuple(dist_of(n) for n in route))


def select_action(pool: OptionPool, u, w, cfg: InferenceConfig = InferenceConfig()) -> tuple[DecisionPath, int]:
    f, d = nearest(pool, u, w)
    # f is the global minimiser with the lowest id among ties, so no
    # descendant can be strictly closer or tie with a lower id: level two
    # always returns f itself and the descendant scan is skipped.
    path = resolve(pool, f, u, w, cfg.max_depth, scan_descendants=False, entry_distance=d)
    return path, path.action_index


def epsilon_greedy(action_index: int, k: int, epsilon: float, rng: np.random.Generator, available=None) -> int:
    """With probability ``epsilon`` swap the action for a uniformly drawn alternative.

    ``available`` restricts the alternatives to the action edges present at
    the selected node; by default all ``k`` actions are eligible.
    """
    if rng.random() >= epsilon:
        return action_index
    others = [a for a in (range(k) if available is None else available) if a != action_index]
    if not others:
        return action_index
    return int(others[rng.integers(len(others))])


def explore(pool: OptionPool, path: DecisionPath, epsilon: float, rng: np.random.Generator) -> DecisionPath:
    """Apply epsilon-greedy at the selected node and rewrite the final edge."""
    node = path.selected
    a = epsilon_greedy(path.action_index, pool.action_count, epsilon, rng, pool.action_children(node))
    if a == path.action_index:
        return path
    return DecisionPath(path.steps[:-1] + ((node, a),), a, path.distances, exploratory=True)


def smooth_action(chosen: float, last: float, alpha: float) -> float:
    return alpha * chosen + (1.0 - alpha) * last
