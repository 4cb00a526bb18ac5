"""Slow, obviously-correct reference computations used as test oracles.

Nothing here shares code with the package beyond the pool data structure.
"""
from __future__ import annotations

import numpy as np

from ao2.inference import select_action
from ao2.learning import TraceBuffer, apply_rewards
from ao2.option_graph import OptionPool


def random_pool(rng, n, obs_dim, k, grid=3, extra_edges=2, weight_grid=2) -> OptionPool:
    """Small-integer values and weights so that distance and weight ties are common."""
    pool = OptionPool(obs_dim, k)
    ids = [pool.add_interior(rng.integers(-grid, grid + 1, size=obs_dim).astype(float)) for _ in range(n)]
    for nid in ids:
        for a in range(k):
            pool[nid].children[a] = float(rng.integers(-weight_grid, weight_grid + 1))
    for _ in range(extra_edges * n):
        a, b = rng.choice(ids, 2)
        if b not in pool[a].children:
            pool.add_edge(int(a), int(b), float(rng.integers(-weight_grid, weight_grid + 1)))
    return pool


def l1(u, v, w) -> float:
    total = 0.0
    for ui, vi, wi in zip(u, v, w):
        total += wi * abs(ui - vi)
    return total


def exhaustive_nearest(pool: OptionPool, u, w) -> int:
    best, best_d = None, None
    for nid in sorted(pool.nodes):
        node = pool.nodes[nid]
        if node.is_leaf:
            continue
        d = l1(u, node.value, w)
        if best is None or d < best_d:
            best, best_d = nid, d
    return best


def reachable(pool: OptionPool, root: int, max_depth: int) -> set[int]:
    """Interior nodes within max_depth hops, by repeated boolean matrix products."""
    ids = sorted(i for i in pool.nodes if not pool.nodes[i].is_leaf)
    pos = {n: i for i, n in enumerate(ids)}
    adj = np.zeros((len(ids), len(ids)), dtype=bool)
    for n in ids:
        for c in pool.nodes[n].children:
            if c in pos:
                adj[pos[n], pos[c]] = True
    hit = np.zeros(len(ids), dtype=bool)
    hit[pos[root]] = True
    for _ in range(max_depth):
        hit = hit | (adj.T.astype(int) @ hit.astype(int) > 0)
    return {ids[i] for i in np.flatnonzero(hit)}


def exhaustive_level2(pool: OptionPool, entry: int, u, w, max_depth: int) -> int:
    best, best_d = None, None
    for nid in sorted(reachable(pool, entry, max_depth)):
        d = l1(u, pool.nodes[nid].value, w)
        if best is None or d < best_d:
            best, best_d = nid, d
    return best


def exhaustive_action(pool: OptionPool, node_id: int) -> int | None:
    acts = [(-pool.nodes[node_id].children[a], a) for a in range(pool.action_count) if a in pool.nodes[node_id].children]
    return min(acts)[1] if acts else None


def brute_force_weights(initial, log, gamma, trace_length, exact=True):
    """Recompute every edge weight from the step log alone.

    ``log`` holds (path steps, reward) in time order within one episode.
    With ``exact`` the additions follow the learner's order; otherwise each
    edge's contributions are summed separately and added once.
    """
    w = dict(initial)
    if exact:
        for t, (_, r) in enumerate(log):
            for age in range(min(trace_length, t + 1)):
                for e in log[t - age][0]:
                    w[e] += gamma**age * r
        return w
    extra = {e: [] for e in w}
    for t, (_, r) in enumerate(log):
        for s in range(max(0, t - trace_length + 1), t + 1):
            for e in log[s][0]:
                extra[e].append(gamma ** (t - s) * r)
    return {e: w[e] + float(np.sum(extra[e])) for e in w}


def edge_weights(pool: OptionPool) -> dict:
    return {(n, c): wt for n, node in pool.nodes.items() for c, wt in node.children.items()}


def assimilation_episode(seed: int):
    """One random episode of paths and rewards through apply_rewards.

    Returns (final weights, initial weights, step log, gamma, trace length).
    """
    rng = np.random.default_rng(seed)
    obs_dim, k = int(rng.integers(1, 4)), int(rng.integers(2, 5))
    pool = random_pool(rng, int(rng.integers(1, 51)), obs_dim, k)
    trace_length = int(rng.integers(1, 12))
    gamma = float(rng.choice([0.0, 0.5, 0.9, 1.0, rng.random()]))
    initial = edge_weights(pool)
    buf = TraceBuffer(trace_length)
    log = []
    w = np.ones(obs_dim)
    for _ in range(int(rng.integers(1, 201))):
        p, _ = select_action(pool, rng.integers(-3, 4, size=obs_dim).astype(float), w)
        r = float(rng.choice([0.0, 1.0, -1.0, rng.normal()]))
        buf.push(p, r)
        apply_rewards(buf, pool, gamma)
        log.append((p.steps, r))
    return edge_weights(pool), initial, log, gamma, trace_length
