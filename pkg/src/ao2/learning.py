"""Accommodation, trace-discounted assimilation, attention adaptation, and the learner loop."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import LearnerConfig
from .errors import ContractViolation, NoSchema
from .inference import DecisionPath, explore, nearest, resolve, smooth_action
from .option_graph import WEIGHT_FLOOR, OptionPool, attention, cleanse, distances, score_from_distance


class TraceBuffer:
    """The last ``capacity`` decision paths with their rewards, newest first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ContractViolation("trace length must be positive")
        self.capacity = capacity
        self.entries: deque[tuple[DecisionPath, float]] = deque(maxlen=capacity)

    def push(self, path: DecisionPath, reward: float) -> None:
        self.entries.appendleft((path, float(reward)))

    def clear(self) -> None:
        self.entries.clear()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def apply_rewards(buffer: TraceBuffer, pool: OptionPool, gamma: float, baselines: dict[int, float] | None = None,
                  rate: float = 0.0) -> None:
    """Credit the newest reward to every buffered path, discounted by ``gamma ** age``.

    Edges removed since their path was recorded are skipped.

    With ``baselines`` each node is credited ``gamma ** age * (r - b)``
    where ``b`` is that node's running mean of the rewards that arrived
    while it sat on a buffered path (the first such reward seeds it). The
    means move by ``rate`` after the update.
    """
    if not buffer.entries:
        return
    r = buffer.entries[0][1]
    nodes = pool.nodes
    if baselines is None:
        for age, (path, _) in enumerate(buffer.entries):
            credit = gamma**age * r
            for node_id, child in path.steps:
                children = nodes[node_id].children
                if child in children:
                    children[child] += credit
        return
    touched = set()
    for age, (path, _) in enumerate(buffer.entries):
        g = gamma**age
        for node_id, child in path.steps:
            children = nodes[node_id].children
            if child in children:
                children[child] += g * (r - baselines.get(node_id, r))
            touched.add(node_id)
    for n in touched:
        b = baselines.get(n, r)
        baselines[n] = b + rate * (r - b)


def accommodate(pool: OptionPool, selected_id: int, u, w, threshold: float, inherit: bool = False) -> int | None:
    """Grow a new child of ``selected_id`` holding ``u`` unless something already matches.

    A match is the selected node itself or one of its interior children
    scoring strictly above ``threshold``. With ``inherit`` the new node
    starts from the parent's action weights instead of zeros.
    """
    u = np.asarray(u, dtype=np.float64)
    candidates = [selected_id] + pool.interior_children(selected_id)
    d = distances(pool.interior_values[[pool.row_of(c) for c in candidates]], u, w)
    if np.any(score_from_distance(d) > threshold):
        return None
    nid = pool.add_interior(u, parent=selected_id)
    if inherit:
        src, dst = pool.nodes[selected_id].children, pool.nodes[nid].children
        for a in range(pool.action_count):
            if a in src:
                dst[a] = src[a]
    return nid


def update_attention(w, u, v, beta: float, reward_trend_up: bool) -> np.ndarray:
    """Shift attention weights by ``+/- beta * (u - v)``, floored to stay positive."""
    w = np.asarray(w, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if not (w.shape == u.shape == v.shape):
        raise ContractViolation(f"dimension mismatch: w{w.shape} u{u.shape} v{v.shape}")
    step = beta * (u - v)
    return np.maximum(w + step if reward_trend_up else w - step, WEIGHT_FLOOR)


@dataclass
class Decision:
    """What the learner did on one step, for logging."""

    path: DecisionPath
    action: float | int
    created: int | None


class Learner:
    """One agent: an option pool plus the per-episode perceptual loop.

    ``action_values`` maps action indices to executable values for
    continuous environments; when it is None the index itself is returned.
    """

    def __init__(self, obs_dim: int, action_count: int, cfg: LearnerConfig, rng: np.random.Generator | None = None,
                 action_values=None, pool: OptionPool | None = None, learn: bool = True):
        self.cfg = cfg
        self.inference = cfg.inference
        self.pool = pool if pool is not None else OptionPool(obs_dim, action_count)
        if (self.pool.obs_dim, self.pool.action_count) != (obs_dim, action_count):
            raise ContractViolation("pool dimensions do not match the environment")
        self.w = attention(np.ones(obs_dim) if cfg.attention is None else cfg.attention, obs_dim)
        self.scale = None if cfg.obs_scale is None else np.asarray(cfg.obs_scale, dtype=np.float64)
        if self.scale is not None and self.scale.shape != (obs_dim,):
            raise ContractViolation(f"obs_scale needs {obs_dim} entries")
        self.action_values = None if action_values is None else list(action_values)
        self.rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        self.learn = learn
        self.buffer = TraceBuffer(cfg.trace_length)
        self.baselines: dict[int, float] | None = {} if cfg.credit_baseline > 0 else None
        self._pending: DecisionPath | None = None
        self._last_exec = 0.0
        self._rewards: deque[float] = deque(maxlen=cfg.reward_ma_window)
        self._last_ma: float | None = None
        self._trend_up = False
        self.steps = 0
        self.last: Decision | None = None

    def encode(self, observation) -> np.ndarray:
        u = np.asarray(observation, dtype=np.float64)
        return u if self.scale is None else u / self.scale

    def learning_signal(self, reward: float, done: bool, truncated: bool) -> float:
        cfg = self.cfg
        signal = reward - cfg.reward_offset if cfg.reward_mode == "env" else 0.0
        if done and not truncated:
            signal += cfg.terminal_bonus
        return signal

    def step(self, observation, reward: float | None = None, done: bool = False, truncated: bool = False):
        """Consume one transition and return the next action (None once ``done``).

        ``reward`` is the environment reward earned by the previous action;
        pass None on the first step of an episode. ``truncated`` marks an
        episode cut by the step limit rather than ended by the task.
        """
        u = self.encode(observation)
        if reward is not None and self._pending is not None:
            if self.learn:
                self.buffer.push(self._pending, self.learning_signal(reward, done, truncated))
                apply_rewards(self.buffer, self.pool, self.cfg.gamma, self.baselines, self.cfg.credit_baseline)
            self._track_reward(reward)
            self._pending = None
        if done:
            self.end_episode()
            return None

        created = None
        try:
            f, d = nearest(self.pool, u, self.w)
        except NoSchema:
            if not self.learn:
                raise
            f = created = self.pool.add_interior(u)
        if self.learn and created is None:
            created = accommodate(self.pool, f, u, self.w, self.cfg.accommodation_threshold,
                                  self.cfg.inherit_weights)
        # a freshly created node sits at distance 0, so it becomes the entry
        entry, d = (created, 0.0) if created is not None else (f, d)
        path = resolve(self.pool, entry, u, self.w, self.inference.max_depth, scan_descendants=False, entry_distance=d)
        if self.inference.epsilon > 0:
            path = explore(self.pool, path, self.inference.epsilon, self.rng)
        if self.learn and self.cfg.beta > 0 and self._last_ma is not None:
            self.w = update_attention(self.w, u, self.pool.nodes[entry].value, self.cfg.beta, self._trend_up)
        self._pending = path
        self.steps += 1
        if self.learn and self.cfg.prune_every and self.steps % self.cfg.prune_every == 0:
            cleanse(self.pool, self.w, self.cfg.max_children, self.cfg.keep_top_actions or self.pool.action_count)

        action = path.action_index
        if self.action_values is not None:
            action = smooth_action(self.action_values[action], self._last_exec, self.inference.alpha)
            self._last_exec = action
        self.last = Decision(path, action, created)
        return action

    def end_episode(self) -> None:
        self.buffer.clear()
        self._pending = None
        self._last_exec = 0.0

    def _track_reward(self, r: float) -> None:
        self._rewards.append(r)
        ma = sum(self._rewards) / len(self._rewards)
        self._trend_up = self._last_ma is not None and ma > self._last_ma
        self._last_ma = ma
