"""Experiment runner: binds a learner to an environment, handles seeds and replicas, writes results."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import LearnerConfig
from .envs import ENVIRONMENTS, make_env
from .errors import ConfigError, ContractViolation
from .learning import Learner
from .option_graph import OptionPool

log = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "step", "episode", "entry", "path", "action", "executed", "distances", "reward",
    "exploratory", "created", "observation", "attention",
]


@dataclass
class ExperimentConfig:
    env_name: str
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    episodes: int = 2000
    replicas: int = 1
    seed: int = 0
    eval_window: int = 100
    curve_window_steps: int = 200
    stop_at: float | None = None  # stop once the last eval_window mean reaches this
    out_dir: str | None = None
    write_trace: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.env_name not in ENVIRONMENTS:
            raise ConfigError(f"unknown environment {self.env_name!r}; choose from {sorted(ENVIRONMENTS)}")
        if self.episodes < self.eval_window:
            raise ConfigError("episodes must be at least eval_window")
        if self.replicas < 1 or self.workers < 1:
            raise ConfigError("replicas and workers must be >= 1")
        if self.curve_window_steps < 1:
            raise ConfigError("curve_window_steps must be >= 1")

    def to_mapping(self) -> dict:
        d = asdict(self)
        d["learner"] = self.learner.to_mapping()
        return d


@dataclass
class RunRecord:
    replica: int
    returns: list[float]
    curve: list[tuple[int, float]]
    pool: OptionPool
    config: dict
    duration: float
    steps: int

    @property
    def best_window_mean(self) -> float:
        return moving_stats(self.returns, self.config["eval_window"])[0]

    @property
    def last_window_mean(self) -> float:
        return moving_stats(self.returns, self.config["eval_window"])[1]

    def summary(self) -> dict:
        best, last = moving_stats(self.returns, self.config["eval_window"])
        return {
            "replica": self.replica,
            "episodes": len(self.returns),
            "steps": self.steps,
            "best_window_mean": best,
            "last_window_mean": last,
            "pool_interior_nodes": self.pool.n_interior,
            "duration_s": round(self.duration, 3),
        }


def moving_stats(returns, window: int) -> tuple[float, float]:
    """Best and final mean over contiguous windows of ``window`` episodes."""
    r = np.asarray(returns, dtype=np.float64)
    if window < 1 or r.size < window:
        raise ContractViolation(f"need at least {window} returns, got {r.size}")
    c = np.concatenate(([0.0], np.cumsum(r)))
    means = (c[window:] - c[:-window]) / window
    # cumulative sums drift by an ulp or so; recompute the winners exactly
    best = max(float(np.mean(r[i : i + window])) for i in np.flatnonzero(means >= means.max() - 1e-9))
    return best, float(np.mean(r[-window:]))


def phase_detect(window_means, smooth: int = 5, jump: float = 0.15) -> list[int]:
    """Indices where the smoothed curve rises abruptly.

    The curve is box-smoothed over ``smooth`` points. Two smoothed points
    ``smooth`` apart average disjoint stretches of the raw series; a rise
    between them larger than ``jump`` times the smoothed range marks a jump.
    Each run of consecutive marks is one jump, reported at the raw index
    where the steepest rise in the run begins.
    """
    x = np.asarray(window_means, dtype=np.float64)
    if x.size < 10:
        raise ContractViolation("phase detection needs at least 10 windows")
    smooth = max(1, min(smooth, x.size // 2))
    s = np.convolve(x, np.ones(smooth) / smooth, mode="valid")
    span = s.max() - s.min()
    if span <= 0:
        return []
    rise = s[smooth:] - s[:-smooth]
    flagged = rise > jump * span
    jumps = []
    i = 0
    while i < flagged.size:
        if flagged[i]:
            j = i
            while j + 1 < flagged.size and flagged[j + 1]:
                j += 1
            jumps.append(i + int(np.argmax(rise[i : j + 1])) + smooth)
            i = j + 1
        else:
            i += 1
    return jumps


def replica_rngs(seed: int, replica: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent Philox streams for (environment, learner) of one replica.

    Streams depend only on (seed, replica), never on the replica count.
    """
    env_ss, learner_ss = np.random.SeedSequence(seed, spawn_key=(replica,)).spawn(2)
    return np.random.Generator(np.random.Philox(env_ss)), np.random.Generator(np.random.Philox(learner_ss))


def _fmt(xs) -> str:
    return ";".join(repr(float(x)) for x in xs)


class _TraceWriter:
    def __init__(self, path: Path | None):
        self.fh = open(path, "w", newline="") if path else None
        if self.fh:
            self.wr = csv.writer(self.fh)
            self.wr.writerow(TRACE_COLUMNS)

    def write(self, step, episode, learner: Learner, u, reward):
        if not self.fh:
            return
        d = learner.last
        p = d.path
        self.wr.writerow([
            step, episode, p.entry, ">".join(map(str, p.node_ids)), p.action_index, repr(d.action),
            _fmt(p.distances), repr(float(reward)), int(p.exploratory),
            "" if d.created is None else d.created, _fmt(u), _fmt(learner.w),
        ])

    def close(self):
        if self.fh:
            self.fh.close()


def run_replica(cfg: ExperimentConfig, replica: int = 0, out_dir: Path | None = None) -> RunRecord:
    """Train one learner for the episode budget (Alg. 1 loop) and record everything."""
    env_rng, learner_rng = replica_rngs(cfg.seed, replica)
    lc = cfg.learner
    env = make_env(cfg.env_name, env_rng, lc.action_grid)
    learner = Learner(env.spec.obs_dim, env.spec.action_count, lc, learner_rng, env.spec.action_values())
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    trace = _TraceWriter(out_dir / "trace.csv" if out_dir is not None and cfg.write_trace else None)
    returns: list[float] = []
    curve: list[tuple[int, float]] = []
    window_sum, window_n, step = 0.0, 0, 0
    t0 = time.perf_counter()
    try:
        for episode in range(cfg.episodes):
            obs = env.reset()
            action = learner.step(obs)
            total = 0.0
            while True:
                u = learner.encode(obs)
                res = env.step(action)
                trace.write(step, episode, learner, u, res.reward)
                step += 1
                total += res.reward
                window_sum += res.reward
                window_n += 1
                if window_n == cfg.curve_window_steps:
                    curve.append((step - window_n, window_sum / window_n))
                    window_sum, window_n = 0.0, 0
                obs = res.observation
                action = learner.step(obs, res.reward, res.done, res.truncated)
                if res.done:
                    break
            returns.append(total)
            if cfg.stop_at is not None and len(returns) >= cfg.eval_window:
                if np.mean(returns[-cfg.eval_window :]) >= cfg.stop_at:
                    break
    finally:
        trace.close()
    rec = RunRecord(replica, returns, curve, learner.pool, cfg.to_mapping(), time.perf_counter() - t0, step)
    if out_dir is not None:
        write_outputs(rec, out_dir)
    log.info("replica %d: %d episodes, best %.2f, %.1fs", replica, len(returns),
             rec.best_window_mean if len(returns) >= cfg.eval_window else float("nan"), rec.duration)
    return rec


def write_outputs(rec: RunRecord, out_dir: Path) -> None:
    with open(out_dir / "returns.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["episode", "return"])
        wr.writerows((i, repr(r)) for i, r in enumerate(rec.returns))
    with open(out_dir / "curve.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["window_start_step", "mean_reward"])
        wr.writerows((s, repr(m)) for s, m in rec.curve)
    rec.pool.save(out_dir / "pool.json")


def version_hash() -> str:
    return hashlib.sha1(f"blob {len(__version__)}\0{__version__}".encode()).hexdigest()


def _replica_job(args):
    cfg, replica, out_dir = args
    return run_replica(cfg, replica, out_dir)


def run_experiment(cfg: ExperimentConfig) -> list[RunRecord]:
    """Run every replica, then write a manifest next to the per-replica outputs."""
    out = Path(cfg.out_dir) if cfg.out_dir else None
    jobs = [(cfg, i, (out / f"replica_{i:02d}") if out else None) for i in range(cfg.replicas)]
    if cfg.workers > 1 and cfg.replicas > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.replicas, os.cpu_count() or 1)) as ex:
            records = list(ex.map(_replica_job, jobs))
    else:
        records = [_replica_job(j) for j in jobs]
    if out is not None:
        write_manifest(cfg, records, out)
    return records


def write_manifest(cfg: ExperimentConfig, records: list[RunRecord], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": __version__,
        "version_hash": version_hash(),
        "created_unix": time.time(),
        "config": cfg.to_mapping(),
        "best_definition": f"best mean over any {cfg.eval_window} consecutive episodes",
        "replicas": [r.summary() for r in records],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))


def evaluate(pool: OptionPool, env_name: str, episodes: int, learner_cfg: LearnerConfig | None = None,
             seed: int = 0) -> list[float]:
    """Episode returns of a frozen pool; nothing is learned or grown."""
    lc = learner_cfg or LearnerConfig()
    env_rng, learner_rng = replica_rngs(seed, 0)
    env = make_env(env_name, env_rng, lc.action_grid)
    learner = Learner(env.spec.obs_dim, env.spec.action_count, lc, learner_rng, env.spec.action_values(),
                      pool=pool, learn=False)
    returns = []
    for _ in range(episodes):
        action = learner.step(env.reset())
        total = 0.0
        while True:
            res = env.step(action)
            total += res.reward
            action = learner.step(res.observation, res.reward, res.done, res.truncated)
            if res.done:
                break
        returns.append(total)
    return returns
