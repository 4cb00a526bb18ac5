"""Command-line entry point: ``ao2 run|eval|export|oracle|explain``.

Failures exit nonzero after printing one JSON line to stderr of the form
``{"error": <kind>, "message": <text>}``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .config import LearnerConfig
from .envs import ENVIRONMENTS, check_oracle, load_oracle_table
from .errors import ConfigError, ContractViolation, NoAction, NoSchema
from .harness import ExperimentConfig, evaluate, moving_stats, run_experiment
from .interpret import explain_step, export_dot, find_step
from .option_graph import OptionPool

EXIT_CODES = {ConfigError: 2, ContractViolation: 3, NoSchema: 3, NoAction: 3, OSError: 4, KeyError: 5}

# keys of a run config file that belong to the experiment rather than the learner
EXPERIMENT_KEYS = {"env", "episodes", "replicas", "eval_window", "curve_window_steps", "stop_at", "write_trace", "workers"}


class OracleMismatch(Exception):
    pass


def _read_mapping(path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: not valid YAML/JSON ({e})") from None
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a flat key-value mapping")
    return doc


def load_run_config(path, env: str | None, seed: int | None, replicas: int | None, out: str | None) -> ExperimentConfig:
    doc = _read_mapping(path)
    exp = {k: doc.pop(k) for k in list(doc) if k in EXPERIMENT_KEYS}
    env_name = env or exp.pop("env", None)
    exp.pop("env", None)
    if env_name is None:
        raise ConfigError("no environment given (use --env or an 'env' key)")
    learner = LearnerConfig.from_mapping(doc)
    try:
        return ExperimentConfig(
            env_name, learner, seed=learner.seed if seed is None else seed,
            replicas=replicas or exp.pop("replicas", 1), out_dir=out, **exp,
        )
    except TypeError as e:
        raise ConfigError(str(e)) from None


def _learner_for_pool(pool_path: Path, config: str | None) -> LearnerConfig:
    if config:
        doc = {k: v for k, v in _read_mapping(config).items() if k not in EXPERIMENT_KEYS}
        return LearnerConfig.from_mapping(doc)
    for d in (pool_path.parent, pool_path.parent.parent):
        m = d / "manifest.json"
        if m.exists():
            return LearnerConfig.from_mapping(json.loads(m.read_text())["config"]["learner"])
    return LearnerConfig()


def cmd_run(a) -> int:
    cfg = load_run_config(a.config, a.env, a.seed, a.replicas, a.out)
    if a.episodes:
        cfg.episodes = a.episodes
    cfg.workers = a.workers
    records = run_experiment(cfg)
    for r in records:
        print(json.dumps(r.summary()))
    return 0


def cmd_eval(a) -> int:
    pool_path = Path(a.pool)
    pool = OptionPool.load(pool_path)
    lc = _learner_for_pool(pool_path, a.config)
    returns = evaluate(pool, a.env, a.episodes, lc, seed=a.seed)
    w = min(100, len(returns))
    best, last = moving_stats(returns, w)
    print(json.dumps({"episodes": len(returns), "mean_return": sum(returns) / len(returns),
                      "best_window_mean": best, "window": w}))
    return 0


def cmd_export(a) -> int:
    Path(a.dot).write_text(export_dot(OptionPool.load(a.pool)))
    return 0


def cmd_oracle(a) -> int:
    checks = check_oracle(load_oracle_table(a.table), a.env)
    if not checks:
        raise ConfigError(f"no rows for {a.env} in {a.table}")
    bad = [c for c in checks if not c.ok(a.tol)]
    print(json.dumps({"env": a.env, "rows": len(checks), "max_error": max(c.max_error for c in checks),
                      "failures": len(bad)}))
    if bad:
        raise OracleMismatch(f"{len(bad)} of {len(checks)} transitions differ by more than {a.tol}")
    return 0


def cmd_explain(a) -> int:
    pool = OptionPool.load(a.pool)
    ex = explain_step(find_step(a.trace, a.step), pool)
    print(json.dumps(ex.to_dict(), indent=1) if a.json else ex.render())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ao2", description="Option-graph learner experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    envs = sorted(ENVIRONMENTS)

    r = sub.add_parser("run", help="train replicas and write results")
    r.add_argument("--env", choices=envs)
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--replicas", type=int)
    r.add_argument("--episodes", type=int)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--out", default="runs/latest")
    r.set_defaults(fn=cmd_run)

    e = sub.add_parser("eval", help="run a frozen pool without learning")
    e.add_argument("--pool", required=True)
    e.add_argument("--env", choices=envs, required=True)
    e.add_argument("--episodes", type=int, required=True)
    e.add_argument("--config")
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(fn=cmd_eval)

    x = sub.add_parser("export", help="write a pool as Graphviz DOT")
    x.add_argument("--pool", required=True)
    x.add_argument("--dot", required=True)
    x.set_defaults(fn=cmd_export)

    o = sub.add_parser("oracle", help="check dynamics against a reference table")
    o.add_argument("--env", choices=envs, required=True)
    o.add_argument("--table", required=True)
    o.add_argument("--tol", type=float, default=1e-10)
    o.set_defaults(fn=cmd_oracle)

    q = sub.add_parser("explain", help="justify one logged decision")
    q.add_argument("--pool", required=True)
    q.add_argument("--trace", required=True)
    q.add_argument("--step", type=int, required=True)
    q.add_argument("--json", action="store_true")
    q.set_defaults(fn=cmd_explain)
    return p


def _fail(kind: str, msg: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": msg}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        if e.code in (0, None):
            return 0
        return _fail("UsageError", "invalid command line; see ao2 --help", 2)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return a.fn(a)
    except OracleMismatch as e:
        return _fail("OracleMismatch", str(e), 1)
    except tuple(EXIT_CODES) as e:
        code = next(c for t, c in EXIT_CODES.items() if isinstance(e, t))
        msg = str(e.args[0]) if isinstance(e, KeyError) and e.args else str(e)
        return _fail(type(e).__name__, msg, code)
    except (ValueError, json.JSONDecodeError) as e:
        return _fail(type(e).__name__, str(e), 1)


if __name__ == "__main__":
    sys.exit(main())
