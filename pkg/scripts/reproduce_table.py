"""Train every task config for several replicas and print a summary table.

    python scripts/reproduce_table.py --replicas 5 --out runs/table

Each task gets its own run directory with the usual per-replica outputs and
a manifest. Targets are the acceptance bounds on the best 100-episode mean.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from ao2.cli import load_run_config
from ao2.harness import run_experiment

TASKS = [
    ("cartpole.yaml", 190.0),
    ("acrobot.yaml", -150.0),
    ("pendulum.yaml", -300.0),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replicas", type=int, default=5)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--configs", default=str(Path(__file__).resolve().parent.parent / "configs"))
    ap.add_argument("--out", default="runs/table")
    ap.add_argument("--tasks", nargs="*", help="subset of config file names")
    a = ap.parse_args()

    rows = []
    for name, target in TASKS:
        if a.tasks and name not in a.tasks:
            continue
        out = Path(a.out) / name.removesuffix(".yaml")
        cfg = load_run_config(Path(a.configs) / name, None, a.seed, a.replicas, str(out))
        records = run_experiment(cfg)
        best = np.array([r.best_window_mean for r in records])
        rows.append({
            "task": cfg.env_name,
            "replicas": len(records),
            "mean_best": float(best.mean()),
            "max_best": float(best.max()),
            "hits": int((best >= target).sum()),
            "target": target,
            "episodes": [len(r.returns) for r in records],
            "seconds": [round(r.duration, 1) for r in records],
        })
        print(json.dumps(rows[-1]), flush=True)

    print()
    print(f"| {'task':<12} | {'mean best-100':>13} | {'max best-100':>12} | {'>= target':>9} |")
    print(f"|{'-' * 14}|{'-' * 15}|{'-' * 14}|{'-' * 11}|")
    for r in rows:
        print(f"| {r['task']:<12} | {r['mean_best']:>13.1f} | {r['max_best']:>12.1f} | "
              f"{r['hits']:>3}/{r['replicas']:<2} {r['target']:>+5.0f} |")


if __name__ == "__main__":
    main()
