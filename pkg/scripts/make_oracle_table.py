"""Generate the dynamics oracle table from the classic-control reference.

Needs the reference package importable (gym 0.17.3 is the last release that
registers Pendulum-v0). Example:

    pip install gym==0.17.3 cloudpickle pyglet --no-deps --target /tmp/gymref
    PYTHONPATH=/tmp/gymref python scripts/make_oracle_table.py tests/data/oracle.csv
"""
import argparse
import csv
import math

import numpy as np

if not hasattr(np, "float_"):
    np.float_ = np.float64  # removed in numpy 2, still used by the old reference rk4

import gym  # noqa: E402

N_PER_ENV = 20


def states(env_name, rng):
    if env_name == "cartpole-v0":
        for i in range(N_PER_ENV):
            if i < 3:  # just inside the limits, moving outward: terminal transitions
                sign = 1 if i % 2 else -1
                yield np.array([sign * 2.395, sign * 1.5, sign * 0.2, sign * 1.0]), int(rng.integers(2))
            else:
                yield rng.uniform([-2.3, -2.0, -0.2, -2.5], [2.3, 2.0, 0.2, 2.5]), int(rng.integers(2))
    elif env_name == "pendulum-v0":
        for i in range(N_PER_ENV):
            th = rng.uniform(-2 * math.pi, 2 * math.pi)
            # a few near the speed cap so the clipping order is exercised
            thdot = rng.uniform(7.5, 8.0) * (1 if i % 2 else -1) if i < 4 else rng.uniform(-8, 8)
            yield np.array([th, thdot]), float(rng.uniform(-3.0, 3.0))
    elif env_name == "acrobot-v1":
        for i in range(N_PER_ENV):
            if i < 3:  # near fully inverted: terminal transitions
                yield np.array([math.pi - 0.05 * i, 0.02, 0.1, -0.1]), int(rng.integers(3))
                continue
            s = rng.uniform([-math.pi, -math.pi, -4 * math.pi, -9 * math.pi], [math.pi, math.pi, 4 * math.pi, 9 * math.pi])
            yield s, int(rng.integers(3))


GYM_IDS = {"cartpole-v0": "CartPole-v0", "pendulum-v0": "Pendulum-v0", "acrobot-v1": "Acrobot-v1"}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=20240601)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    rows = []
    for name, gid in GYM_IDS.items():
        env = gym.make(gid).unwrapped
        env.reset()
        for state, action in states(name, rng):
            env.state = np.array(state, dtype=np.float64)
            if name == "cartpole-v0":
                env.steps_beyond_done = None
            _, reward, done, _ = env.step(np.array([action]) if name == "pendulum-v0" else action)
            nxt = np.asarray(env.state, dtype=np.float64)
            rows.append((name, list(state), action, list(nxt), reward, done))
    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["env"] + [f"s{i}" for i in range(4)] + ["action"] + [f"n{i}" for i in range(4)] + ["reward", "done"])
        for name, s, a, n, r, d in rows:
            pad = lambda v: [repr(float(x)) for x in v] + [""] * (4 - len(v))
            wr.writerow([name] + pad(s) + [repr(a)] + pad(n) + [repr(float(r)), int(bool(d))])


if __name__ == "__main__":
    main()
