"""CartPole-v0, Pendulum-v0 and Acrobot-v1, reimplemented from the classic-control reference.

Dynamics mirror the reference operation order so that single transitions
match it to rounding error. Initial-state draws use the caller's numpy
``Generator`` and therefore match the reference only in distribution.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation


@dataclass(frozen=True)
class Discrete:
    n: int


@dataclass(frozen=True)
class Continuous:
    lo: float
    hi: float
    grid: int = 9

    def __post_init__(self):
        if self.grid < 2:
            raise ContractViolation("a continuous action grid needs at least 2 levels")


@dataclass(frozen=True)
class EnvironmentSpec:
    name: str
    obs_dim: int
    action_mode: Discrete | Continuous
    max_steps: int

    @property
    def action_count(self) -> int:
        m = self.action_mode
        return m.n if isinstance(m, Discrete) else m.grid

    def action_values(self) -> list[float] | None:
        m = self.action_mode
        if isinstance(m, Discrete):
            return None
        return [discretize_action(i, m) for i in range(m.grid)]


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    steps_elapsed: int
    truncated: bool = False  # done only because the step budget ran out


def discretize_action(index: int, mode: Continuous) -> float:
    """Evenly spaced grid over ``[lo, hi]`` including both endpoints."""
    if not 0 <= index < mode.grid:
        raise ContractViolation(f"action index {index} outside [0, {mode.grid})")
    return mode.lo + index * (mode.hi - mode.lo) / (mode.grid - 1)


# -- CartPole ---------------------------------------------------------------

CART_GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
CART_TOTAL_MASS = POLE_MASS + CART_MASS
POLE_HALF_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * POLE_HALF_LENGTH
CART_FORCE = 10.0
CART_TAU = 0.02
THETA_LIMIT = 12 * 2 * math.pi / 360
X_LIMIT = 2.4


def cartpole_step(state, action: int) -> tuple[np.ndarray, float, bool]:
    """One explicit-Euler step; returns (next_state, reward, failed)."""
    x, x_dot, theta, theta_dot = (float(s) for s in state)
    force = CART_FORCE if action == 1 else -CART_FORCE
    costheta = math.cos(theta)
    sintheta = math.sin(theta)
    temp = (force + POLE_MASS_LENGTH * theta_dot**2 * sintheta) / CART_TOTAL_MASS
    thetaacc = (CART_GRAVITY * sintheta - costheta * temp) / (
        POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * costheta**2 / CART_TOTAL_MASS)
    )
    xacc = temp - POLE_MASS_LENGTH * thetaacc * costheta / CART_TOTAL_MASS
    x = x + CART_TAU * x_dot
    x_dot = x_dot + CART_TAU * xacc
    theta = theta + CART_TAU * theta_dot
    theta_dot = theta_dot + CART_TAU * thetaacc
    failed = x < -X_LIMIT or x > X_LIMIT or theta < -THETA_LIMIT or theta > THETA_LIMIT
    return np.array([x, x_dot, theta, theta_dot]), 1.0, bool(failed)


# -- Pendulum ---------------------------------------------------------------

PEND_G = 10.0
PEND_M = 1.0
PEND_L = 1.0
PEND_DT = 0.05
PEND_MAX_SPEED = 8.0
PEND_MAX_TORQUE = 2.0


def angle_normalize(x: float) -> float:
    return ((x + np.pi) % (2 * np.pi)) - np.pi


def pendulum_step(state, torque: float) -> tuple[np.ndarray, float, bool]:
    """Returns (next_state, reward, False); the torque is clipped to +/-2.

    The angle update uses the unclipped angular velocity, as the v0
    reference does.
    """
    th, thdot = (float(s) for s in state)
    u = float(np.clip(torque, -PEND_MAX_TORQUE, PEND_MAX_TORQUE))
    costs = angle_normalize(th) ** 2 + 0.1 * thdot**2 + 0.001 * (u**2)
    newthdot = thdot + (-3 * PEND_G / (2 * PEND_L) * np.sin(th + np.pi) + 3.0 / (PEND_M * PEND_L**2) * u) * PEND_DT
    newth = th + newthdot * PEND_DT
    newthdot = float(np.clip(newthdot, -PEND_MAX_SPEED, PEND_MAX_SPEED))
    return np.array([newth, newthdot]), -float(costs), False


def pendulum_obs(state) -> np.ndarray:
    th, thdot = state
    return np.array([np.cos(th), np.sin(th), thdot])


# -- Acrobot ----------------------------------------------------------------

ACRO_DT = 0.2
LINK_LENGTH_1 = 1.0
LINK_MASS_1 = 1.0
LINK_MASS_2 = 1.0
LINK_COM_POS_1 = 0.5
LINK_COM_POS_2 = 0.5
LINK_MOI = 1.0
MAX_VEL_1 = 4 * math.pi
MAX_VEL_2 = 9 * math.pi
ACRO_TORQUES = (-1.0, 0.0, 1.0)


def _acrobot_dsdt(s_augmented):
    m1, m2 = LINK_MASS_1, LINK_MASS_2
    l1 = LINK_LENGTH_1
    lc1, lc2 = LINK_COM_POS_1, LINK_COM_POS_2
    i1 = i2 = LINK_MOI
    g = 9.8
    a = s_augmented[-1]
    theta1, theta2, dtheta1, dtheta2 = s_augmented[:-1]
    d1 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(theta2)) + i1 + i2
    d2 = m2 * (lc2**2 + l1 * lc2 * math.cos(theta2)) + i2
    phi2 = m2 * lc2 * g * math.cos(theta1 + theta2 - math.pi / 2.0)
    phi1 = (
        -m2 * l1 * lc2 * dtheta2**2 * math.sin(theta2)
        - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * math.sin(theta2)
        + (m1 * lc1 + m2 * l1) * g * math.cos(theta1 - math.pi / 2)
        + phi2
    )
    ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1**2 * math.sin(theta2) - phi2) / (
        m2 * lc2**2 + i2 - d2**2 / d1
    )
    ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
    return np.array([dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0])


def _rk4_step(y0: np.ndarray, dt: float) -> np.ndarray:
    dt2 = dt / 2.0
    k1 = _acrobot_dsdt(y0)
    k2 = _acrobot_dsdt(y0 + dt2 * k1)
    k3 = _acrobot_dsdt(y0 + dt2 * k2)
    k4 = _acrobot_dsdt(y0 + dt * k3)
    return y0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _wrap(x: float, lo: float, hi: float) -> float:
    diff = hi - lo
    while x > hi:
        x = x - diff
    while x < lo:
        x = x + diff
    return x


def acrobot_terminal(state) -> bool:
    return bool(-math.cos(state[0]) - math.cos(state[1] + state[0]) > 1.0)


def acrobot_step(state, action: int) -> tuple[np.ndarray, float, bool]:
    """RK4 step of the two-link arm; action indexes torques (-1, 0, +1)."""
    if action not in (0, 1, 2):
        raise ContractViolation(f"acrobot action must be 0, 1 or 2, got {action}")
    ns = _rk4_step(np.append(np.asarray(state, dtype=np.float64), ACRO_TORQUES[action]), ACRO_DT)[:4]
    ns[0] = _wrap(ns[0], -math.pi, math.pi)
    ns[1] = _wrap(ns[1], -math.pi, math.pi)
    ns[2] = min(max(ns[2], -MAX_VEL_1), MAX_VEL_1)
    ns[3] = min(max(ns[3], -MAX_VEL_2), MAX_VEL_2)
    terminal = acrobot_terminal(ns)
    return ns, (0.0 if terminal else -1.0), terminal


def acrobot_obs(state) -> np.ndarray:
    s = state
    return np.array([math.cos(s[0]), math.sin(s[0]), math.cos(s[1]), math.sin(s[1]), s[2], s[3]])


# -- stateful wrappers ------------------------------------------------------


class Environment:
    spec: EnvironmentSpec

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.state: np.ndarray | None = None
        self.steps = 0
        self.done = True

    def reset(self) -> np.ndarray:
        self.state = self._initial_state()
        self.steps = 0
        self.done = False
        return self.observe()

    def step(self, action) -> StepResult:
        if self.done:
            raise ContractViolation("episode is over; call reset() first")
        self.state, reward, terminal = self._transition(self.state, action)
        self.steps += 1
        truncated = not terminal and self.steps >= self.spec.max_steps
        self.done = terminal or truncated
        return StepResult(self.observe(), reward, self.done, self.steps, truncated)

    def observe(self) -> np.ndarray:
        return np.array(self.state, dtype=np.float64)


class CartPole(Environment):
    spec = EnvironmentSpec("cartpole-v0", 4, Discrete(2), 200)

    def _initial_state(self):
        return self.rng.uniform(-0.05, 0.05, size=4)

    def _transition(self, state, action):
        if action not in (0, 1):
            raise ContractViolation(f"cartpole action must be 0 or 1, got {action}")
        return cartpole_step(state, action)


class Pendulum(Environment):
    spec = EnvironmentSpec("pendulum-v0", 3, Continuous(-2.0, 2.0, 9), 200)

    def __init__(self, rng: np.random.Generator, grid: int = 9):
        super().__init__(rng)
        if grid != self.spec.action_mode.grid:
            self.spec = EnvironmentSpec("pendulum-v0", 3, Continuous(-2.0, 2.0, grid), 200)

    def _initial_state(self):
        return self.rng.uniform(low=[-np.pi, -1.0], high=[np.pi, 1.0])

    def _transition(self, state, action):
        return pendulum_step(state, action)

    def observe(self):
        return pendulum_obs(self.state)


class Acrobot(Environment):
    spec = EnvironmentSpec("acrobot-v1", 6, Discrete(3), 500)

    def _initial_state(self):
        return self.rng.uniform(-0.1, 0.1, size=4)

    def _transition(self, state, action):
        return acrobot_step(state, action)

    def observe(self):
        return acrobot_obs(self.state)


ENVIRONMENTS = {"cartpole-v0": CartPole, "pendulum-v0": Pendulum, "acrobot-v1": Acrobot}
STEP_FUNCTIONS = {"cartpole-v0": cartpole_step, "pendulum-v0": pendulum_step, "acrobot-v1": acrobot_step}


def make_env(name: str, rng: np.random.Generator, action_grid: int = 9) -> Environment:
    try:
        cls = ENVIRONMENTS[name]
    except KeyError:
        raise ConfigError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}") from None
    return cls(rng, action_grid) if cls is Pendulum else cls(rng)


# -- oracle tables ------------------------------------------------------------


@dataclass
class OracleRow:
    env: str
    state: np.ndarray
    action: float
    expected: np.ndarray
    reward: float
    done: bool


@dataclass
class OracleCheck:
    row: OracleRow
    next_state: np.ndarray
    reward: float
    done: bool
    max_error: float

    def ok(self, tol: float = 1e-10) -> bool:
        return (self.max_error <= tol and abs(self.reward - self.row.reward) <= tol
                and self.done == self.row.done)


def load_oracle_table(path) -> list[OracleRow]:
    """Rows of ``env,s0..,action,n0..,reward,done``; unused state columns are blank."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            s = [float(rec[c]) for c in sorted(k for k in rec if k[0] == "s" and k[1:].isdigit()) if rec[c] != ""]
            n = [float(rec[c]) for c in sorted(k for k in rec if k[0] == "n" and k[1:].isdigit()) if rec[c] != ""]
            rows.append(OracleRow(rec["env"], np.array(s), float(rec["action"]), np.array(n),
                                  float(rec["reward"]), rec["done"].strip() in ("1", "True", "true")))
    return rows


def check_oracle(rows: list[OracleRow], env: str | None = None) -> list[OracleCheck]:
    out = []
    for row in rows:
        if env is not None and row.env != env:
            continue
        fn = STEP_FUNCTIONS[row.env]
        action = row.action if row.env == "pendulum-v0" else int(row.action)
        ns, r, d = fn(row.state, action)
        err = float(np.max(np.abs(np.asarray(ns) - row.expected)))
        out.append(OracleCheck(row, np.asarray(ns), r, d, err))
    return out
