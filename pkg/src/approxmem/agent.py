"""Model-free knob controller: state/action encoding, rewards and tabular TD learners.

States are ``(l1, l2, dram, qos_bucket)`` with knob indices ordered from most
approximate (0) to exact. Actions move each knob by -1, 0 or +1 index steps;
action ids are the base-3 number with digits ``delta + 1`` in the order
``(l1, l2, dram)``, so id 0 is "every knob one step more approximate" and id 13
is "hold".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .knob_models import DomainError

N_ACTIONS = 27
HOLD = 13
_SMALLEST_EDGE_LOG2 = -7.0


def action_deltas(action: int) -> tuple[int, int, int]:
    if not 0 <= action < N_ACTIONS:
        raise DomainError(f"action id {action} outside [0, {N_ACTIONS})")
    return (action // 9 - 1, (action // 3) % 3 - 1, action % 3 - 1)


def action_id(deltas) -> int:
    d1, d2, d3 = (int(d) for d in deltas)
    if not all(d in (-1, 0, 1) for d in (d1, d2, d3)):
        raise DomainError(f"action deltas must be in {{-1, 0, 1}}, got {deltas}")
    return (d1 + 1) * 9 + (d2 + 1) * 3 + (d3 + 1)


def inverse_action(action: int) -> int:
    return action_id(tuple(-d for d in action_deltas(action)))


def apply_action(knobs: tuple[int, int, int], action: int, shape: tuple[int, int, int]) -> tuple[int, int, int]:
    """Shift knob indices by the action, clamped to each domain."""
    return tuple(
        min(max(k + d, 0), n - 1) for k, d, n in zip(knobs, action_deltas(action), shape)
    )


@dataclass(frozen=True)
class StateSpace:
    knob_shape: tuple[int, int, int] = (4, 4, 4)
    n_buckets: int = 16

    def __post_init__(self):
        if self.n_buckets < 2 or self.n_buckets % 2:
            raise DomainError("the number of QoS buckets must be even and at least 2")

    @property
    def n_states(self) -> int:
        a, b, c = self.knob_shape
        return a * b * c * self.n_buckets

    def encode(self, l1: int, l2: int, dram: int, bucket: int) -> int:
        a, b, c = self.knob_shape
        if not (0 <= l1 < a and 0 <= l2 < b and 0 <= dram < c and 0 <= bucket < self.n_buckets):
            raise DomainError(f"state {(l1, l2, dram, bucket)} outside {self.knob_shape}x{self.n_buckets}")
        return ((l1 * b + l2) * c + dram) * self.n_buckets + bucket

    def decode(self, state: int) -> tuple[int, int, int, int]:
        if not 0 <= state < self.n_states:
            raise DomainError(f"state id {state} out of range")
        _, b, c = self.knob_shape
        state, bucket = divmod(state, self.n_buckets)
        state, dram = divmod(state, c)
        l1, l2 = divmod(state, b)
        return l1, l2, dram, bucket


@dataclass(frozen=True)
class GoalSpec:
    q_threshold: float
    max_q: float
    max_power: float = 1.0

    def __post_init__(self):
        if self.max_q <= 0 or self.max_power <= 0:
            raise DomainError("max_q and max_power must be positive")
        if not 0 <= self.q_threshold <= self.max_q:
            raise DomainError(f"threshold {self.q_threshold} outside [0, {self.max_q}]")


@dataclass(frozen=True)
class LearningParams:
    alpha: float = 0.6
    gamma: float = 0.1
    lam: float = 0.95
    epsilon: float = 1.0
    epsilon_decay: float = 0.99
    epsilon_min: float = 0.05
    q_init: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha={self.alpha} outside (0, 1]")
        for name in ("gamma", "lam", "epsilon", "epsilon_decay", "epsilon_min"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class RewardComponents:
    reward_p: float
    reward_q: float
    reward: float
    power_clamped: bool = False


def reward_p(power: float, goal: GoalSpec) -> tuple[float, bool]:
    """Power reward and whether ``power`` had to be clamped to ``max_power``."""
    if power > goal.max_power:
        return 0.0, True
    return 1.0 - max(power, 0.0) / goal.max_power, False


def reward_q(q: float, goal: GoalSpec) -> float:
    r = -(q - goal.q_threshold) / goal.max_q
    return min(max(r, -1.0), 1.0)


def reward(q: float, power: float, goal: GoalSpec) -> RewardComponents:
    rp, clamped = reward_p(power, goal)
    rq = reward_q(q, goal)
    return RewardComponents(rp, rq, rp if q <= goal.q_threshold else rq, clamped)


def discretize_qos_error(q: float, goal: GoalSpec, n_buckets: int = 16) -> int:
    """Bucket the signed headroom ``(threshold - q) / max_q`` on a log2 scale.

    Half the buckets cover each sign. Magnitude edges are powers of two from
    ``2**-7`` up to 1 (one octave per bucket at 16 buckets, finer with more).
    ``q == threshold`` lands in bucket ``n_buckets // 2``.
    """
    e = (goal.q_threshold - q) / goal.max_q
    e = min(max(e, -1.0), 1.0)
    m = n_buckets // 2
    mag = abs(e)
    if m == 1 or mag < 2.0**_SMALLEST_EDGE_LOG2:
        j = 0
    else:
        step = -_SMALLEST_EDGE_LOG2 / (m - 1)
        j = min(m - 1, math.floor(math.log2(mag) / step + 1e-9) + m)
    return m + j if e >= 0 else m - 1 - j


class QTable:
    """Dense action values with a companion eligibility-trace table."""

    def __init__(self, n_states: int, n_actions: int = N_ACTIONS, init: float = 0.0):
        self.q = np.full((n_states, n_actions), float(init))
        self.e = np.zeros((n_states, n_actions))

    @property
    def shape(self) -> tuple[int, int]:
        return self.q.shape

    def reset_traces(self) -> None:
        self.e.fill(0.0)

    def greedy(self, state: int) -> int:
        # argmax returns the first maximum: ties go to the lowest action id
        return int(np.argmax(self.q[state]))

    def export(self, path: str | Path) -> None:
        """Write ``state action value`` rows (values as exact float repr)."""
        with open(path, "w") as fh:
            fh.write(f"# states={self.q.shape[0]} actions={self.q.shape[1]}\n")
            for s, a in itertools.product(range(self.q.shape[0]), range(self.q.shape[1])):
                fh.write(f"{s} {a} {float(self.q[s, a])!r}\n")

    @classmethod
    def load(cls, path: str | Path) -> "QTable":
        with open(path) as fh:
            header = fh.readline().split()
            dims = dict(tok.split("=") for tok in header[1:])
            table = cls(int(dims["states"]), int(dims["actions"]))
            for line in fh:
                s, a, v = line.split()
                table.q[int(s), int(a)] = float(v)
        return table


def select_action(table: QTable, state: int, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice; exploration is uniform over all actions."""
    n = table.q.shape[1]
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(n))
    return table.greedy(state)


def _check_delta(delta: float) -> float:
    if not math.isfinite(delta):
        raise FloatingPointError(f"non-finite TD error {delta}; Q-table is corrupt")
    return delta


def td_lambda_step(
    table: QTable,
    s: int,
    a: int,
    r: float,
    s2: int,
    a2: int,
    params: LearningParams,
    terminal: bool = False,
) -> float:
    """One on-policy TD(lambda) backup with accumulating traces. Returns the TD error."""
    q, e = table.q, table.e
    target = r if terminal else r + params.gamma * q[s2, a2]
    delta = _check_delta(target - q[s, a])
    e[s, a] += 1.0
    # only entries with a live trace change; equivalent to the full-table loop
    live = e != 0.0
    q[live] += params.alpha * delta * e[live]
    e *= params.gamma * params.lam
    return delta


def q_learning_step(
    table: QTable,
    s: int,
    a: int,
    r: float,
    s2: int,
    params: LearningParams,
    terminal: bool = False,
) -> float:
    q = table.q
    target = r if terminal else r + params.gamma * q[s2].max()
    delta = _check_delta(target - q[s, a])
    q[s, a] += params.alpha * delta
    return delta


ALGORITHMS = ("td_lambda", "q_learning")


@dataclass
class Agent:
    """Epsilon-greedy controller that learns from one (QoS, power) observation per invocation."""

    space: StateSpace = field(default_factory=StateSpace)
    params: LearningParams = field(default_factory=LearningParams)
    algorithm: str = "td_lambda"
    seed: int = 0
    learning: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise DomainError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        self.table = QTable(self.space.n_states, N_ACTIONS, self.params.q_init)
        self.rng = np.random.Generator(np.random.PCG64(self.seed))
        self.epsilon = self.params.epsilon
        self.prev: tuple[int, int] | None = None  # (state, action) awaiting its reward
        self.last_reward: RewardComponents | None = None
        self.updates = 0
        self.power_clamps = 0

    def start_episode(self) -> None:
        self.table.reset_traces()

    def state_of(self, knobs: tuple[int, int, int], q: float, goal: GoalSpec) -> int:
        return self.space.encode(*knobs, discretize_qos_error(q, goal, self.space.n_buckets))

    def _choose(self, state: int) -> int:
        a = select_action(self.table, state, self.epsilon, self.rng)
        self.epsilon = max(self.params.epsilon_min, self.epsilon * self.params.epsilon_decay)
        return a

    def step(self, knobs: tuple[int, int, int], q: float, power: float, goal: GoalSpec) -> int:
        """Reward the previous action with this observation, learn, and pick the next action."""
        s2 = self.state_of(knobs, q, goal)
        rc = reward(q, power, goal)
        self.last_reward = rc
        self.power_clamps += rc.power_clamped
        a2 = self._choose(s2)
        if self.prev is not None and self.learning:
            s, a = self.prev
            if self.algorithm == "td_lambda":
                td_lambda_step(self.table, s, a, rc.reward, s2, a2, self.params)
            else:
                q_learning_step(self.table, s, a, rc.reward, s2, self.params)
            self.updates += 1
        self.prev = (s2, a2)
        return a2

    def greedy_action(self, knobs: tuple[int, int, int], q: float, goal: GoalSpec) -> int:
        return self.table.greedy(self.state_of(knobs, q, goal))

    def frozen(self) -> "Agent":
        """A non-learning copy that acts greedily (epsilon 0) from the same table."""
        clone = Agent(
            self.space, replace(self.params, epsilon=0.0, epsilon_min=0.0), self.algorithm, self.seed, learning=False
        )
        clone.table.q[:] = self.table.q
        return clone
