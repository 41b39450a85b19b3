"""The observe-decide-act loop: run a scenario frame by frame and record a trace."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from ..agent import HOLD, Agent, GoalSpec, StateSpace, apply_action, reward
from ..errors import ConfigurationError
from ..knob_models import DEFAULT_TABLES, KnobConfig, KnobSpace, memory_power
from ..memory_sim import Hierarchy
from ..workloads import BlackScholes, SyntheticWorkload, Workload, make_workload
from ..workloads.scenes import SceneSpec, file_sequence, option_sequence, scene_sequence
from .scenario import InputSpec, Scenario, load_scenario

CSV_HEADER = "frame,q,q_threshold,power,l1,l2,dram,action,reward,violation,invoked"
NO_ACTION = -1


@dataclass(frozen=True)
class TraceRecord:
    frame: int
    q: float
    q_threshold: float
    power: float
    l1: int
    l2: int
    dram: int
    action: int
    reward: float
    violation: bool
    invoked: bool

    def csv_row(self) -> str:
        # repr keeps every float exact, so replays can be compared byte for byte
        return (
            f"{self.frame},{self.q!r},{self.q_threshold!r},{self.power!r},{self.l1},{self.l2},{self.dram},"
            f"{self.action},{self.reward!r},{int(self.violation)},{int(self.invoked)}"
        )


@dataclass
class Summary:
    frames: int
    mean_power: float
    qos_overshoot: float
    violations: int
    invocations: int
    mean_q: float
    final_knobs: tuple[int, int, int]
    q_updates: int = 0

    @property
    def energy_per_frame(self) -> float:
        # functional timing: every frame takes the same time, so energy/frame tracks mean power
        return self.mean_power

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "mean_power": self.mean_power,
            "energy_per_frame": self.energy_per_frame,
            "qos_overshoot": self.qos_overshoot,
            "violations": self.violations,
            "invocations": self.invocations,
            "mean_q": self.mean_q,
            "final_knobs": list(self.final_knobs),
            "q_updates": self.q_updates,
        }


def qos_overshoot(trace) -> float:
    """Area of QoS above the threshold: sum of ``max(0, q - q_threshold)`` over frames."""
    if len(trace) == 0:
        raise ValueError("qos_overshoot needs a non-empty trace")
    return math.fsum(max(0.0, r.q - r.q_threshold) for r in trace)


def summarize(trace: list[TraceRecord], q_updates: int = 0) -> Summary:
    last = trace[-1]
    return Summary(
        frames=len(trace),
        mean_power=math.fsum(r.power for r in trace) / len(trace),
        qos_overshoot=qos_overshoot(trace),
        violations=sum(r.violation for r in trace),
        invocations=sum(r.invoked for r in trace),
        mean_q=math.fsum(r.q for r in trace) / len(trace),
        final_knobs=(last.l1, last.l2, last.dram),
        q_updates=q_updates,
    )


# -- controllers ----------------------------------------------------------------


class StaticController:
    """Holds one configuration forever and never touches a Q-table."""

    learns = False

    def __init__(self, config: KnobConfig, space: KnobSpace):
        self.config = config
        self.space = space
        self.initial = space.indices(config)

    def start_episode(self) -> None:
        pass

    def decide(self, knobs, q: float, power: float, goal: GoalSpec) -> tuple[int, float]:
        return HOLD, reward(q, power, goal).reward


class AgentController:
    learns = True

    def __init__(self, agent: Agent, space: KnobSpace, initial: tuple[int, int, int]):
        if agent.space.knob_shape != space.shape:
            raise ConfigurationError(f"agent expects knob shape {agent.space.knob_shape}, space has {space.shape}")
        self.agent = agent
        self.space = space
        self.initial = tuple(initial)

    def start_episode(self) -> None:
        self.agent.start_episode()

    def decide(self, knobs, q: float, power: float, goal: GoalSpec) -> tuple[int, float]:
        a = self.agent.step(knobs, q, power, goal)
        return a, self.agent.last_reward.reward


def static_baseline(config: KnobConfig, space: KnobSpace | None = None, tables=None) -> StaticController:
    """A controller pinned at ``config``.

    Knob indices in its trace refer to ``space`` when it contains ``config``,
    otherwise to the full table domain (e.g. a 0.5 s refresh period).
    """
    space = space or KnobSpace()
    if not space.contains(config):
        space = KnobSpace.from_tables(tables or DEFAULT_TABLES)
    return StaticController(config, space)


def build_controller(scenario: Scenario, seed: int = 0):
    if scenario.controller == "static":
        return static_baseline(scenario.static_config, scenario.knob_space, scenario.tables)
    agent = Agent(
        StateSpace(scenario.knob_space.shape, scenario.n_qos_buckets),
        scenario.learning,
        scenario.algorithm,
        seed=seed,
    )
    space = scenario.knob_space
    initial = scenario.initial_knobs or space.indices(space.exact)
    return AgentController(agent, space, initial)


# -- inputs ---------------------------------------------------------------------


def materialize_inputs(workload: Workload, inputs: InputSpec) -> list:
    """One cycle of the input stream; the runner replays it for as many frames as needed."""
    if isinstance(workload, SyntheticWorkload):
        return [None]
    scenes = inputs.scenes or (SceneSpec(frames=10),)
    if isinstance(workload, BlackScholes):
        if inputs.files:
            raise ConfigurationError("blackscholes takes procedural option scenes, not image files")
        return list(option_sequence(scenes, workload.n, inputs.seed))
    channels = 3 if workload.name == "kmeans" else 1
    if inputs.files:
        frames = list(file_sequence(inputs.files))
        want = (workload.height, workload.width) + (() if channels == 1 else (3,))
        for f in frames:
            if f.shape != want:
                raise ConfigurationError(f"input file shape {f.shape} does not match workload {want}")
        return frames
    return list(scene_sequence(scenes, workload.width, workload.height, channels, inputs.seed))


def _derive_seeds(seed: int) -> tuple[int, int, int]:
    children = np.random.SeedSequence(int(seed)).spawn(3)
    return tuple(int(c.generate_state(1, np.uint64)[0]) for c in children)


def make_hierarchy(scenario: Scenario, seed: int) -> Hierarchy:
    hw_seed, map_seed, _ = _derive_seeds(seed)
    m = scenario.memory
    try:
        return Hierarchy(
            m.memory_bytes, m.approx_region(), m.l1, m.l2, scenario.tables,
            seed=hw_seed, map_seed=map_seed, inject_at_nominal=m.inject_at_nominal,
        )
    except ValueError as exc:
        raise ConfigurationError(f"memory configuration: {exc}") from exc


# -- loop -------------------------------------------------------------------------


@dataclass
class RunResult:
    trace: list[TraceRecord]
    summary: Summary
    controller: object
    hierarchy: Hierarchy
    pretrain_trace: list[TraceRecord] = field(default_factory=list)

    @property
    def agent(self) -> Agent | None:
        return getattr(self.controller, "agent", None)


class _Loop:
    def __init__(self, scenario: Scenario, workload: Workload, h: Hierarchy, controller):
        self.s = scenario
        self.w = workload
        self.h = h
        self.ctrl = controller
        self.space = controller.space
        self.knobs = tuple(controller.initial)
        self.g = 0  # frames since the controller was created, across pretraining
        self.q = 0.0
        self.boot = scenario.episode_length if scenario.bootstrap_frames is None else scenario.bootstrap_frames
        self.max_q = scenario.resolved_max_q
        self._goals: dict[float, GoalSpec] = {}

    def goal(self, thr: float) -> GoalSpec:
        if thr not in self._goals:
            self._goals[thr] = GoalSpec(thr, self.max_q, self.s.max_power)
        return self._goals[thr]

    def invoked(self, f: int) -> bool:
        s, g = self.s, self.g
        if g < self.boot:
            if g % s.bootstrap_period == 0:
                return True
        elif (g - self.boot) % s.invocation_period == 0:
            return True
        # the monitor runs on every frame right after a goal change
        return any(0 <= f - c < s.goal_change_burst for c in s.goal_changes)

    def run(self, n_frames: int, inputs: list, frame_offset: int = 0) -> list[TraceRecord]:
        goldens: dict[int, object] = {}
        trace = []
        s, tables = self.s, self.s.tables
        for i in range(n_frames):
            f = (frame_offset + i) % s.frames
            if self.g % s.episode_length == 0:
                self.ctrl.start_episode()
            cfg = self.space.config(*self.knobs)
            if cfg != self.h.knobs:
                self.h.set_knobs(cfg)
            power = memory_power(cfg, tables)
            k = i % len(inputs)
            out = self.w.run(self.h, inputs[k])
            thr = s.threshold_at(f)
            action, r = NO_ACTION, 0.0
            invoked = self.invoked(f)
            new_knobs = self.knobs
            if invoked:
                if k not in goldens:
                    goldens[k] = self.w.golden(inputs[k])
                self.q = float(self.w.qos(goldens[k], out))
                action, r = self.ctrl.decide(self.knobs, self.q, power, self.goal(thr))
                new_knobs = apply_action(self.knobs, action, self.space.shape)
            trace.append(
                TraceRecord(f, self.q, float(thr), power, *self.knobs, action, float(r), self.q > thr, invoked)
            )
            self.knobs = new_knobs
            self.g += 1
        return trace


def run_scenario(scenario: Scenario, seed: int = 0, controller=None) -> RunResult:
    """Run ``scenario`` with run seed ``seed``.

    The seed drives fault injection, the DRAM fault map and the agent's
    exploration; inputs depend only on the scenario. An optional pretraining
    phase runs first with the same loop and is returned separately.
    """
    workload = make_workload(scenario.workload, **scenario.workload_params)
    h = make_hierarchy(scenario, seed)
    try:
        workload.bind(h)
    except ValueError as exc:
        raise ConfigurationError(f"workload does not fit the memory configuration: {exc}") from exc
    if controller is None:
        controller = build_controller(scenario, _derive_seeds(seed)[2])
    inputs = materialize_inputs(workload, scenario.inputs)
    loop = _Loop(scenario, workload, h, controller)
    pre = []
    if scenario.pretrain_frames:
        pre_inputs = inputs
        if scenario.pretrain_inputs is not None:
            pre_inputs = materialize_inputs(workload, scenario.pretrain_inputs)
        pre = loop.run(scenario.pretrain_frames, pre_inputs)
    trace = loop.run(scenario.frames, inputs)
    agent = getattr(controller, "agent", None)
    return RunResult(trace, summarize(trace, agent.updates if agent else 0), controller, h, pre)


def greedy_rollout(result: RunResult, scenario: Scenario, seed: int = 0, frames: int | None = None) -> RunResult:
    """Replay the scenario with a frozen greedy copy of a trained agent, starting from its last knobs."""
    if result.agent is None:
        raise ConfigurationError("greedy rollout needs an agent run")
    last = result.trace[-1]
    ctrl = AgentController(result.agent.frozen(), result.controller.space, (last.l1, last.l2, last.dram))
    s = replace(scenario, pretrain_frames=0, frames=frames or scenario.frames, bootstrap_frames=0)
    return run_scenario(s, seed, ctrl)


def modal_config(trace: list[TraceRecord], space: KnobSpace) -> KnobConfig:
    """Most frequent knob setting in a trace (ties go to the earliest seen)."""
    counts: dict[tuple[int, int, int], int] = {}
    for r in trace:
        key = (r.l1, r.l2, r.dram)
        counts[key] = counts.get(key, 0) + 1
    best = max(counts, key=counts.get)
    return space.config(*best)


# -- CSV ------------------------------------------------------------------------


def trace_csv(trace: list[TraceRecord]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in trace:
        buf.write(r.csv_row() + "\n")
    return buf.getvalue()


def write_trace_csv(trace: list[TraceRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trace_csv(trace))


def read_trace_csv(path: str | Path) -> list[TraceRecord]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigurationError(f"{path} is not a trace CSV (header {header!r})")
        out = []
        for line in fh:
            v = line.strip().split(",")
            out.append(
                TraceRecord(
                    int(v[0]), float(v[1]), float(v[2]), float(v[3]), int(v[4]), int(v[5]), int(v[6]),
                    int(v[7]), float(v[8]), v[9] == "1", v[10] == "1",
                )
            )
    return out


def write_gnuplot(trace: list[TraceRecord], path: str | Path) -> None:
    """Whitespace-separated columns for gnuplot: frame q threshold power l1 l2 dram."""
    with open(path, "w") as fh:
        fh.write("# frame q q_threshold power l1 l2 dram\n")
        for r in trace:
            fh.write(f"{r.frame} {r.q:.6g} {r.q_threshold:.6g} {r.power:.6g} {r.l1} {r.l2} {r.dram}\n")


RUN_META = "run.yaml"


def save_run(result: RunResult, scenario: Scenario, seed: int, out_dir: str | Path) -> Path:
    """Write trace.csv, summary.yaml and run.yaml (the scenario and seed needed to replay)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(result.trace, out / "trace.csv")
    with open(out / "summary.yaml", "w") as fh:
        yaml.safe_dump(result.summary.to_dict(), fh, sort_keys=False)
    with open(out / RUN_META, "w") as fh:
        yaml.safe_dump({"seed": int(seed), "scenario": scenario.to_dict()}, fh, sort_keys=False)
    if result.agent is not None:
        result.agent.table.export(out / "qtable.txt")
    return out / "trace.csv"


def replay(trace_path: str | Path) -> tuple[bool, str]:
    """Re-run the scenario recorded next to ``trace_path`` and compare CSV bytes.

    Returns ``(identical, message)``.
    """
    trace_path = Path(trace_path)
    meta_path = trace_path.parent / RUN_META
    try:
        with open(meta_path) as fh:
            meta = yaml.safe_load(fh)
        original = trace_path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot replay {trace_path}: {exc}") from exc
    scenario = Scenario.from_dict(meta["scenario"], meta_path.parent)
    fresh = trace_csv(run_scenario(scenario, int(meta["seed"])).trace).encode()
    if fresh == original:
        return True, f"identical ({len(original)} bytes)"
    a, b = original.decode().splitlines(), fresh.decode().splitlines()
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return False, f"first difference at line {i + 1}: {x!r} != {y!r}"
    return False, f"length differs: {len(a)} vs {len(b)} lines"


__all__ = [
    "CSV_HEADER",
    "RunResult",
    "Summary",
    "TraceRecord",
    "build_controller",
    "greedy_rollout",
    "load_scenario",
    "materialize_inputs",
    "modal_config",
    "qos_overshoot",
    "read_trace_csv",
    "replay",
    "run_scenario",
    "save_run",
    "static_baseline",
    "summarize",
    "trace_csv",
    "write_gnuplot",
    "write_trace_csv",
]
