"""Scenario files: one experiment (workload, inputs, goals, controller, knob domains) as YAML.

Every key is optional except ``workload``; missing keys take the defaults
documented in ``scenarios/README.md``. Relative paths (tables, input files) are
resolved against the scenario file's directory.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from ..agent import ALGORITHMS, LearningParams
from ..errors import ConfigurationError, DomainError
from ..knob_models import DEFAULT_TABLES, ErrorPowerTables, KnobConfig, KnobSpace
from ..memory_sim import L1_DEFAULT, L2_DEFAULT, ApproxRegion, CacheConfig
from ..workloads import WORKLOADS, SceneSpec

_TOP_KEYS = {
    "name", "workload", "workload_params", "frames", "inputs", "goal", "controller",
    "schedule", "knobs", "memory", "tables", "pretrain", "oracle", "sweep",
}


def _check_keys(raw: Mapping, allowed: set[str], where: str) -> None:
    if not isinstance(raw, Mapping):
        raise ConfigurationError(f"{where} must be a mapping, got {type(raw).__name__}")
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class InputSpec:
    """Input stream: procedural scene segments or a list of image files, replayed cyclically."""

    scenes: tuple[SceneSpec, ...] = ()
    files: tuple[str, ...] = ()
    seed: int = 0

    @classmethod
    def from_dict(cls, raw: Mapping | None, base_dir: Path) -> "InputSpec":
        raw = raw or {}
        _check_keys(raw, {"scenes", "files", "seed"}, "inputs")
        scenes = tuple(SceneSpec.from_dict(dict(s)) for s in raw.get("scenes", ()))
        files = tuple(str((base_dir / f).resolve()) for f in raw.get("files", ()))
        if scenes and files:
            raise ConfigurationError("inputs take either scenes or files, not both")
        return cls(scenes, files, int(raw.get("seed", 0)))

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"seed": self.seed}
        if self.scenes:
            out["scenes"] = [asdict(s) for s in self.scenes]
        if self.files:
            out["files"] = list(self.files)
        return out

    @property
    def cycle_length(self) -> int | None:
        if self.scenes:
            return sum(s.frames for s in self.scenes)
        if self.files:
            return len(self.files)
        return None


@dataclass(frozen=True)
class MemorySpec:
    memory_bytes: int = 1 << 20
    region: tuple[int, int] | None = None
    l1: CacheConfig = L1_DEFAULT
    l2: CacheConfig = L2_DEFAULT
    inject_at_nominal: bool = False

    @classmethod
    def from_dict(cls, raw: Mapping | None) -> "MemorySpec":
        raw = raw or {}
        _check_keys(raw, {"memory_bytes", "region", "l1", "l2", "inject_at_nominal"}, "memory")
        region = raw.get("region")
        return cls(
            int(raw.get("memory_bytes", 1 << 20)),
            None if region is None else (int(region[0]), int(region[1])),
            CacheConfig(**raw["l1"]) if "l1" in raw else L1_DEFAULT,
            CacheConfig(**raw["l2"]) if "l2" in raw else L2_DEFAULT,
            bool(raw.get("inject_at_nominal", False)),
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["region"] = None if self.region is None else list(self.region)
        return out

    def approx_region(self) -> ApproxRegion | None:
        return None if self.region is None else ApproxRegion(*self.region)


@dataclass(frozen=True)
class Scenario:
    workload: str
    name: str = "scenario"
    workload_params: Mapping = field(default_factory=dict)
    frames: int = 100
    inputs: InputSpec = field(default_factory=InputSpec)
    # goal: (frame, threshold) pairs, each threshold in force from its frame on
    goal_schedule: tuple[tuple[int, float], ...] = ()
    unconstrained: bool = False
    max_q: float | None = None
    max_power: float = 1.0
    controller: str = "agent"
    static_config: KnobConfig | None = None
    initial_knobs: tuple[int, int, int] | None = None
    algorithm: str = "td_lambda"
    n_qos_buckets: int = 16
    learning: LearningParams = field(default_factory=LearningParams)
    episode_length: int = 100
    invocation_period: int = 5
    bootstrap_period: int = 1
    bootstrap_frames: int | None = None
    goal_change_burst: int = 5
    knob_space: KnobSpace = field(default_factory=KnobSpace)
    memory: MemorySpec = field(default_factory=MemorySpec)
    tables: ErrorPowerTables = DEFAULT_TABLES
    pretrain_frames: int = 0
    pretrain_inputs: InputSpec | None = None
    oracle_frames: int = 10
    sweep_values: tuple | None = None

    def __post_init__(self):
        if self.workload not in WORKLOADS:
            raise ConfigurationError(f"unknown workload {self.workload!r}; choose from {sorted(WORKLOADS)}")
        if self.frames <= 0:
            raise ConfigurationError("frame budget must be positive")
        if self.pretrain_frames < 0 or self.oracle_frames <= 0:
            raise ConfigurationError("pretrain frames must be >= 0 and oracle frames > 0")
        for name in ("episode_length", "invocation_period", "bootstrap_period"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1")
        if self.goal_change_burst < 0 or (self.bootstrap_frames is not None and self.bootstrap_frames < 0):
            raise ConfigurationError("goal_change_burst and bootstrap_frames must be non-negative")
        starts = [f for f, _ in self.goal_schedule]
        if starts != sorted(starts) or len(set(starts)) != len(starts):
            raise ConfigurationError("goal schedule must be strictly sorted by frame index")
        if starts and starts[0] != 0:
            raise ConfigurationError("goal schedule must start at frame 0")
        if not self.goal_schedule and not self.unconstrained:
            raise ConfigurationError("a constrained scenario needs a goal schedule")
        max_q = self.resolved_max_q
        for _, thr in self.goal_schedule:
            if not 0 <= thr <= max_q:
                raise ConfigurationError(f"threshold {thr} outside [0, {max_q}]")
        if self.controller not in ("agent", "static"):
            raise ConfigurationError(f"controller must be 'agent' or 'static', got {self.controller!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if self.n_qos_buckets < 2 or self.n_qos_buckets % 2:
            raise ConfigurationError("n_qos_buckets must be even and >= 2")
        if self.controller == "static":
            if self.static_config is None:
                raise ConfigurationError("a static controller needs static_config")
            if not KnobSpace.from_tables(self.tables).contains(self.static_config):
                raise ConfigurationError(f"static config {self.static_config} not in the error/power tables")
        if self.initial_knobs is not None:
            shape = self.knob_space.shape
            if len(self.initial_knobs) != 3 or not all(0 <= k < n for k, n in zip(self.initial_knobs, shape)):
                raise ConfigurationError(f"initial knobs {self.initial_knobs} outside {shape}")
        full = KnobSpace.from_tables(self.tables)
        if not set(self.knob_space.vdd_levels) <= set(full.vdd_levels) or not set(self.knob_space.periods) <= set(
            full.periods
        ):
            raise ConfigurationError("agent knob levels must all appear in the error/power tables")

    @property
    def resolved_max_q(self) -> float:
        return float(self.max_q) if self.max_q is not None else float(WORKLOADS[self.workload].max_q)

    def threshold_at(self, frame: int) -> float:
        """Threshold in force at ``frame``; unconstrained runs use max_q."""
        if self.unconstrained:
            return self.resolved_max_q
        thr = self.goal_schedule[0][1]
        for start, value in self.goal_schedule:
            if start <= frame:
                thr = value
        return thr

    @property
    def goal_changes(self) -> list[int]:
        return [f for f, _ in self.goal_schedule if f > 0]

    @classmethod
    def from_dict(cls, raw: Mapping, base_dir: str | Path = ".") -> "Scenario":
        base_dir = Path(base_dir)
        _check_keys(raw, _TOP_KEYS, "scenario")
        if "workload" not in raw:
            raise ConfigurationError("scenario needs a workload")
        try:
            return cls(**_parse(raw, base_dir))
        except DomainError as exc:
            raise ConfigurationError(str(exc)) from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"malformed scenario: {exc}") from exc

    def to_dict(self) -> dict:
        """Self-contained form (tables inlined, paths absolute) that round-trips through from_dict."""
        goal: dict[str, Any] = {
            "schedule": [[f, t] for f, t in self.goal_schedule],
            "unconstrained": self.unconstrained,
            "max_power": self.max_power,
        }
        if self.max_q is not None:
            goal["max_q"] = self.max_q
        ctrl: dict[str, Any] = {
            "kind": self.controller,
            "algorithm": self.algorithm,
            "n_qos_buckets": self.n_qos_buckets,
            "learning": asdict(self.learning),
        }
        if self.static_config is not None:
            ctrl["static_config"] = [self.static_config.l1, self.static_config.l2, self.static_config.dram]
        if self.initial_knobs is not None:
            ctrl["initial_knobs"] = list(self.initial_knobs)
        sched = {
            "episode_length": self.episode_length,
            "invocation_period": self.invocation_period,
            "bootstrap_period": self.bootstrap_period,
            "goal_change_burst": self.goal_change_burst,
        }
        if self.bootstrap_frames is not None:
            sched["bootstrap_frames"] = self.bootstrap_frames
        out = {
            "name": self.name,
            "workload": self.workload,
            "workload_params": dict(self.workload_params),
            "frames": self.frames,
            "inputs": self.inputs.to_dict(),
            "goal": goal,
            "controller": ctrl,
            "schedule": sched,
            "knobs": {"vdd_levels": list(self.knob_space.vdd_levels), "periods": list(self.knob_space.periods)},
            "memory": self.memory.to_dict(),
            "tables": self.tables.to_dict(),
            "oracle": {"frames": self.oracle_frames},
        }
        if self.pretrain_frames:
            out["pretrain"] = {"frames": self.pretrain_frames}
            if self.pretrain_inputs is not None:
                out["pretrain"]["inputs"] = self.pretrain_inputs.to_dict()
        if self.sweep_values is not None:
            out["sweep"] = {"values": list(self.sweep_values)}
        return out


def _parse(raw: Mapping, base_dir: Path) -> dict:
    kw: dict[str, Any] = {"workload": str(raw["workload"])}
    for key in ("name",):
        if key in raw:
            kw[key] = str(raw[key])
    if "frames" in raw:
        kw["frames"] = int(raw["frames"])
    kw["workload_params"] = dict(raw.get("workload_params") or {})
    kw["inputs"] = InputSpec.from_dict(raw.get("inputs"), base_dir)

    goal = raw.get("goal") or {}
    _check_keys(goal, {"schedule", "unconstrained", "max_q", "max_power"}, "goal")
    kw["goal_schedule"] = tuple((int(f), float(t)) for f, t in goal.get("schedule", ()))
    kw["unconstrained"] = bool(goal.get("unconstrained", False))
    if goal.get("max_q") is not None:
        kw["max_q"] = float(goal["max_q"])
    kw["max_power"] = float(goal.get("max_power", 1.0))

    ctrl = raw.get("controller") or {}
    _check_keys(ctrl, {"kind", "static_config", "initial_knobs", "algorithm", "n_qos_buckets", "learning"}, "controller")
    kw["controller"] = str(ctrl.get("kind", "agent"))
    if ctrl.get("static_config") is not None:
        kw["static_config"] = KnobConfig(*(float(x) for x in ctrl["static_config"]))
    if ctrl.get("initial_knobs") is not None:
        kw["initial_knobs"] = tuple(int(x) for x in ctrl["initial_knobs"])
    kw["algorithm"] = str(ctrl.get("algorithm", "td_lambda"))
    kw["n_qos_buckets"] = int(ctrl.get("n_qos_buckets", 16))
    learning = ctrl.get("learning") or {}
    _check_keys(learning, {f.name for f in fields(LearningParams)}, "controller.learning")
    kw["learning"] = LearningParams(**{k: float(v) for k, v in learning.items()})

    sched = raw.get("schedule") or {}
    names = {"episode_length", "invocation_period", "bootstrap_period", "bootstrap_frames", "goal_change_burst"}
    _check_keys(sched, names, "schedule")
    for key in names:
        if sched.get(key) is not None:
            kw[key] = int(sched[key])

    knobs = raw.get("knobs") or {}
    _check_keys(knobs, {"vdd_levels", "periods"}, "knobs")
    kw["knob_space"] = KnobSpace(
        tuple(knobs.get("vdd_levels", KnobSpace().vdd_levels)), tuple(knobs.get("periods", KnobSpace().periods))
    )
    kw["memory"] = MemorySpec.from_dict(raw.get("memory"))

    tables = raw.get("tables")
    if isinstance(tables, str):
        kw["tables"] = ErrorPowerTables.from_file(base_dir / tables)
    elif tables:
        kw["tables"] = ErrorPowerTables.from_dict(tables)

    pre = raw.get("pretrain") or {}
    _check_keys(pre, {"frames", "inputs"}, "pretrain")
    kw["pretrain_frames"] = int(pre.get("frames", 0))
    if pre.get("inputs") is not None:
        kw["pretrain_inputs"] = InputSpec.from_dict(pre["inputs"], base_dir)

    oracle = raw.get("oracle") or {}
    _check_keys(oracle, {"frames"}, "oracle")
    kw["oracle_frames"] = int(oracle.get("frames", 10))

    sweep = raw.get("sweep") or {}
    _check_keys(sweep, {"values"}, "sweep")
    if sweep.get("values") is not None:
        kw["sweep_values"] = tuple(sweep["values"])
    return kw


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"scenario {path} is not valid YAML: {exc}") from exc
    if raw is None:
        raise ConfigurationError(f"scenario {path} is empty")
    return Scenario.from_dict(raw, path.parent)
