"""Simulator of an approximate L1/L2/DRAM memory hierarchy with a learned knob controller."""

from .agent import Agent, GoalSpec, LearningParams, QTable, StateSpace
from .errors import ConfigurationError, DomainError, InfeasibleError
from .knob_models import DEFAULT_TABLES, EXACT_CONFIG, ErrorPowerTables, KnobConfig, KnobSpace, memory_power
from .memory_sim import ApproxRegion, CacheConfig, Hierarchy

__version__ = "0.1.0"
