"""Markov-game combat environment: world state, weapons, rewards, observations."""

from .env import (
    ActionCommand,
    CombatEnv,
    Event,
    EventKind,
    WorldState,
    discounted_return,
)
from .geometry import wez_check
from .observation import Observation
from .rewards import PolicyKind
from .scenario import (
    ScenarioConfig,
    SpawnSpec,
    TeamSpawn,
    default_scenario,
    drill_scenario,
)

__all__ = [
    "ActionCommand", "CombatEnv", "Event", "EventKind", "WorldState",
    "discounted_return", "wez_check", "Observation",
    "PolicyKind", "ScenarioConfig", "SpawnSpec", "TeamSpawn",
    "default_scenario", "drill_scenario",
]
