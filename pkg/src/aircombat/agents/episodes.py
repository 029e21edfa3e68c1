"""Episode rollout and win-rate evaluation.

A TeamController turns a team's observations into commands each step.
`run_episode` wires two controllers to one environment and is fully
deterministic given its seed: the seed drives the spawn draw, the hit
rolls, and both controllers' private generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..combat.env import ActionCommand, CombatEnv, Event
from ..combat.observation import Observation
from ..combat.rewards import PolicyKind
from ..combat.scenario import ScenarioConfig
from ..discodec import EntityId
from ..errors import ContractViolationError
from .commander import (
    CommanderDecision,
    CommanderParams,
    commander_features,
    commander_select,
)
from .opponents import MixedStrategy, mixed_opponent_assign
from .policies import control_policy

COMMANDER_PERIOD_STEPS = 20    # one decision per second at the 20 Hz rate


class TeamController(Protocol):
    """Drives one team for one episode at a time."""

    def begin_episode(
        self, env: CombatEnv, team: str, entity_ids: list[EntityId],
        rng: np.random.Generator,
    ) -> None:
        """Called once after env.reset(); may assign active policies."""

    def act(
        self, env: CombatEnv, observations: dict[EntityId, Observation],
    ) -> dict[EntityId, ActionCommand]:
        """Commands for every living aircraft passed in."""


class ScriptedController:
    """Every aircraft runs one fixed control policy."""

    def __init__(self, kind: PolicyKind):
        self.kind = PolicyKind(kind)

    def begin_episode(self, env, team, entity_ids, rng):
        env.set_active_policies({eid: self.kind for eid in entity_ids})

    def act(self, env, observations):
        return {eid: control_policy(self.kind, obs)
                for eid, obs in observations.items()}


class MixedController:
    """Draws one policy per aircraft at episode start, i.i.d."""

    def __init__(self, strategy: MixedStrategy):
        self.strategy = strategy
        self._assignment: dict[EntityId, PolicyKind] = {}

    def begin_episode(self, env, team, entity_ids, rng):
        self._assignment = mixed_opponent_assign(self.strategy, entity_ids, rng)
        env.set_active_policies(self._assignment)

    def act(self, env, observations):
        return {eid: control_policy(self._assignment[eid], obs)
                for eid, obs in observations.items()}


@dataclass
class DecisionRecord:
    """One commander decision, kept for the policy-gradient trainer."""

    entity: EntityId
    step_index: int
    decision: CommanderDecision


class CommanderController:
    """Commander picks each aircraft's policy once per second."""

    def __init__(self, params: CommanderParams, explore: bool = False,
                 record: bool = False):
        self.params = params
        self.explore = explore
        self.record = record
        self.decisions: list[DecisionRecord] = []
        self._assignment: dict[EntityId, PolicyKind] = {}
        self._rng: np.random.Generator | None = None

    def begin_episode(self, env, team, entity_ids, rng):
        self._rng = rng
        self._assignment = {}
        self.decisions = []

    def act(self, env, observations):
        state = env.state
        # Refresh on the period boundary, and also whenever an aircraft
        # appears that the last decision did not cover (an entity handed
        # back to agent control between boundaries).
        stale = any(eid not in self._assignment for eid in observations)
        if state.step_index % COMMANDER_PERIOD_STEPS == 0 or stale:
            fresh: dict[EntityId, PolicyKind] = {}
            for eid, obs in observations.items():
                decision = commander_select(
                    self.params, commander_features(obs), self._rng,
                    explore=self.explore, decision_time=state.time)
                fresh[eid] = decision.chosen
                if self.record:
                    self.decisions.append(DecisionRecord(
                        entity=eid, step_index=state.step_index,
                        decision=decision))
            self._assignment = fresh
            env.set_active_policies(fresh)
        return {
            eid: control_policy(self._assignment[eid], obs)
            for eid, obs in observations.items()
        }


@dataclass(frozen=True)
class EpisodeResult:
    winner: str                                  # "blue" | "red" | "draw"
    steps: int
    events: tuple[Event, ...]
    returns: dict[EntityId, float]               # discounted from step 0
    reward_streams: dict[EntityId, tuple[float, ...]] = field(repr=False, default_factory=dict)


def run_episode(
    config: ScenarioConfig,
    blue: TeamController,
    red: TeamController,
    seed: int,
) -> EpisodeResult:
    """Roll one episode to termination; deterministic given the seed."""
    env = CombatEnv(config)
    state = env.reset(seed=seed)
    seq = np.random.SeedSequence(seed)
    blue_rng, red_rng = (np.random.default_rng(c) for c in seq.spawn(2))
    blue_ids = [eid for i, eid in enumerate(state.ids) if state.teams[i] == "blue"]
    red_ids = [eid for i, eid in enumerate(state.ids) if state.teams[i] == "red"]
    blue.begin_episode(env, "blue", blue_ids, blue_rng)
    red.begin_episode(env, "red", red_ids, red_rng)

    streams: dict[EntityId, list[float]] = {eid: [] for eid in state.ids}
    done = state.done
    while not done:
        observations = env.observe_all()
        blue_obs = {e: o for e, o in observations.items() if e in set(blue_ids)}
        red_obs = {e: o for e, o in observations.items() if e in set(red_ids)}
        joint = {**blue.act(env, blue_obs), **red.act(env, red_obs)}
        state, rewards, done = env.step(joint)
        for eid, reward in rewards.items():
            streams[eid].append(reward)

    gamma = config.gamma
    returns = {}
    for eid, stream in streams.items():
        total = 0.0
        for reward in reversed(stream):
            total = reward + gamma * total
        returns[eid] = total
    return EpisodeResult(
        winner=state.winner or "draw",
        steps=state.step_index,
        events=tuple(state.event_log),
        returns=returns,
        reward_streams={e: tuple(s) for e, s in streams.items()},
    )


@dataclass(frozen=True)
class WinRateReport:
    wins: int
    losses: int
    draws: int
    episodes: int
    rate: float            # wins / episodes; draws are not wins
    ci_low: float
    ci_high: float

    def decisive(self) -> bool:
        """True when the interval excludes even odds."""
        return self.ci_low > 0.5 or self.ci_high < 0.5


def wilson_interval(wins: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """95% score interval for a binomial proportion."""
    if total <= 0:
        raise ContractViolationError("interval needs at least one trial")
    p = wins / total
    denom = 1.0 + z * z / total
    center = (p + z * z / (2.0 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + z * z / (4.0 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def evaluate_winrate(
    config: ScenarioConfig,
    blue: TeamController,
    red: TeamController,
    episodes: int,
    base_seed: int = 0,
) -> WinRateReport:
    """Blue's win rate over consecutive seeds base_seed..base_seed+n-1."""
    if episodes < 1:
        raise ContractViolationError("evaluation needs at least one episode")
    wins = losses = draws = 0
    for k in range(episodes):
        result = run_episode(config, blue, red, seed=base_seed + k)
        if result.winner == "blue":
            wins += 1
        elif result.winner == "red":
            losses += 1
        else:
            draws += 1
    low, high = wilson_interval(wins, episodes)
    return WinRateReport(
        wins=wins, losses=losses, draws=draws, episodes=episodes,
        rate=wins / episodes, ci_low=low, ci_high=high,
    )
