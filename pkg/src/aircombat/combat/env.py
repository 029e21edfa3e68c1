"""The combat environment: joint-action stepping, weapons, termination.

One `CombatEnv` owns a roster of aircraft advanced 5 flight-dynamics
sub-steps (100 Hz) per 20 Hz decision step.  Firing resolves through the
gun engagement zone with a probabilistic hit drawn from the seeded
generator; a hit removes the full hit-point bar.  Everything downstream
of `reset(seed)` is deterministic: spawn draws, trajectories, hit rolls
and event ordering all flow from one generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from .. import flightdyn
from ..discodec import EntityId
from ..errors import ConfigurationError, ContractViolationError, InfeasibleTrimError
from ..flightdyn import AircraftState, ControlInput, FlightParams, StateArrays
from .geometry import PairwiseGeometry, compute_geometry, wez_mask
from .observation import Observation, build_observation, slot_layout
from .rewards import (
    DEFEND_ESCAPE_RANGE,
    ENGAGE_LOCK_ASPECT,
    ENGAGE_LOCK_ATA,
    ENGAGE_LOCK_RANGE,
    ENGAGE_LOCK_STEPS,
    PolicyKind,
    RewardContext,
    step_reward,
)
from .scenario import FACING_RANDOM, ScenarioConfig

DECISION_DT = 0.05      # 20 Hz decision rate
INTEGRATION_DT = 0.01   # 100 Hz dynamics
SUBSTEPS = 5
GUN_COOLDOWN_STEPS = 20  # 1 s at the decision rate

BLUE = "blue"
RED = "red"


class EventKind(str, Enum):
    FIRE = "fire"
    HIT = "hit"
    KILL = "kill"
    CRASH = "crash"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Event:
    time: float
    kind: EventKind
    shooter: EntityId | None = None
    target: EntityId | None = None


@dataclass(frozen=True)
class ActionCommand:
    """One aircraft's decision for one step."""

    control: ControlInput
    fire: bool = False


@dataclass(frozen=True)
class AircraftRecord:
    """Read-only view of one roster entry."""

    state: AircraftState
    team: str
    hp: float
    active_policy: PolicyKind
    alive: bool


@dataclass
class WorldState:
    """Complete simulation state; owned and mutated by one CombatEnv."""

    ids: tuple[EntityId, ...]
    teams: tuple[str, ...]
    arrays: StateArrays
    hp: np.ndarray
    alive: np.ndarray
    active_policy: list[PolicyKind]
    rng: np.random.Generator
    event_log: list[Event] = field(default_factory=list)
    step_index: int = 0
    done: bool = False
    winner: str | None = None
    # Internal reward trackers.
    last_fire_step: np.ndarray | None = None
    lock_steps: np.ndarray | None = None
    lock_rewarded: np.ndarray | None = None
    prev_threat_range: np.ndarray | None = None

    @property
    def time(self) -> float:
        return self.step_index * DECISION_DT

    def index_of(self, entity: EntityId) -> int:
        try:
            return self.ids.index(entity)
        except ValueError:
            raise ContractViolationError(f"unknown entity {entity}") from None

    def aircraft(self) -> dict[EntityId, AircraftRecord]:
        return {
            eid: AircraftRecord(
                state=self.arrays.state_at(i),
                team=self.teams[i],
                hp=float(self.hp[i]),
                active_policy=self.active_policy[i],
                alive=bool(self.alive[i]),
            )
            for i, eid in enumerate(self.ids)
        }

    def alive_ids(self) -> list[EntityId]:
        return [eid for i, eid in enumerate(self.ids) if self.alive[i]]

    def team_alive_count(self, team: str) -> int:
        return int(sum(1 for i in range(len(self.ids))
                       if self.alive[i] and self.teams[i] == team))


def blue_entity_id(n: int) -> EntityId:
    return EntityId(site=1, application=1, entity=n)


def red_entity_id(n: int) -> EntityId:
    return EntityId(site=2, application=1, entity=n)


class CombatEnv:
    """m-vs-n air combat as a Markov game.

    Usage: construct with a validated ScenarioConfig, call `reset()`,
    then `step(joint_action)` until done.  A single instance is
    single-threaded; run parallel episodes on separate instances.
    """

    def __init__(
        self,
        config: ScenarioConfig,
        params: FlightParams = flightdyn.DEFAULT_PARAMS,
    ):
        config.validate()
        self.config = config
        self.params = params
        self._state: WorldState | None = None
        self._slot_rows: np.ndarray | None = None
        self._enemy: np.ndarray | None = None
        self._geom_cache: tuple[int, PairwiseGeometry] | None = None

    @property
    def state(self) -> WorldState:
        if self._state is None:
            raise ContractViolationError("reset() has not been called")
        return self._state

    def reset(self, seed: int | None = None) -> WorldState:
        """Spawn the roster inside its volumes; deterministic per seed."""
        cfg = self.config
        rng = np.random.default_rng(cfg.seed if seed is None else seed)

        ids: list[EntityId] = []
        teams: list[str] = []
        states: list[AircraftState] = []
        rosters = (
            (BLUE, cfg.blue_count, cfg.spawn.blue, cfg.spawn.red, blue_entity_id),
            (RED, cfg.red_count, cfg.spawn.red, cfg.spawn.blue, red_entity_id),
        )
        for team, count, own_vol, enemy_vol, make_id in rosters:
            for k in range(1, count + 1):
                radius = rng.uniform(0.0, 1.0)
                theta = rng.uniform(0.0, 2.0 * math.pi)
                r = own_vol.radius_km * 1000.0 * math.sqrt(radius)
                north = own_vol.center[0] + r * math.cos(theta)
                east = own_vol.center[1] + r * math.sin(theta)
                altitude = rng.uniform(*own_vol.altitude_band)
                speed = rng.uniform(*cfg.spawn.speed_band)
                if cfg.spawn.facing == FACING_RANDOM:
                    heading = rng.uniform(0.0, 2.0 * math.pi)
                else:
                    heading = math.atan2(
                        enemy_vol.center[1] - east, enemy_vol.center[0] - north)
                    heading %= 2.0 * math.pi
                try:
                    trim = flightdyn.trim(speed, altitude, self.params)
                except InfeasibleTrimError as exc:
                    raise ConfigurationError(f"infeasible spawn: {exc}") from exc
                ids.append(make_id(k))
                teams.append(team)
                states.append(AircraftState(
                    position=(north, east, -altitude),
                    speed=speed, heading=heading, flight_path_angle=0.0,
                    bank=0.0, throttle=trim.throttle, fuel_fraction=1.0,
                ))

        n = len(ids)
        state = WorldState(
            ids=tuple(ids),
            teams=tuple(teams),
            arrays=StateArrays.from_states(states),
            hp=np.ones(n),
            alive=np.ones(n, dtype=bool),
            active_policy=[PolicyKind.ATTACK] * n,
            rng=rng,
            last_fire_step=np.full(n, -(10 ** 9), dtype=np.int64),
            lock_steps=np.zeros((n, n), dtype=np.int64),
            lock_rewarded=np.zeros((n, n), dtype=bool),
        )
        self._slot_rows = np.stack(
            [slot_layout(i, state.teams) for i in range(n)])
        team_arr = np.array(teams)
        self._enemy = team_arr[:, None] != team_arr[None, :]
        self._geom_cache = None
        geom = self._geometry(state)
        state.prev_threat_range = self._nearest_threat_ranges(state, geom)
        self._state = state
        return state

    def set_active_policies(self, assignment: Mapping[EntityId, PolicyKind]) -> None:
        state = self.state
        for eid, kind in assignment.items():
            state.active_policy[state.index_of(eid)] = PolicyKind(kind)

    def step(
        self, joint_action: Mapping[EntityId, ActionCommand]
    ) -> tuple[WorldState, dict[EntityId, float], bool]:
        """Advance one 20 Hz decision step.

        ``joint_action`` must hold exactly one command per living
        aircraft.  Returns the world, per-aircraft rewards for every
        aircraft that began the step alive, and the done flag.
        """
        state = self.state
        if state.done:
            raise ContractViolationError("episode already finished")
        self._validate_joint_action(state, joint_action)

        n = len(state.ids)
        alive_start = state.alive.copy()
        throttle = np.zeros(n)
        pitch = np.zeros(n)
        roll = np.zeros(n)
        fire_req = np.zeros(n, dtype=bool)
        for i, eid in enumerate(state.ids):
            if alive_start[i]:
                cmd = joint_action[eid]
                throttle[i] = cmd.control.throttle
                pitch[i] = cmd.control.pitch_cmd
                roll[i] = cmd.control.roll_cmd
                fire_req[i] = cmd.fire

        flightdyn.step_arrays(
            state.arrays, throttle, pitch, roll,
            INTEGRATION_DT, substeps=SUBSTEPS, params=self.params,
            active=state.alive,
        )
        state.step_index += 1
        now = state.time

        died = np.zeros(n, dtype=bool)
        # Ground impact.
        for i in range(n):
            if state.alive[i] and state.arrays.down[i] >= 0.0:
                state.alive[i] = False
                state.hp[i] = 0.0
                died[i] = True
                state.event_log.append(Event(now, EventKind.CRASH, state.ids[i]))

        self._geom_cache = None
        geom = self._geometry(state)
        kills = self._resolve_fire(state, geom, fire_req, died, now)

        blue_alive = state.team_alive_count(BLUE)
        red_alive = state.team_alive_count(RED)
        timed_out = now >= self.config.time_limit
        if blue_alive == 0 or red_alive == 0:
            state.done = True
            if blue_alive > 0:
                state.winner = BLUE
            elif red_alive > 0:
                state.winner = RED
            else:
                state.winner = "draw"
        elif timed_out:
            state.done = True
            state.winner = "draw"
            state.event_log.append(Event(now, EventKind.TIMEOUT))

        rewards = self._compute_rewards(state, geom, alive_start, died, kills)
        return state, rewards, state.done

    def observe(self, viewer: EntityId) -> Observation:
        state = self.state
        index = state.index_of(viewer)
        return self._observe_index(state, index)

    def observe_all(self) -> dict[EntityId, Observation]:
        """Observations for every living aircraft."""
        state = self.state
        return {
            eid: self._observe_index(state, i)
            for i, eid in enumerate(state.ids) if state.alive[i]
        }

    def wez_check(self, shooter: EntityId, target: EntityId) -> bool:
        state = self.state
        geom = self._geometry(state)
        return bool(wez_mask(geom)[state.index_of(shooter), state.index_of(target)])

    # Internal helpers.

    def _validate_joint_action(
        self, state: WorldState, joint_action: Mapping[EntityId, ActionCommand]
    ) -> None:
        living = {eid for i, eid in enumerate(state.ids) if state.alive[i]}
        given = set(joint_action.keys())
        if given != living:
            extra = given - living
            missing = living - given
            parts = []
            if extra:
                parts.append(f"commands for dead/unknown aircraft {sorted(map(str, extra))}")
            if missing:
                parts.append(f"missing commands for {sorted(map(str, missing))}")
            raise ContractViolationError("; ".join(parts))

    def _geometry(self, state: WorldState) -> PairwiseGeometry:
        if self._geom_cache is not None and self._geom_cache[0] == state.step_index:
            return self._geom_cache[1]
        geom = compute_geometry(state.arrays)
        self._geom_cache = (state.step_index, geom)
        return geom

    def _observe_index(self, state: WorldState, index: int) -> Observation:
        geom = self._geometry(state)
        return build_observation(
            index, self._slot_rows[index], geom,
            speed=state.arrays.speed, altitude=-state.arrays.down,
            heading=state.arrays.heading, bank=state.arrays.bank,
            hp=state.hp, alive=state.alive, viewer=state.ids[index],
        )

    def _resolve_fire(
        self,
        state: WorldState,
        geom: PairwiseGeometry,
        fire_req: np.ndarray,
        died: np.ndarray,
        now: float,
    ) -> np.ndarray:
        """Resolve trigger pulls in roster order; deaths land after all
        shots so simultaneous mutual kills both count."""
        n = len(state.ids)
        kills = np.zeros(n, dtype=np.int64)
        in_wez = wez_mask(geom)
        enemy = self._enemy
        pending_hits: list[tuple[int, int]] = []
        for i in range(n):
            if not (fire_req[i] and state.alive[i]):
                continue
            if state.step_index - state.last_fire_step[i] < GUN_COOLDOWN_STEPS:
                continue
            state.last_fire_step[i] = state.step_index
            state.event_log.append(Event(now, EventKind.FIRE, state.ids[i]))
            candidates = [
                j for j in range(n)
                if state.alive[j] and enemy[i, j] and in_wez[i, j]
            ]
            if not candidates:
                continue
            target = min(candidates, key=lambda j: geom.rng[i, j])
            if state.rng.random() < self.config.hit_probability:
                state.event_log.append(
                    Event(now, EventKind.HIT, state.ids[i], state.ids[target]))
                pending_hits.append((i, target))

        claimed: set[int] = set()
        for shooter, target in pending_hits:
            state.hp[target] = max(0.0, state.hp[target] - 1.0)
            # One kill credit per death: a second hit on the same target
            # in the same step logs a hit but no second kill.
            if target not in claimed:
                claimed.add(target)
                kills[shooter] += 1
                state.event_log.append(
                    Event(now, EventKind.KILL, state.ids[shooter], state.ids[target]))
        for target in claimed:
            state.alive[target] = False
            died[target] = True
        return kills

    def _nearest_threat_ranges(
        self, state: WorldState, geom: PairwiseGeometry
    ) -> np.ndarray:
        """Range to the nearest living enemy per aircraft (inf if none)."""
        masked = np.where(self._enemy & state.alive[None, :], geom.rng, np.inf)
        return masked.min(axis=1)

    def _compute_rewards(
        self,
        state: WorldState,
        geom: PairwiseGeometry,
        alive_start: np.ndarray,
        died: np.ndarray,
        kills: np.ndarray,
    ) -> dict[EntityId, float]:
        n = len(state.ids)
        enemy = self._enemy
        pair_alive = state.alive[:, None] & state.alive[None, :]

        # Rear-quarter lock bookkeeping (engage bonus), integer steps.
        held = (
            enemy & pair_alive
            & (geom.rng <= ENGAGE_LOCK_RANGE)
            & (geom.ata <= ENGAGE_LOCK_ATA)
            & (geom.aspect <= ENGAGE_LOCK_ASPECT)
        )
        state.lock_steps = np.where(held, state.lock_steps + 1, 0)
        crossed = held & (state.lock_steps >= ENGAGE_LOCK_STEPS) & ~state.lock_rewarded
        state.lock_rewarded = (state.lock_rewarded | crossed) & held
        lock_bonus = crossed.any(axis=1)

        threat_range = self._nearest_threat_ranges(state, geom)
        prev = state.prev_threat_range
        escaped = (
            (prev <= DEFEND_ESCAPE_RANGE)
            & (threat_range > DEFEND_ESCAPE_RANGE)
            & np.isfinite(prev)
        )
        state.prev_threat_range = threat_range

        nearest_cos = np.cos(geom.ata)
        rewards: dict[EntityId, float] = {}
        for i, eid in enumerate(state.ids):
            if not alive_start[i]:
                continue
            enemies_alive = np.where(enemy[i] & state.alive, geom.rng[i], np.inf)
            j = int(np.argmin(enemies_alive))
            has_enemy = math.isfinite(enemies_alive[j])
            ctx = RewardContext(
                kills=int(kills[i]),
                died=bool(died[i]),
                survived=bool(state.alive[i]),
                nearest_enemy_range=float(enemies_alive[j]) if has_enemy else math.inf,
                nearest_enemy_ata_cos=float(nearest_cos[i, j]) if has_enemy else -1.0,
                lock_achieved=bool(lock_bonus[i] and state.alive[i]),
                threat_escaped=bool(escaped[i] and state.alive[i]),
            )
            rewards[eid] = step_reward(state.active_policy[i], ctx)
        return rewards


def discounted_return(rewards: Iterable[float], gamma: float) -> float:
    """Sum of gamma^t * r_t over the sequence."""
    if not 0.0 <= gamma < 1.0:
        raise ContractViolationError(f"gamma must be in [0, 1), got {gamma}")
    total = 0.0
    for r in reversed(list(rewards)):
        total = r + gamma * total
    return total
