"""Live simulation session: agents and humans sharing one world.

One :class:`SimulationSession` owns a combat environment and advances it
at the 20 Hz decision rate.  Each tick it asks the two team controllers
for commands, overrides the entities claimed by human pilots with their
latest control inputs (last-write-wins -- the inputs are setpoints, so
replays within a tick are idempotent), steps the world, and hands the
caller a broadcast snapshot every second tick (10 Hz).

Human-controlled entities are excluded from agent action computation but
still receive rewards, so recorded episodes with humans in the loop stay
analyzable.  All mutation happens on the thread that calls :meth:`tick`;
the network layer delivers inputs by calling :meth:`set_control` on that
same thread.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..agents.commander import initial_params
from ..agents.episodes import TeamController, CommanderController
from ..combat.env import ActionCommand, CombatEnv, WorldState
from ..combat.rewards import PolicyKind
from ..combat.scenario import ScenarioConfig
from ..discodec import EntityId
from ..errors import ContractViolationError
from ..flightdyn import ControlInput
from .recorder import EpisodeRecorder
from .snapshots import Snapshot, snapshot_from_state

TICKS_PER_SNAPSHOT = 2         # 20 Hz decisions, 10 Hz broadcast


def _clamp(value: float, low: float, high: float) -> float:
    return low if value < low else high if value > high else value


@dataclass
class HumanSlot:
    """One human pilot's claim on an aircraft, plus input bookkeeping."""

    client_id: str
    entity: EntityId
    team: str
    control: ControlInput = field(
        default_factory=lambda: ControlInput(throttle=0.5))
    fire: bool = False
    pending_since: int | None = None   # step index when the input arrived
    inputs_received: int = 0
    inputs_applied: int = 0
    max_staleness: int = 0             # worst ticks from receipt to effect


class SessionRoster:
    """Claims by connected humans; at most one controller per entity."""

    def __init__(self) -> None:
        self._by_client: dict[str, HumanSlot] = {}

    def add(self, slot: HumanSlot) -> None:
        if slot.client_id in self._by_client:
            raise ContractViolationError(
                f"client {slot.client_id!r} already holds a slot")
        if slot.entity in self.claimed_entities():
            raise ContractViolationError(
                f"entity {slot.entity} already has a human controller")
        self._by_client[slot.client_id] = slot

    def remove(self, client_id: str) -> HumanSlot | None:
        return self._by_client.pop(client_id, None)

    def slot_for(self, client_id: str) -> HumanSlot | None:
        return self._by_client.get(client_id)

    def slots(self) -> list[HumanSlot]:
        return list(self._by_client.values())

    def claimed_entities(self) -> set[EntityId]:
        return {slot.entity for slot in self._by_client.values()}

    def stats(self) -> dict[str, dict[str, int]]:
        return {
            cid: {
                "received": slot.inputs_received,
                "applied": slot.inputs_applied,
                "max_staleness": slot.max_staleness,
            }
            for cid, slot in self._by_client.items()
        }


class SimulationSession:
    """The single loop that owns the world."""

    def __init__(
        self,
        config: ScenarioConfig,
        seed: int,
        blue: TeamController | None = None,
        red: TeamController | None = None,
        recorder: EpisodeRecorder | None = None,
    ):
        self.config = config
        self.seed = seed
        self.env = CombatEnv(config)
        self.state: WorldState = self.env.reset(seed=seed)
        self.blue = blue if blue is not None else CommanderController(initial_params())
        self.red = red if red is not None else CommanderController(initial_params())
        self.recorder = recorder
        self.roster = SessionRoster()
        self.last_actions: dict[EntityId, ActionCommand] = {}

        seq = np.random.SeedSequence(seed)
        blue_rng, red_rng = (np.random.default_rng(c) for c in seq.spawn(2))
        state = self.state
        self._team_of = {eid: state.teams[i] for i, eid in enumerate(state.ids)}
        blue_ids = [e for e in state.ids if self._team_of[e] == "blue"]
        red_ids = [e for e in state.ids if self._team_of[e] == "red"]
        self.blue.begin_episode(self.env, "blue", blue_ids, blue_rng)
        self.red.begin_episode(self.env, "red", red_ids, red_rng)

        self._streams: dict[EntityId, list[float]] = {e: [] for e in state.ids}
        self._events_recorded = 0
        self._events_broadcast = 0

    # --------------------------------------------------------- human slots

    @property
    def done(self) -> bool:
        return self.state.done

    @property
    def winner(self) -> str | None:
        return self.state.winner

    def claim(self, client_id: str, team: str) -> EntityId | None:
        """Assign the first free living aircraft of ``team`` to a human.

        Returns ``None`` when every slot on that team is taken or dead.
        """
        if team not in ("blue", "red"):
            raise ContractViolationError(f"unknown team {team!r}")
        taken = self.roster.claimed_entities()
        state = self.state
        for i, eid in enumerate(state.ids):
            if state.teams[i] == team and state.alive[i] and eid not in taken:
                self.roster.add(HumanSlot(
                    client_id=client_id, entity=eid, team=team))
                return eid
        return None

    def release(self, client_id: str) -> None:
        """Hand the client's aircraft back to its team controller."""
        self.roster.remove(client_id)

    def set_control(
        self,
        client_id: str,
        throttle: float,
        pitch: float,
        roll: float,
        fire: bool = False,
    ) -> None:
        """Stage a human control input; the next tick applies it."""
        slot = self.roster.slot_for(client_id)
        if slot is None:
            raise ContractViolationError(
                f"client {client_id!r} has not joined")
        slot.control = ControlInput(
            throttle=_clamp(float(throttle), 0.0, 1.0),
            pitch_cmd=_clamp(float(pitch), -1.0, 1.0),
            roll_cmd=_clamp(float(roll), -1.0, 1.0),
        )
        slot.fire = bool(fire)
        slot.inputs_received += 1
        if slot.pending_since is None:
            slot.pending_since = self.state.step_index

    # ----------------------------------------------------------- main loop

    def tick(self) -> Snapshot | None:
        """Advance one decision step; returns a snapshot on broadcast ticks.

        Broadcast cadence is every second tick, plus the final tick so
        clients always see the terminal state.
        """
        state = self.state
        if state.done:
            return None
        observations = self.env.observe_all()
        humans = self.roster.claimed_entities()
        joint: dict[EntityId, ActionCommand] = {}
        for controller, team in ((self.blue, "blue"), (self.red, "red")):
            team_obs = {
                eid: obs for eid, obs in observations.items()
                if self._team_of[eid] == team and eid not in humans
            }
            joint.update(controller.act(self.env, team_obs))
        executing_step = state.step_index + 1
        for slot in self.roster.slots():
            if slot.entity in observations:      # still alive
                joint[slot.entity] = ActionCommand(
                    control=slot.control, fire=slot.fire)
                slot.inputs_applied += 1
                if slot.pending_since is not None:
                    staleness = executing_step - slot.pending_since
                    slot.max_staleness = max(slot.max_staleness, staleness)
                    slot.pending_since = None

        policies = {
            eid: state.active_policy[state.index_of(eid)] for eid in joint}
        state, rewards, done = self.env.step(joint)
        self.last_actions = joint
        for eid, reward in rewards.items():
            self._streams[eid].append(reward)

        step_events = state.event_log[self._events_recorded:]
        self._events_recorded = len(state.event_log)
        if self.recorder is not None:
            self.recorder.on_step(
                state.step_index,
                snapshot_from_state(state, step_events),
                joint, policies, rewards)
            if done:
                self.recorder.finish(state.winner or "draw", self.returns())

        if state.step_index % TICKS_PER_SNAPSHOT == 0 or done:
            window = state.event_log[self._events_broadcast:]
            self._events_broadcast = len(state.event_log)
            return snapshot_from_state(state, window)
        return None

    def run_to_completion(self, max_steps: int | None = None) -> str:
        """Tick headless until the episode ends; returns the winner."""
        steps = 0
        while not self.state.done:
            self.tick()
            steps += 1
            if max_steps is not None and steps >= max_steps:
                break
        return self.state.winner or "draw"

    def returns(self) -> dict[EntityId, float]:
        """Discounted return per aircraft from the start of the episode."""
        gamma = self.config.gamma
        totals = {}
        for eid, stream in self._streams.items():
            total = 0.0
            for reward in reversed(stream):
                total = reward + gamma * total
            totals[eid] = total
        return totals
