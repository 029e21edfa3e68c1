"""World snapshots with deterministic serialization.

A snapshot is the externally visible slice of the world at one instant:
kinematics, health, the active control policy, and whatever events the
caller accumulated since the previous snapshot.  The same document
format feeds three consumers -- the recorder (which hashes it), the
network protocol (which ships it as the ``tick`` message payload), and
the replay verifier (which must rebuild it bit-for-bit).  Determinism
therefore matters more than prettiness: keys are sorted, separators are
fixed, and floats go through Python's shortest round-trip repr, so two
equal world states always produce the same bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable

from ..combat.env import Event, EventKind, WorldState
from ..combat.rewards import PolicyKind
from ..discodec import EntityId


@dataclass(frozen=True)
class EntitySnap:
    """One aircraft as the outside world sees it."""

    entity: EntityId
    team: str
    position: tuple[float, float, float]     # north, east, down (m)
    velocity: tuple[float, float, float]     # NED components (m/s)
    attitude: tuple[float, float, float]     # heading, flight path, bank (rad)
    hp: float
    policy: PolicyKind
    alive: bool


@dataclass(frozen=True)
class Snapshot:
    """The world at one instant plus the events since the last one."""

    time: float
    entities: tuple[EntitySnap, ...]
    events: tuple[Event, ...]


def snapshot_from_state(
    state: WorldState, events: Iterable[Event] = ()
) -> Snapshot:
    """Freeze the externally visible slice of ``state``.

    ``events`` is whatever window the caller wants attached -- the
    recorder passes one step's worth, the network layer accumulates
    between broadcasts.
    """
    entities = []
    for i, eid in enumerate(state.ids):
        speed = float(state.arrays.speed[i])
        heading = float(state.arrays.heading[i])
        gamma = float(state.arrays.gamma[i])
        horizontal = speed * math.cos(gamma)
        entities.append(EntitySnap(
            entity=eid,
            team=state.teams[i],
            position=(float(state.arrays.north[i]),
                      float(state.arrays.east[i]),
                      float(state.arrays.down[i])),
            velocity=(horizontal * math.cos(heading),
                      horizontal * math.sin(heading),
                      -speed * math.sin(gamma)),
            attitude=(heading, gamma, float(state.arrays.bank[i])),
            hp=float(state.hp[i]),
            policy=state.active_policy[i],
            alive=bool(state.alive[i]),
        ))
    return Snapshot(
        time=state.time, entities=tuple(entities), events=tuple(events))


# ---------------------------------------------------------- serialization


def entity_id_doc(eid: EntityId) -> list[int]:
    return [eid.site, eid.application, eid.entity]


def entity_id_from_doc(doc: list) -> EntityId:
    return EntityId(int(doc[0]), int(doc[1]), int(doc[2]))


def entity_doc(snap: EntitySnap) -> dict:
    return {
        "id": entity_id_doc(snap.entity),
        "team": snap.team,
        "pos": list(snap.position),
        "vel": list(snap.velocity),
        "att": list(snap.attitude),
        "hp": snap.hp,
        "policy": snap.policy.value,
        "alive": snap.alive,
    }


def event_doc(event: Event) -> dict:
    return {
        "t": event.time,
        "kind": event.kind.value,
        "shooter": None if event.shooter is None else entity_id_doc(event.shooter),
        "target": None if event.target is None else entity_id_doc(event.target),
    }


def event_from_doc(doc: dict) -> Event:
    return Event(
        time=float(doc["t"]),
        kind=EventKind(doc["kind"]),
        shooter=None if doc["shooter"] is None else entity_id_from_doc(doc["shooter"]),
        target=None if doc["target"] is None else entity_id_from_doc(doc["target"]),
    )


def snapshot_doc(snapshot: Snapshot) -> dict:
    return {
        "t": snapshot.time,
        "entities": [entity_doc(s) for s in snapshot.entities],
        "events": [event_doc(e) for e in snapshot.events],
    }


def canonical_json(doc: object) -> str:
    """Stable serialization: sorted keys, fixed separators, no NaN."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def snapshot_hash(snapshot: Snapshot) -> str:
    """SHA-256 over the canonical document; the replay fidelity anchor."""
    payload = canonical_json(snapshot_doc(snapshot)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()
