"""Network front end for a live session.

Clients speak newline-free JSON messages over a full-duplex WebSocket:

* client to server -- ``join`` (claim an aircraft on a team),
  ``control`` (throttle/pitch/roll/fire setpoints), ``ping``;
* server to client -- ``joined``, ``tick`` (snapshot broadcast),
  ``pong``, ``end``, ``error``.

The simulation loop and every message handler run on one asyncio event
loop, so the session is mutated from a single thread.  Outbound traffic
crosses to per-client queues with a hard size bound: when a client
cannot keep up, its oldest queued snapshot is dropped -- the simulation
never blocks on a slow reader, and the recorder (which writes inside the
tick, before any network fan-out) never loses a step.

Protocol violations close the offending connection with a coded reason;
the simulation itself never halts on client errors.  An optional
:class:`DisPublisher` replicates the same world over DIS datagrams.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import math
from dataclasses import dataclass
from typing import Mapping

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from ..bridge import (
    DEFAULT_ORIGIN,
    FORCE_FRIENDLY,
    FORCE_OPPOSING,
    MODE_ACTION,
    MODE_STATE,
    Transport,
    state_to_entity_pdu,
)
from ..combat.env import ActionCommand, DECISION_DT
from ..discodec import (
    ActionDataPdu,
    EntityId,
    PDU_TYPE_DATA,
    encode,
    make_header,
    make_timestamp,
)
from ..errors import ConfigurationError
from ..flightdyn import AircraftState
from ..geodesy import GeodeticOrigin
from .session import SimulationSession
from .snapshots import Snapshot, snapshot_doc

CLIENT_QUEUE_LIMIT = 8
CLOSE_POLICY_VIOLATION = 1008
CLOSE_NORMAL = 1000


# ------------------------------------------------------------ DIS fan-out


class DisPublisher:
    """Replicates a session's world over DIS UDP datagrams.

    ``state`` mode sends an entity-state PDU per living aircraft at the
    broadcast cadence; ``action`` mode sends the commands applied to the
    agent-controlled aircraft each decision step, for an external
    simulator that integrates them itself.
    """

    def __init__(
        self,
        transport: Transport,
        origin: GeodeticOrigin = DEFAULT_ORIGIN,
        exercise_id: int = 1,
        mode: str = MODE_STATE,
    ):
        if mode not in (MODE_STATE, MODE_ACTION):
            raise ConfigurationError(f"unknown publisher mode {mode!r}")
        self.transport = transport
        self.origin = origin
        self.exercise_id = exercise_id
        self.mode = mode
        self.sent = 0

    def publish_state(self, snapshot: Snapshot) -> None:
        for snap in snapshot.entities:
            if not snap.alive:
                continue
            state = AircraftState(
                position=snap.position,
                speed=math.hypot(*snap.velocity),
                heading=snap.attitude[0],
                flight_path_angle=snap.attitude[1],
                bank=snap.attitude[2],
            )
            force = FORCE_FRIENDLY if snap.team == "blue" else FORCE_OPPOSING
            pdu = state_to_entity_pdu(
                snap.entity, state, self.origin, self.exercise_id,
                snapshot.time, force_id=force,
                marking=f"{snap.team[:4]}-{snap.entity.entity}")
            self.transport.send(encode(pdu))
            self.sent += 1

    def publish_actions(
        self, actions: Mapping[EntityId, ActionCommand], sim_time: float
    ) -> None:
        for eid, command in actions.items():
            pdu = ActionDataPdu(
                header=make_header(
                    self.exercise_id, PDU_TYPE_DATA, make_timestamp(sim_time)),
                entity_id=eid,
                throttle=command.control.throttle,
                pitch_cmd=command.control.pitch_cmd,
                roll_cmd=command.control.roll_cmd,
                fire=int(command.fire),
            )
            self.transport.send(encode(pdu))
            self.sent += 1

    def close(self) -> None:
        self.transport.close()


# ------------------------------------------------------------- WS clients


@dataclass(frozen=True)
class _CloseCommand:
    code: int
    reason: str


class _Client:
    def __init__(self, client_id: str):
        self.id = client_id
        self.entity: EntityId | None = None
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=CLIENT_QUEUE_LIMIT)
        self.dropped = 0


class LoopbackClient:
    """Socket-free client: scripted pilots, demos, and tests.

    Registers with a server exactly like a network connection does --
    messages go through the same protocol handler, claims hold the same
    roster slots, and broadcasts land in the same bounded queue (drain
    it with :meth:`receive`, or let it shed snapshots like any slow
    reader).  A protocol violation closes it the same way too.
    """

    def __init__(self, server: "GatewayServer"):
        self._server = server
        self._client = _Client(f"loopback-{next(server._counter)}")
        server._clients[self._client.id] = self._client
        self.closed_with: str | None = None

    @property
    def entity(self) -> EntityId | None:
        return self._client.entity

    @property
    def dropped(self) -> int:
        return self._client.dropped

    def send(self, doc: object) -> list[dict]:
        """Deliver one message; returns the replies."""
        if self.closed_with is not None:
            raise ConfigurationError("client already closed")
        replies, fatal = self._server.handle_message(self._client, doc)
        if fatal is not None:
            self.closed_with = fatal
            self.close()
        return replies

    def receive(self) -> list[dict]:
        """Drain queued broadcasts (ticks, end) in arrival order."""
        out = []
        while True:
            try:
                item = self._client.queue.get_nowait()
            except asyncio.QueueEmpty:
                return out
            if isinstance(item, _CloseCommand):
                self.closed_with = item.reason
            else:
                out.append(json.loads(item))

    def close(self) -> None:
        self._server.session.release(self._client.id)
        self._server._clients.pop(self._client.id, None)


class GatewayServer:
    """Serves one session over WebSocket until the episode ends."""

    def __init__(
        self,
        session: SimulationSession,
        host: str = "127.0.0.1",
        port: int = 8080,
        time_scale: float = 1.0,
        publisher: DisPublisher | None = None,
    ):
        if time_scale <= 0.0:
            raise ConfigurationError("time_scale must be positive")
        self.session = session
        self.host = host
        self.port = port
        self.time_scale = time_scale
        self.publisher = publisher
        self.bound_port: int | None = None
        self.ready = asyncio.Event()
        self._clients: dict[str, _Client] = {}
        self._counter = itertools.count(1)

    # ----------------------------------------------------- protocol logic

    def handle_message(
        self, client: _Client, doc: object
    ) -> tuple[list[dict], str | None]:
        """Process one inbound message.

        Returns the replies to send and, for protocol violations, the
        close-reason code that must terminate the connection.  Join
        rejections (``slot-taken``) are answered but not fatal, so a
        client may retry the other team.
        """
        if not isinstance(doc, dict) or not isinstance(doc.get("type"), str):
            return [{"type": "error", "code": "bad-message"}], "bad-message"
        kind = doc["type"]
        if kind == "join":
            team = doc.get("team")
            if team not in ("blue", "red"):
                return [{"type": "error", "code": "bad-team"}], "bad-team"
            if client.entity is not None:
                return [{"type": "error", "code": "already-joined"}], None
            entity = self.session.claim(client.id, team)
            if entity is None:
                return [{"type": "error", "code": "slot-taken"}], None
            client.entity = entity
            return [{"type": "joined",
                     "entity": [entity.site, entity.application,
                                entity.entity]}], None
        if kind == "control":
            if client.entity is None:
                return [{"type": "error", "code": "not-joined"}], "not-joined"
            try:
                throttle = float(doc["throttle"])
                pitch = float(doc["pitch"])
                roll = float(doc["roll"])
            except (KeyError, TypeError, ValueError):
                return [{"type": "error", "code": "bad-control"}], "bad-control"
            if not all(math.isfinite(v) for v in (throttle, pitch, roll)):
                return [{"type": "error", "code": "bad-control"}], "bad-control"
            self.session.set_control(
                client.id, throttle, pitch, roll, bool(doc.get("fire", False)))
            return [], None
        if kind == "ping":
            stamp = doc.get("t")
            if not isinstance(stamp, (int, float)) or isinstance(stamp, bool):
                return [{"type": "error", "code": "bad-ping"}], "bad-ping"
            return [{"type": "pong", "t": stamp}], None
        return [{"type": "error", "code": "unknown-type"}], "unknown-type"

    # ------------------------------------------------------------ fan-out

    def _enqueue(self, client: _Client, item: object, droppable: bool) -> None:
        try:
            client.queue.put_nowait(item)
        except asyncio.QueueFull:
            if droppable:
                client.dropped += 1
                return
            # Make room for a must-deliver message by shedding the
            # oldest queued broadcast.
            try:
                client.queue.get_nowait()
                client.dropped += 1
            except asyncio.QueueEmpty:
                pass
            client.queue.put_nowait(item)

    def _broadcast(self, message: dict, droppable: bool) -> None:
        payload = json.dumps(message)
        for client in self._clients.values():
            self._enqueue(client, payload, droppable)

    # -------------------------------------------------------- connections

    async def _sender(self, connection, client: _Client) -> None:
        try:
            while True:
                item = await client.queue.get()
                if isinstance(item, _CloseCommand):
                    await connection.close(item.code, item.reason)
                    return
                await connection.send(item)
        except ConnectionClosed:
            return

    async def _handler(self, connection) -> None:
        client = _Client(f"client-{next(self._counter)}")
        self._clients[client.id] = client
        sender = asyncio.create_task(self._sender(connection, client))
        fatal: str | None = None
        try:
            async for raw in connection:
                try:
                    doc = json.loads(raw)
                except (json.JSONDecodeError, UnicodeDecodeError):
                    doc = None
                    fatal = "bad-json"
                    self._enqueue(
                        client,
                        json.dumps({"type": "error", "code": "bad-json"}),
                        droppable=False)
                    break
                replies, fatal = self.handle_message(client, doc)
                for reply in replies:
                    self._enqueue(client, json.dumps(reply), droppable=False)
                if fatal is not None:
                    break
        except ConnectionClosed:
            pass
        finally:
            self.session.release(client.id)
            self._clients.pop(client.id, None)
            if fatal is not None:
                self._enqueue(
                    client, _CloseCommand(CLOSE_POLICY_VIOLATION, fatal),
                    droppable=False)
                try:
                    await asyncio.wait_for(sender, timeout=1.0)
                except (asyncio.TimeoutError, asyncio.CancelledError):
                    sender.cancel()
            else:
                sender.cancel()
                try:
                    await sender
                except asyncio.CancelledError:
                    pass

    # ---------------------------------------------------------- main loop

    async def run(self) -> str:
        """Serve the session until the episode ends; returns the winner.

        The tick pacing is wall-clock with drift correction; a
        ``time_scale`` above one runs the scenario faster than real
        time (demo and test use), one is real time.
        """
        dt_wall = DECISION_DT / self.time_scale
        loop = asyncio.get_running_loop()
        async with serve(self._handler, self.host, self.port) as server:
            self.bound_port = server.sockets[0].getsockname()[1]
            self.ready.set()
            start = loop.time()
            step = 0
            while not self.session.done:
                snapshot = self.session.tick()
                step += 1
                if self.publisher is not None:
                    if self.publisher.mode == MODE_ACTION:
                        self.publisher.publish_actions(
                            self.session.last_actions,
                            self.session.state.time)
                    elif snapshot is not None:
                        self.publisher.publish_state(snapshot)
                if snapshot is not None:
                    self._broadcast(
                        {"type": "tick", **snapshot_doc(snapshot)},
                        droppable=True)
                target = start + step * dt_wall
                delay = target - loop.time()
                await asyncio.sleep(delay if delay > 0.0 else 0.0)
            winner = self.session.winner or "draw"
            self._broadcast({"type": "end", "winner": winner}, droppable=False)
            for client in list(self._clients.values()):
                self._enqueue(
                    client, _CloseCommand(CLOSE_NORMAL, "episode-complete"),
                    droppable=False)
            # Grace period for the senders to drain before the listener
            # and any straggler connections are torn down.
            await asyncio.sleep(min(0.25, 10.0 * dt_wall))
        if self.publisher is not None:
            self.publisher.close()
        return winner
