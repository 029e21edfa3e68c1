"""DIS network bridge.

Connects the local simulation to an external simulator over UDP: a
receiver thread decodes entity-state traffic, a single main loop owns
all mutable state, mirrors the entities the other side simulates, runs
control policies for the entities this side owns, and answers in one of
two modes:

* ``state`` -- advance the local dynamics and broadcast fresh
  entity-state PDUs (this side is the simulation authority);
* ``action`` -- broadcast flight-command PDUs and let the other side
  integrate them (the other side is the authority; its entity-state
  reports for our aircraft update our view of ourselves).

Action computation is event-driven -- every accepted inbound state
update triggers one batch of decisions -- with a timer fallback at
``send_rate`` so an empty network still produces keep-alive traffic.
"""

from __future__ import annotations

import math
import queue
import socket
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Protocol

import numpy as np

from .combat.env import ActionCommand
from .combat.geometry import compute_geometry
from .combat.observation import Observation, build_observation, slot_layout
from .combat.rewards import PolicyKind
from .agents.policies import control_policy
from .discodec import (
    ActionDataPdu,
    EntityId,
    EntityStatePdu,
    MalformedPacketError,
    PDU_TYPE_DATA,
    PDU_TYPE_ENTITY_STATE,
    PduHeader,
    UnsupportedPdu,
    dead_reckon,
    decode,
    encode,
    make_header,
    make_timestamp,
)
from .errors import ConfigurationError
from .flightdyn import (
    DEFAULT_PARAMS,
    AircraftState,
    ControlInput,
    FlightParams,
    StateArrays,
    step_arrays,
)
from .geodesy import (
    GeodeticOrigin,
    attitude_to_dis_euler,
    dis_euler_to_attitude,
    ecef_to_ned,
    ecef_vector_to_ned,
    ned_to_ecef,
    ned_vector_to_ecef,
)

MODE_STATE = "state"
MODE_ACTION = "action"

CONTROLLED_BY_AGENT = "agent"
CONTROLLED_BY_EXTERNAL = "external"

DEFAULT_LISTEN = ("0.0.0.0", 3000)
DEFAULT_DESTINATION = ("127.0.0.1", 3001)
DEFAULT_SEND_RATE = 10.0
INTEGRATION_DT = 0.01           # s, local dynamics sub-step

#: Anchor of the local NED frame when a scenario does not supply one.
DEFAULT_ORIGIN = GeodeticOrigin(lat_deg=35.0, lon_deg=-117.0, alt_m=0.0)

FORCE_FRIENDLY = 1
FORCE_OPPOSING = 2


# --------------------------------------------------------------- transports


class Transport(Protocol):
    """Datagram pipe: non-blocking receive, fire-and-forget send."""

    def send(self, data: bytes) -> None: ...

    def poll(self) -> list[bytes]:
        """Drain everything received since the last poll."""
        ...

    def close(self) -> None: ...


class UdpTransport:
    """UDP socket with a background receiver thread.

    The thread only moves datagrams into a queue; decoding and every
    other piece of work happens on whichever thread calls
    :meth:`poll`.  ``close`` unblocks the receiver and joins it.
    """

    def __init__(
        self,
        listen: tuple[str, int],
        destination: tuple[str, int],
        recv_buffer: int = 65535,
    ):
        self.destination = destination
        self._recv_buffer = recv_buffer
        self._queue: queue.Queue[bytes] = queue.Queue()
        self._closed = threading.Event()
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._sock.bind(listen)
        except OSError:
            self._sock.close()
            raise
        self._sock.settimeout(0.02)
        self.local_address: tuple[str, int] = self._sock.getsockname()
        self._thread = threading.Thread(
            target=self._receive_loop, name="dis-bridge-recv", daemon=True)
        self._thread.start()

    def _receive_loop(self) -> None:
        while not self._closed.is_set():
            try:
                data, _addr = self._sock.recvfrom(self._recv_buffer)
            except socket.timeout:
                continue
            except OSError:
                break
            self._queue.put(data)

    def send(self, data: bytes) -> None:
        if self._closed.is_set():
            return
        try:
            self._sock.sendto(data, self.destination)
        except OSError:
            pass  # transient network failure; DIS traffic is lossy anyway

    def poll(self) -> list[bytes]:
        out = []
        while True:
            try:
                out.append(self._queue.get_nowait())
            except queue.Empty:
                return out

    def close(self) -> None:
        self._closed.set()
        try:
            self._sock.close()
        except OSError:
            pass
        self._thread.join(timeout=0.2)


class LoopbackTransport:
    """In-process transport pair for deterministic harness work."""

    def __init__(self):
        self._inbox: deque[bytes] = deque()
        self._peer: "LoopbackTransport | None" = None

    @classmethod
    def pair(cls) -> tuple["LoopbackTransport", "LoopbackTransport"]:
        a, b = cls(), cls()
        a._peer, b._peer = b, a
        return a, b

    def send(self, data: bytes) -> None:
        if self._peer is not None:
            self._peer._inbox.append(bytes(data))

    def poll(self) -> list[bytes]:
        out = list(self._inbox)
        self._inbox.clear()
        return out

    def close(self) -> None:
        self._peer = None
        self._inbox.clear()


# ------------------------------------------------------------ configuration


@dataclass(frozen=True)
class VrfFilter:
    """Traffic filter: a PDU matches iff every present field agrees."""

    exercise_id: int
    site: int | None = None
    application: int | None = None

    def matches(self, header: PduHeader, entity_id: EntityId) -> bool:
        if header.exercise_id != self.exercise_id:
            return False
        if self.site is not None and entity_id.site != self.site:
            return False
        if self.application is not None and entity_id.application != self.application:
            return False
        return True


@dataclass(frozen=True)
class BridgeConfig:
    """Everything one bridge instance needs to run."""

    roster: Mapping[EntityId, str]                 # agent | external
    traffic_filter: VrfFilter
    mode: str = MODE_STATE
    listen: tuple[str, int] = DEFAULT_LISTEN
    destination: tuple[str, int] = DEFAULT_DESTINATION
    send_rate: float = DEFAULT_SEND_RATE
    policies: Mapping[EntityId, PolicyKind] = field(default_factory=dict)
    origin: GeodeticOrigin = DEFAULT_ORIGIN

    def validate(self) -> None:
        if self.mode not in (MODE_STATE, MODE_ACTION):
            raise ConfigurationError(f"unknown bridge mode {self.mode!r}")
        if not 1.0 <= self.send_rate <= 100.0:
            raise ConfigurationError(
                f"send_rate must sit in [1, 100] Hz, got {self.send_rate}")
        if self.listen == self.destination:
            raise ConfigurationError(
                "listen and destination must differ (loopback tests need two ports)")
        if not self.roster:
            raise ConfigurationError("roster must name at least one entity")
        for eid, owner in self.roster.items():
            if owner not in (CONTROLLED_BY_AGENT, CONTROLLED_BY_EXTERNAL):
                raise ConfigurationError(
                    f"entity {eid} has unknown controller {owner!r}")
        for eid in self.policies:
            if self.roster.get(eid) != CONTROLLED_BY_AGENT:
                raise ConfigurationError(
                    f"policy assigned to non-agent entity {eid}")

    def agent_ids(self) -> list[EntityId]:
        return sorted(
            (e for e, owner in self.roster.items() if owner == CONTROLLED_BY_AGENT),
            key=EntityId.as_tuple)

    def external_ids(self) -> list[EntityId]:
        return sorted(
            (e for e, owner in self.roster.items() if owner == CONTROLLED_BY_EXTERNAL),
            key=EntityId.as_tuple)

    def policy_for(self, eid: EntityId) -> PolicyKind:
        return self.policies.get(eid, PolicyKind.ATTACK)


@dataclass
class BridgeStats:
    """Monotone traffic counters plus the last receive timestamp."""

    received: int = 0
    sent: int = 0
    dropped: int = 0
    malformed: int = 0
    filtered: int = 0
    last_receive_time: float | None = None


# ------------------------------------------------------- state conversions


def state_to_entity_pdu(
    eid: EntityId,
    state: AircraftState,
    origin: GeodeticOrigin,
    exercise_id: int,
    sim_time: float,
    force_id: int = FORCE_FRIENDLY,
    marking: str = "",
) -> EntityStatePdu:
    """Local NED aircraft state to an earth-centred entity-state PDU."""
    position = ned_to_ecef(np.asarray(state.position, dtype=float), origin)
    velocity = ned_vector_to_ecef(
        np.asarray(state.velocity_ned(), dtype=float), origin)
    orientation = attitude_to_dis_euler(
        state.heading, state.flight_path_angle, state.bank, origin)
    return EntityStatePdu(
        header=make_header(
            exercise_id, PDU_TYPE_ENTITY_STATE, make_timestamp(sim_time)),
        entity_id=eid,
        force_id=force_id,
        location=tuple(float(c) for c in position),
        linear_velocity=tuple(float(c) for c in velocity),
        orientation=orientation,
        marking=marking or str(eid),
    )


def entity_pdu_to_state(
    pdu: EntityStatePdu, origin: GeodeticOrigin
) -> AircraftState:
    """Inverse of :func:`state_to_entity_pdu` up to wire quantisation."""
    ned = ecef_to_ned(np.asarray(pdu.location, dtype=float), origin)
    vel = ecef_vector_to_ned(np.asarray(pdu.linear_velocity, dtype=float), origin)
    speed = float(np.linalg.norm(vel))
    heading_e, _pitch_e, roll_e = dis_euler_to_attitude(*pdu.orientation, origin)
    if speed > 1e-6:
        heading = math.atan2(float(vel[1]), float(vel[0])) % (2.0 * math.pi)
        gamma = math.asin(max(-1.0, min(1.0, -float(vel[2]) / speed)))
    else:
        heading = heading_e % (2.0 * math.pi)
        gamma = 0.0
    return AircraftState(
        position=(float(ned[0]), float(ned[1]), float(ned[2])),
        speed=speed,
        heading=heading,
        flight_path_angle=gamma,
        bank=roll_e,
    )


@dataclass
class MirroredEntity:
    """Last received wire state of an entity someone else simulates."""

    pdu: EntityStatePdu
    received_at: float

    def position_ned(self, now: float, origin: GeodeticOrigin) -> np.ndarray:
        """Dead-reckoned NED position ``now`` seconds into the run."""
        dt = max(0.0, now - self.received_at)
        return ecef_to_ned(np.asarray(dead_reckon(self.pdu, dt)), origin)

    def state(self) -> AircraftState:
        return entity_pdu_to_state(self.pdu, DEFAULT_ORIGIN)


# ------------------------------------------------------------------ bridge


class DisBridge:
    """Single-owner bridge loop; see the module docstring for the modes.

    All mutation happens on the thread that calls :meth:`tick` (or
    :meth:`run`, which calls it on a wall clock).  The transport's
    receiver thread only queues raw datagrams.
    """

    def __init__(
        self,
        config: BridgeConfig,
        transport: Transport,
        initial_states: Mapping[EntityId, AircraftState],
        params: FlightParams = DEFAULT_PARAMS,
    ):
        config.validate()
        agent_ids = config.agent_ids()
        missing = [e for e in agent_ids if e not in initial_states]
        if missing:
            raise ConfigurationError(
                f"agent entities need initial states: {missing}")
        self.config = config
        self.transport = transport
        self.params = params
        self.stats = BridgeStats()
        self.agent_ids = agent_ids
        self.arrays = StateArrays.from_states(
            [initial_states[e] for e in agent_ids])
        self.mirrors: dict[EntityId, MirroredEntity] = {}
        self._controls = {
            e: ControlInput(throttle=0.5) for e in agent_ids}
        self._fire_flags = {e: False for e in agent_ids}
        self._last_advance: float | None = None
        self._last_send: float | None = None
        self._stop = threading.Event()

    # ------------------------------------------------------------- inbound

    def _accept(self, data: bytes, now: float) -> bool:
        """Decode and absorb one datagram; True if it updated anything."""
        self.stats.received += 1
        try:
            pdu = decode(data)
        except MalformedPacketError:
            self.stats.malformed += 1
            return False
        if isinstance(pdu, UnsupportedPdu):
            self.stats.dropped += 1
            return False
        if not self.config.traffic_filter.matches(pdu.header, pdu.entity_id):
            self.stats.filtered += 1
            return False
        self.stats.last_receive_time = now
        if isinstance(pdu, EntityStatePdu):
            return self._accept_entity_state(pdu, now)
        self.stats.dropped += 1       # inbound flight commands are not ours
        return False

    def _accept_entity_state(self, pdu: EntityStatePdu, now: float) -> bool:
        eid = pdu.entity_id
        owner = self.config.roster.get(eid)
        if owner == CONTROLLED_BY_AGENT:
            if self.config.mode == MODE_STATE:
                # We are the authority for this aircraft; an external
                # report for it is stale echo.
                self.stats.dropped += 1
                return False
            # Action mode: the other side integrates our aircraft, so
            # its report replaces our view of ourselves.
            index = self.agent_ids.index(eid)
            state = entity_pdu_to_state(pdu, self.config.origin)
            self.arrays.set_state(index, state)
            return True
        # Unknown entities are treated as external traffic: the roster
        # names what we fly, the network tells us who else is there.
        self.mirrors[eid] = MirroredEntity(pdu=pdu, received_at=now)
        return True

    # ------------------------------------------------------- observations

    def _world_rows(self) -> tuple[list[EntityId], list[str], StateArrays]:
        """Roster + mirrored traffic as one observation-ready batch."""
        external = sorted(self.mirrors, key=EntityId.as_tuple)
        states = [self.arrays.state_at(i) for i in range(len(self.agent_ids))]
        states += [
            entity_pdu_to_state(self.mirrors[e].pdu, self.config.origin)
            for e in external
        ]
        ids = list(self.agent_ids) + external
        teams = (["blue"] * len(self.agent_ids)) + (["red"] * len(external))
        return ids, teams, StateArrays.from_states(states)

    def observe(self, eid: EntityId) -> Observation:
        """Observation for one agent-controlled aircraft."""
        ids, teams, arrays = self._world_rows()
        index = ids.index(eid)
        geom = compute_geometry(arrays)
        n = len(ids)
        return build_observation(
            index=index,
            slot_rows=slot_layout(index, teams),
            geom=geom,
            speed=arrays.speed,
            altitude=-arrays.down,
            heading=arrays.heading,
            bank=arrays.bank,
            hp=np.ones(n),
            alive=np.ones(n, dtype=bool),
            viewer=eid,
        )

    def _decide(self) -> None:
        for eid in self.agent_ids:
            command = control_policy(
                self.config.policy_for(eid), self.observe(eid))
            # Commands are float32 on the wire in action mode; applying
            # the same precision locally keeps the trajectory independent
            # of which side integrates it.
            self._controls[eid] = ControlInput(
                throttle=float(np.float32(command.control.throttle)),
                pitch_cmd=float(np.float32(command.control.pitch_cmd)),
                roll_cmd=float(np.float32(command.control.roll_cmd)),
            )
            self._fire_flags[eid] = bool(command.fire)

    # -------------------------------------------------------------- output

    def _advance(self, now: float) -> None:
        if self.config.mode != MODE_STATE:
            return
        if self._last_advance is None:
            self._last_advance = now
            return
        substeps = int(round((now - self._last_advance) / INTEGRATION_DT))
        if substeps <= 0:
            return
        throttle = np.array([self._controls[e].throttle for e in self.agent_ids])
        pitch = np.array([self._controls[e].pitch_cmd for e in self.agent_ids])
        roll = np.array([self._controls[e].roll_cmd for e in self.agent_ids])
        step_arrays(self.arrays, throttle, pitch, roll,
                    INTEGRATION_DT, substeps, self.params)
        self._last_advance += substeps * INTEGRATION_DT

    def _emit(self, now: float) -> None:
        exercise = self.config.traffic_filter.exercise_id
        for index, eid in enumerate(self.agent_ids):
            if self.config.mode == MODE_STATE:
                pdu = state_to_entity_pdu(
                    eid, self.arrays.state_at(index), self.config.origin,
                    exercise, now)
            else:
                control = self._controls[eid]
                pdu = ActionDataPdu(
                    header=make_header(
                        exercise, PDU_TYPE_DATA, make_timestamp(now)),
                    entity_id=eid,
                    throttle=control.throttle,
                    pitch_cmd=control.pitch_cmd,
                    roll_cmd=control.roll_cmd,
                    fire=int(self._fire_flags[eid]),
                )
            self.transport.send(encode(pdu))
            self.stats.sent += 1
        self._last_send = now

    # ---------------------------------------------------------- main loop

    def tick(self, now: float) -> None:
        """One deterministic main-loop iteration at bridge time ``now``."""
        fresh = False
        for data in self.transport.poll():
            fresh = self._accept(data, now) or fresh
        interval = 1.0 / self.config.send_rate
        # Slack absorbs binary float accumulation in k * interval clocks.
        timer_due = (self._last_send is None
                     or now - self._last_send >= interval - 1e-9)
        if not (fresh or timer_due):
            return
        self._advance(now)
        self._decide()
        self._emit(now)

    def run(self, duration: float | None = None, poll_interval: float = 0.005) -> None:
        """Wall-clock loop; returns on :meth:`stop` or after ``duration``."""
        start = time.monotonic()
        try:
            while not self._stop.is_set():
                now = time.monotonic() - start
                if duration is not None and now >= duration:
                    break
                self.tick(now)
                time.sleep(poll_interval)
        finally:
            self.transport.close()

    def stop(self) -> None:
        """Ask :meth:`run` to exit; it complies within one poll interval."""
        self._stop.set()

    def external_position(self, eid: EntityId, now: float) -> np.ndarray:
        """Dead-reckoned NED position of a mirrored entity."""
        return self.mirrors[eid].position_ned(now, self.config.origin)

    def agent_state(self, eid: EntityId) -> AircraftState:
        return self.arrays.state_at(self.agent_ids.index(eid))


# ------------------------------------------------------ equivalence check


class LoopbackSimPeer:
    """Stands in for the external simulator on a loopback pair.

    Holds authoritative aircraft states, applies every flight command it
    receives, integrates with the same kernel as the bridge (or a
    deliberately different sub-step for divergence diagnostics), and
    reports entity states back.
    """

    def __init__(
        self,
        transport: Transport,
        initial_states: Mapping[EntityId, AircraftState],
        origin: GeodeticOrigin,
        exercise_id: int,
        params: FlightParams = DEFAULT_PARAMS,
        dt: float = INTEGRATION_DT,
    ):
        self.transport = transport
        self.origin = origin
        self.exercise_id = exercise_id
        self.params = params
        self.dt = dt
        self.ids = sorted(initial_states, key=EntityId.as_tuple)
        self.arrays = StateArrays.from_states(
            [initial_states[e] for e in self.ids])
        self.controls = {e: ControlInput(throttle=0.5) for e in self.ids}

    def emit(self, now: float) -> None:
        for index, eid in enumerate(self.ids):
            pdu = state_to_entity_pdu(
                eid, self.arrays.state_at(index), self.origin,
                self.exercise_id, now)
            self.transport.send(encode(pdu))

    def absorb(self) -> None:
        for data in self.transport.poll():
            pdu = decode(data)
            if isinstance(pdu, ActionDataPdu) and pdu.entity_id in self.controls:
                self.controls[pdu.entity_id] = ControlInput(
                    throttle=pdu.throttle,
                    pitch_cmd=pdu.pitch_cmd,
                    roll_cmd=pdu.roll_cmd,
                )

    def advance(self, interval: float) -> None:
        substeps = max(1, int(round(interval / self.dt)))
        throttle = np.array([self.controls[e].throttle for e in self.ids])
        pitch = np.array([self.controls[e].pitch_cmd for e in self.ids])
        roll = np.array([self.controls[e].roll_cmd for e in self.ids])
        step_arrays(self.arrays, throttle, pitch, roll,
                    self.dt, substeps, self.params)

    def positions(self) -> np.ndarray:
        return np.stack([self.arrays.north, self.arrays.east, self.arrays.down],
                        axis=1)


def mode_equivalence_check(
    initial_states: Mapping[EntityId, AircraftState],
    policies: Mapping[EntityId, PolicyKind],
    duration: float,
    send_rate: float = DEFAULT_SEND_RATE,
    params: FlightParams = DEFAULT_PARAMS,
    origin: GeodeticOrigin = DEFAULT_ORIGIN,
    exercise_id: int = 1,
    peer_dt: float = INTEGRATION_DT,
) -> float:
    """Max position divergence (m) between the two bridge modes.

    Runs the same roster twice on loopback transports: once in ``state``
    mode, where the bridge integrates and broadcasts entity states, and
    once in ``action`` mode, where a :class:`LoopbackSimPeer` integrates
    the commands the bridge sends.  Both sides share one kernel, one
    sub-step and one decision schedule, so the trajectories agree to the
    last bit unless the wire quantisation flips a policy branch --
    passing ``peer_dt`` different from the bridge's own sub-step shows
    up here as a reported divergence, not an error.
    """
    ids = sorted(initial_states, key=EntityId.as_tuple)
    roster = {e: CONTROLLED_BY_AGENT for e in ids}
    interval = 1.0 / send_rate
    ticks = int(round(duration * send_rate))

    # Route one: the bridge owns the dynamics.
    a_side, _a_void = LoopbackTransport.pair()
    state_bridge = DisBridge(
        BridgeConfig(
            roster=roster, traffic_filter=VrfFilter(exercise_id),
            mode=MODE_STATE, send_rate=send_rate, policies=dict(policies),
            origin=origin),
        a_side, initial_states, params=params)

    # Route two: the peer owns the dynamics and echoes states back.
    b_bridge_end, b_peer_end = LoopbackTransport.pair()
    action_bridge = DisBridge(
        BridgeConfig(
            roster=roster, traffic_filter=VrfFilter(exercise_id),
            mode=MODE_ACTION, send_rate=send_rate, policies=dict(policies),
            origin=origin),
        b_bridge_end, initial_states, params=params)
    peer = LoopbackSimPeer(
        b_peer_end, initial_states, origin, exercise_id,
        params=params, dt=peer_dt)

    divergence = 0.0
    for k in range(ticks + 1):
        now = k * interval
        if k > 0:
            peer.absorb()
            peer.advance(interval)
        peer.emit(now)
        state_bridge.tick(now)
        action_bridge.tick(now)
        gap = np.linalg.norm(
            np.stack([state_bridge.arrays.north, state_bridge.arrays.east,
                      state_bridge.arrays.down], axis=1) - peer.positions(),
            axis=1)
        divergence = max(divergence, float(gap.max()))
    return divergence
