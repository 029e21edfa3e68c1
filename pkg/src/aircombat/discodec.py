"""Binary codec for the two DIS PDUs used by the simulation bridge.

Implements version 6 of the IEEE 1278.1 wire format, big-endian throughout.
Only two PDU kinds are understood:

* Entity State (type 1): full kinematic state of one aircraft.  Encoded
  PDUs always carry zero articulation records and are exactly 144 bytes.
* Data (type 20): repurposed as the action carrier.  One variable datum
  record holds a 16-byte flight command (throttle, pitch, roll, trigger).

Anything else decodes to :class:`UnsupportedPdu` so a receive loop can
count and skip foreign traffic without dying.  Damaged datagrams raise
:class:`MalformedPacketError` instead.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

PROTOCOL_VERSION = 6

PDU_TYPE_ENTITY_STATE = 1
PDU_TYPE_DATA = 20

FAMILY_ENTITY_INFORMATION = 1
FAMILY_SIMULATION_MANAGEMENT = 5

HEADER_SIZE = 12
ENTITY_STATE_SIZE = 144
ACTION_DATA_SIZE = 64

# Variable-datum id claimed by the action record (private enumeration range).
ACTION_DATUM_ID = 60001
ACTION_DATUM_BITS = 128

# Dead reckoning: fixed rotation, constant velocity, world coordinates.
DRM_FPW = 2

MARKING_ASCII = 1
MARKING_LENGTH = 11

# Fixed identity advertised for every encoded aircraft: platform / air /
# country 225 / fighter category.  Decoders here ignore the field.
_ENTITY_TYPE = (1, 2, 225, 1, 3, 0, 0)
_ALT_ENTITY_TYPE = (0, 0, 0, 0, 0, 0, 0)

_HEADER = struct.Struct(">BBBBIHH")
_ENTITY_STATE = struct.Struct(
    ">BBBBIHH"      # header
    "HHH"           # entity id
    "BB"            # force id, articulation record count
    "BBHBBBB"       # entity type
    "BBHBBBB"       # alternative entity type
    "3f"            # linear velocity, ECEF m/s
    "3d"            # location, ECEF m
    "3f"            # orientation psi/theta/phi, rad
    "I"             # appearance
    "B15s3f3f"      # dead reckoning: algorithm, padding, accel, angular vel
    "B11s"          # marking: charset, text
    "I"             # capabilities
)
_ACTION_DATA = struct.Struct(
    ">BBBBIHH"      # header
    "HHH"           # originating entity id
    "HHH"           # receiving entity id
    "II"            # request id, padding
    "II"            # fixed datum count, variable datum count
    "II"            # datum id, datum length in bits
    "3fI"           # throttle, pitch, roll, fire flag
)

assert _ENTITY_STATE.size == ENTITY_STATE_SIZE
assert _ACTION_DATA.size == ACTION_DATA_SIZE


class CodecError(Exception):
    """Base class for codec failures."""


class EncodeError(CodecError):
    """A field value cannot be represented on the wire."""


class MalformedPacketError(CodecError):
    """A datagram is too short, inconsistent, or not DIS v6."""


def _f32(value: float) -> float:
    """Round a float to the nearest IEEE 754 single, so that encoded and
    decoded dataclasses compare equal."""
    return struct.unpack(">f", struct.pack(">f", value))[0]


@dataclass(frozen=True)
class EntityId:
    """DIS entity identifier triple.  Unique per aircraft in an exercise."""

    site: int
    application: int
    entity: int

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.site, self.application, self.entity)

    def __str__(self) -> str:
        return f"{self.site}.{self.application}.{self.entity}"


@dataclass(frozen=True)
class PduHeader:
    exercise_id: int
    pdu_type: int
    protocol_family: int
    timestamp: int
    length: int
    protocol_version: int = PROTOCOL_VERSION
    padding: int = 0


@dataclass(frozen=True)
class EntityStatePdu:
    """Kinematic state of one entity in earth-centred coordinates.

    ``location`` is double precision; ``linear_velocity`` and
    ``orientation`` are single precision and get quantised on
    construction so round-trips compare equal.
    """

    header: PduHeader
    entity_id: EntityId
    force_id: int
    location: tuple[float, float, float]
    linear_velocity: tuple[float, float, float]
    orientation: tuple[float, float, float]
    dead_reckoning: int = DRM_FPW
    marking: str = ""
    articulation_count: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "location", tuple(float(c) for c in self.location))
        object.__setattr__(
            self, "linear_velocity", tuple(_f32(c) for c in self.linear_velocity)
        )
        object.__setattr__(
            self, "orientation", tuple(_f32(c) for c in self.orientation)
        )


@dataclass(frozen=True)
class ActionDataPdu:
    """Flight command for one entity, carried as a Data PDU.

    The originating and receiving ids both name the commanded aircraft.
    ``fire`` is 0 or 1.
    """

    header: PduHeader
    entity_id: EntityId
    throttle: float
    pitch_cmd: float
    roll_cmd: float
    fire: int
    request_id: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "throttle", _f32(self.throttle))
        object.__setattr__(self, "pitch_cmd", _f32(self.pitch_cmd))
        object.__setattr__(self, "roll_cmd", _f32(self.roll_cmd))


@dataclass(frozen=True)
class UnsupportedPdu:
    """Well-formed DIS traffic this codec does not model."""

    pdu_type: int
    reason: str
    header: PduHeader | None = None


def make_header(
    exercise_id: int, pdu_type: int, timestamp: int = 0
) -> PduHeader:
    """Build a header with the family and length implied by the PDU type."""
    if pdu_type == PDU_TYPE_ENTITY_STATE:
        return PduHeader(
            exercise_id=exercise_id,
            pdu_type=pdu_type,
            protocol_family=FAMILY_ENTITY_INFORMATION,
            timestamp=timestamp,
            length=ENTITY_STATE_SIZE,
        )
    if pdu_type == PDU_TYPE_DATA:
        return PduHeader(
            exercise_id=exercise_id,
            pdu_type=pdu_type,
            protocol_family=FAMILY_SIMULATION_MANAGEMENT,
            timestamp=timestamp,
            length=ACTION_DATA_SIZE,
        )
    raise EncodeError(f"no header template for pdu type {pdu_type}")


def make_timestamp(seconds: float) -> int:
    """Relative DIS timestamp: 31-bit units past the hour, LSB clear."""
    if seconds < 0 or not math.isfinite(seconds):
        raise EncodeError(f"timestamp seconds out of range: {seconds}")
    units = int((seconds % 3600.0) / 3600.0 * 0x7FFFFFFF)
    return (units & 0x7FFFFFFF) << 1


def timestamp_seconds(timestamp: int) -> float:
    """Inverse of :func:`make_timestamp`, ignoring the absolute flag bit."""
    return (timestamp >> 1) / 0x7FFFFFFF * 3600.0


def _check_uint(name: str, value: int, bits: int) -> int:
    if not isinstance(value, int) or value < 0 or value >= (1 << bits):
        raise EncodeError(f"{name} out of range for u{bits}: {value!r}")
    return value


def _check_entity_id(eid: EntityId) -> None:
    _check_uint("entity_id.site", eid.site, 16)
    _check_uint("entity_id.application", eid.application, 16)
    _check_uint("entity_id.entity", eid.entity, 16)


def _check_finite(name: str, values: tuple[float, ...]) -> None:
    for c in values:
        if not math.isfinite(c):
            raise EncodeError(f"{name} must be finite, got {c!r}")


def _check_header(header: PduHeader, pdu_type: int, length: int) -> None:
    if header.protocol_version != PROTOCOL_VERSION:
        raise EncodeError(f"protocol_version must be {PROTOCOL_VERSION}")
    if header.pdu_type != pdu_type:
        raise EncodeError(
            f"header.pdu_type {header.pdu_type} does not match payload type {pdu_type}"
        )
    if header.length != length:
        raise EncodeError(f"header.length must be {length}, got {header.length}")
    _check_uint("exercise_id", header.exercise_id, 8)
    _check_uint("protocol_family", header.protocol_family, 8)
    _check_uint("timestamp", header.timestamp, 32)
    _check_uint("header.padding", header.padding, 16)


def encode(pdu: EntityStatePdu | ActionDataPdu) -> bytes:
    """Serialise a PDU to its big-endian datagram.

    Raises :class:`EncodeError` naming the offending field when a value
    cannot be represented.
    """
    if isinstance(pdu, EntityStatePdu):
        return _encode_entity_state(pdu)
    if isinstance(pdu, ActionDataPdu):
        return _encode_action_data(pdu)
    raise EncodeError(f"cannot encode object of type {type(pdu).__name__}")


def _encode_entity_state(pdu: EntityStatePdu) -> bytes:
    h = pdu.header
    _check_header(h, PDU_TYPE_ENTITY_STATE, ENTITY_STATE_SIZE)
    _check_entity_id(pdu.entity_id)
    _check_uint("force_id", pdu.force_id, 8)
    if pdu.articulation_count != 0:
        raise EncodeError("articulation records are not supported")
    if len(pdu.location) != 3 or len(pdu.linear_velocity) != 3 or len(pdu.orientation) != 3:
        raise EncodeError("location, velocity and orientation must have 3 components")
    _check_finite("location", pdu.location)
    _check_finite("linear_velocity", pdu.linear_velocity)
    _check_finite("orientation", pdu.orientation)
    if pdu.dead_reckoning != DRM_FPW:
        raise EncodeError(f"unsupported dead reckoning algorithm {pdu.dead_reckoning}")
    try:
        marking = pdu.marking.encode("ascii")
    except UnicodeEncodeError as exc:
        raise EncodeError(f"marking must be ASCII: {pdu.marking!r}") from exc
    if len(marking) > MARKING_LENGTH:
        raise EncodeError(f"marking longer than {MARKING_LENGTH} chars: {pdu.marking!r}")
    if marking != marking.rstrip(b"\x00 "):
        # Trailing pad characters would not survive a decode round trip.
        raise EncodeError(f"marking ends in padding characters: {pdu.marking!r}")
    return _ENTITY_STATE.pack(
        h.protocol_version, h.exercise_id, h.pdu_type, h.protocol_family,
        h.timestamp, h.length, h.padding,
        pdu.entity_id.site, pdu.entity_id.application, pdu.entity_id.entity,
        pdu.force_id, pdu.articulation_count,
        *_ENTITY_TYPE,
        *_ALT_ENTITY_TYPE,
        *pdu.linear_velocity,
        *pdu.location,
        *pdu.orientation,
        0,                            # appearance
        pdu.dead_reckoning, b"\x00" * 15, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        MARKING_ASCII, marking.ljust(MARKING_LENGTH, b"\x00"),
        0,                            # capabilities
    )


def _encode_action_data(pdu: ActionDataPdu) -> bytes:
    h = pdu.header
    _check_header(h, PDU_TYPE_DATA, ACTION_DATA_SIZE)
    _check_entity_id(pdu.entity_id)
    _check_uint("request_id", pdu.request_id, 32)
    _check_finite("command", (pdu.throttle, pdu.pitch_cmd, pdu.roll_cmd))
    if not 0.0 <= pdu.throttle <= 1.0:
        raise EncodeError(f"throttle out of [0, 1]: {pdu.throttle}")
    if not -1.0 <= pdu.pitch_cmd <= 1.0:
        raise EncodeError(f"pitch_cmd out of [-1, 1]: {pdu.pitch_cmd}")
    if not -1.0 <= pdu.roll_cmd <= 1.0:
        raise EncodeError(f"roll_cmd out of [-1, 1]: {pdu.roll_cmd}")
    if pdu.fire not in (0, 1):
        raise EncodeError(f"fire must be 0 or 1, got {pdu.fire!r}")
    eid = pdu.entity_id
    return _ACTION_DATA.pack(
        h.protocol_version, h.exercise_id, h.pdu_type, h.protocol_family,
        h.timestamp, h.length, h.padding,
        eid.site, eid.application, eid.entity,
        eid.site, eid.application, eid.entity,
        pdu.request_id, 0,
        0, 1,
        ACTION_DATUM_ID, ACTION_DATUM_BITS,
        pdu.throttle, pdu.pitch_cmd, pdu.roll_cmd, pdu.fire,
    )


def decode(data: bytes) -> EntityStatePdu | ActionDataPdu | UnsupportedPdu:
    """Parse one datagram.

    Returns a typed PDU, or :class:`UnsupportedPdu` for valid DIS traffic
    outside this codec's scope.  Raises :class:`MalformedPacketError` for
    short, truncated, or non-v6 datagrams.
    """
    if len(data) < HEADER_SIZE:
        raise MalformedPacketError(f"datagram shorter than header: {len(data)} bytes")
    version, exercise_id, pdu_type, family, timestamp, length, padding = _HEADER.unpack_from(data)
    if version != PROTOCOL_VERSION:
        raise MalformedPacketError(f"unsupported protocol version {version}")
    if length < HEADER_SIZE:
        raise MalformedPacketError(f"declared length {length} below header size")
    if len(data) < length:
        raise MalformedPacketError(
            f"truncated datagram: declares {length} bytes, got {len(data)}"
        )
    header = PduHeader(
        exercise_id=exercise_id, pdu_type=pdu_type, protocol_family=family,
        timestamp=timestamp, length=length, protocol_version=version,
        padding=padding,
    )
    if pdu_type == PDU_TYPE_ENTITY_STATE:
        return _decode_entity_state(data, header)
    if pdu_type == PDU_TYPE_DATA:
        return _decode_action_data(data, header)
    return UnsupportedPdu(pdu_type, f"unhandled pdu type {pdu_type}", header)


def _decode_entity_state(
    data: bytes, header: PduHeader
) -> EntityStatePdu | UnsupportedPdu:
    if header.length < ENTITY_STATE_SIZE:
        raise MalformedPacketError(
            f"entity state declares {header.length} bytes, minimum is {ENTITY_STATE_SIZE}"
        )
    fields = _ENTITY_STATE.unpack_from(data)
    (site, app, entity, force_id, articulation_count) = fields[7:12]
    velocity = fields[26:29]
    location = fields[29:32]
    orientation = fields[32:35]
    dead_reckoning = fields[36]
    marking_bytes = fields[45]
    if articulation_count != 0:
        return UnsupportedPdu(
            PDU_TYPE_ENTITY_STATE,
            f"{articulation_count} articulation records present",
            header,
        )
    marking = marking_bytes.rstrip(b"\x00 ").decode("ascii", errors="replace")
    return EntityStatePdu(
        header=header,
        entity_id=EntityId(site, app, entity),
        force_id=force_id,
        location=location,
        linear_velocity=velocity,
        orientation=orientation,
        dead_reckoning=dead_reckoning,
        marking=marking,
        articulation_count=0,
    )


def _decode_action_data(
    data: bytes, header: PduHeader
) -> ActionDataPdu | UnsupportedPdu:
    if header.length < ACTION_DATA_SIZE:
        # A Data PDU can legitimately be shorter when it carries other
        # datum records; it is just not an action command.
        if header.length < 40:
            raise MalformedPacketError(
                f"data pdu declares {header.length} bytes, fixed part is 40"
            )
        return UnsupportedPdu(PDU_TYPE_DATA, "data pdu without an action record", header)
    fields = _ACTION_DATA.unpack_from(data)
    (o_site, o_app, o_entity) = fields[7:10]
    request_id = fields[13]
    n_fixed, n_var = fields[15:17]
    datum_id, datum_bits = fields[17:19]
    throttle, pitch_cmd, roll_cmd, fire = fields[19:23]
    if n_fixed != 0 or n_var != 1:
        return UnsupportedPdu(
            PDU_TYPE_DATA, f"unexpected datum counts ({n_fixed} fixed, {n_var} variable)",
            header,
        )
    if datum_id != ACTION_DATUM_ID:
        return UnsupportedPdu(PDU_TYPE_DATA, f"foreign datum id {datum_id}", header)
    if datum_bits != ACTION_DATUM_BITS:
        raise MalformedPacketError(
            f"action datum declares {datum_bits} bits, expected {ACTION_DATUM_BITS}"
        )
    if fire not in (0, 1):
        raise MalformedPacketError(f"fire flag must be 0 or 1, got {fire}")
    for name, value, lo, hi in (
        ("throttle", throttle, 0.0, 1.0),
        ("pitch_cmd", pitch_cmd, -1.0, 1.0),
        ("roll_cmd", roll_cmd, -1.0, 1.0),
    ):
        if not math.isfinite(value) or not lo <= value <= hi:
            raise MalformedPacketError(f"{name} out of [{lo}, {hi}]: {value}")
    return ActionDataPdu(
        header=header,
        entity_id=EntityId(o_site, o_app, o_entity),
        throttle=throttle,
        pitch_cmd=pitch_cmd,
        roll_cmd=roll_cmd,
        fire=fire,
        request_id=request_id,
    )


def dead_reckon(pdu: EntityStatePdu, dt: float) -> tuple[float, float, float]:
    """Extrapolate position ``dt`` seconds past the PDU under constant
    velocity (algorithm 2: fixed rotation, world coordinates)."""
    if dt < 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be non-negative and finite, got {dt}")
    x, y, z = pdu.location
    vx, vy, vz = pdu.linear_velocity
    return (x + vx * dt, y + vy * dt, z + vz * dt)
