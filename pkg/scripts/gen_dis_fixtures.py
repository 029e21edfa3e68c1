#!/usr/bin/env python3
"""Generate golden DIS byte fixtures under fixtures/dis/.

Deliberately independent of the package codec: every field is written at
its explicit byte offset, following the published v6 wire layout, so the
fixtures can catch field-order and offset bugs in the codec itself.

Entity State PDU (144 bytes, zero articulation records):
    0   u8   protocol version        = 6
    1   u8   exercise id
    2   u8   pdu type                = 1
    3   u8   protocol family         = 1
    4   u32  timestamp
    8   u16  length                  = 144
    10  u16  padding
    12  u16  site, 14 u16 application, 16 u16 entity
    18  u8   force id
    19  u8   articulation count      = 0
    20  8B   entity type (kind, domain, u16 country, cat, subcat, spec, extra)
    28  8B   alternative entity type
    36  3f32 linear velocity (ECEF m/s)
    48  3f64 location (ECEF m)
    72  3f32 orientation psi/theta/phi (rad)
    84  u32  appearance
    88  u8   dead reckoning algorithm, 89 15B padding,
    104 3f32 linear acceleration, 116 3f32 angular velocity
    128 u8   marking charset (1 = ASCII), 129 11B marking text
    140 u32  capabilities

Data PDU repurposed as action carrier (64 bytes):
    0   12B  header (pdu type 20, family 5, length 64)
    12  u16*3 originating entity id
    18  u16*3 receiving entity id
    24  u32  request id
    28  u32  padding
    32  u32  fixed datum count       = 0
    36  u32  variable datum count    = 1
    40  u32  datum id                = 60001
    44  u32  datum length in bits    = 128
    48  f32  throttle, 52 f32 pitch, 56 f32 roll, 60 u32 fire flag
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "dis"

F16_TYPE = (1, 2, 225, 1, 3, 0, 0)


def f32(x: float) -> float:
    """Value actually stored when x is written as an IEEE single."""
    return struct.unpack(">f", struct.pack(">f", x))[0]


def put(buf: bytearray, offset: int, fmt: str, *values) -> None:
    struct.pack_into(">" + fmt, buf, offset, *values)


def entity_state(
    *, exercise_id, timestamp, site, application, entity, force_id,
    velocity, location, orientation, marking,
) -> tuple[bytes, dict]:
    buf = bytearray(144)
    put(buf, 0, "B", 6)
    put(buf, 1, "B", exercise_id)
    put(buf, 2, "B", 1)
    put(buf, 3, "B", 1)
    put(buf, 4, "I", timestamp)
    put(buf, 8, "H", 144)
    put(buf, 10, "H", 0)
    put(buf, 12, "HHH", site, application, entity)
    put(buf, 18, "B", force_id)
    put(buf, 19, "B", 0)
    put(buf, 20, "BBHBBBB", *F16_TYPE)
    put(buf, 28, "BBHBBBB", 0, 0, 0, 0, 0, 0, 0)
    put(buf, 36, "fff", *velocity)
    put(buf, 48, "ddd", *location)
    put(buf, 72, "fff", *orientation)
    put(buf, 84, "I", 0)
    put(buf, 88, "B", 2)
    put(buf, 104, "ffffff", 0, 0, 0, 0, 0, 0)
    put(buf, 128, "B", 1)
    put(buf, 129, "11s", marking.encode("ascii"))
    put(buf, 140, "I", 0)
    sidecar = {
        "pdu": "entity_state",
        "header": {
            "protocol_version": 6, "exercise_id": exercise_id, "pdu_type": 1,
            "protocol_family": 1, "timestamp": timestamp, "length": 144,
            "padding": 0,
        },
        "entity_id": [site, application, entity],
        "force_id": force_id,
        "location": list(location),
        "linear_velocity": [f32(v) for v in velocity],
        "orientation": [f32(v) for v in orientation],
        "dead_reckoning": 2,
        "marking": marking,
        "articulation_count": 0,
    }
    return bytes(buf), sidecar


def action_data(
    *, exercise_id, timestamp, site, application, entity, request_id,
    throttle, pitch_cmd, roll_cmd, fire,
) -> tuple[bytes, dict]:
    buf = bytearray(64)
    put(buf, 0, "B", 6)
    put(buf, 1, "B", exercise_id)
    put(buf, 2, "B", 20)
    put(buf, 3, "B", 5)
    put(buf, 4, "I", timestamp)
    put(buf, 8, "H", 64)
    put(buf, 10, "H", 0)
    put(buf, 12, "HHH", site, application, entity)
    put(buf, 18, "HHH", site, application, entity)
    put(buf, 24, "I", request_id)
    put(buf, 28, "I", 0)
    put(buf, 32, "I", 0)
    put(buf, 36, "I", 1)
    put(buf, 40, "I", 60001)
    put(buf, 44, "I", 128)
    put(buf, 48, "fff", throttle, pitch_cmd, roll_cmd)
    put(buf, 60, "I", fire)
    sidecar = {
        "pdu": "action_data",
        "header": {
            "protocol_version": 6, "exercise_id": exercise_id, "pdu_type": 20,
            "protocol_family": 5, "timestamp": timestamp, "length": 64,
            "padding": 0,
        },
        "entity_id": [site, application, entity],
        "throttle": f32(throttle),
        "pitch_cmd": f32(pitch_cmd),
        "roll_cmd": f32(roll_cmd),
        "fire": fire,
        "request_id": request_id,
    }
    return bytes(buf), sidecar


def rel_timestamp(seconds: float) -> int:
    """Relative DIS timestamp for a moment within the hour, LSB clear."""
    return (int(seconds / 3600.0 * 0x7FFFFFFF) & 0x7FFFFFFF) << 1


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    fixtures = {
        # Straight and level near 47N 8E, 3000 m, flying roughly east.
        "entity_state_level": entity_state(
            exercise_id=1, timestamp=rel_timestamp(123.456),
            site=1, application=1, entity=1, force_id=1,
            velocity=(-28.5, 196.25, -41.125),
            location=(4325481.75, 607843.0625, 4642113.5),
            orientation=(2.5, 0.0625, -0.75),
        marking="VIPER-1",
        ),
        # Hard banked turn; values that do not land exactly on singles.
        "entity_state_turn": entity_state(
            exercise_id=3, timestamp=rel_timestamp(3599.9),
            site=2, application=1, entity=7, force_id=2,
            velocity=(101.3, -77.7, 5.05),
            location=(4325001.1, 608201.9, 4641800.2),
            orientation=(-1.1, 0.2, 1.309),
            marking="BANDIT-7",
        ),
        # Full afterburner, trigger down.
        "action_data_fire": action_data(
            exercise_id=1, timestamp=rel_timestamp(124.0),
            site=1, application=1, entity=2, request_id=7,
            throttle=1.0, pitch_cmd=0.5, roll_cmd=-0.25, fire=1,
        ),
        # Gentle cruise correction.
        "action_data_cruise": action_data(
            exercise_id=1, timestamp=rel_timestamp(130.5),
            site=2, application=1, entity=3, request_id=8,
            throttle=0.35, pitch_cmd=-0.1, roll_cmd=0.05, fire=0,
        ),
    }
    for name, (blob, sidecar) in fixtures.items():
        (OUT_DIR / f"{name}.bin").write_bytes(blob)
        (OUT_DIR / f"{name}.json").write_text(json.dumps(sidecar, indent=2) + "\n")
        print(f"wrote {name}: {len(blob)} bytes")


if __name__ == "__main__":
    main()
