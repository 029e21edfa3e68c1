"""
Encoding aircraft state onto the wire
=====================================

Builds an entity-state frame, shows the raw bytes, decodes it back,
and dead-reckons the position forward the way a receiver would between
updates.
"""

import math

from aircombat import discodec as dc

# A fighter 3 km up, doing 220 m/s on a north-easterly heading.
pdu = dc.EntityStatePdu(
    header=dc.make_header(exercise_id=1, pdu_type=dc.PDU_TYPE_ENTITY_STATE,
                          timestamp=dc.make_timestamp(12.5)),
    entity_id=dc.EntityId(site=1, application=1, entity=7),
    force_id=1,
    location=(1200.0, 450.0, -3000.0),
    linear_velocity=(190.5, 110.0, 0.0),
    orientation=(math.radians(30.0), 0.0, 0.0),
    marking="BLUE-7",
)

blob = dc.encode(pdu)
print(f"entity-state frame: {len(blob)} bytes")
print(f"first 16 bytes:     {blob[:16].hex(' ')}")
print(f"marking field:      {blob[128:139]!r}")

# Decoding returns an equal dataclass; the codec is byte-exact both ways.
back = dc.decode(blob)
assert back == pdu
print(f"round trip ok:      entity {back.entity_id}, "
      f"marking {back.marking!r}")

# Between updates a receiver extrapolates with the velocity vector.
for dt in (0.0, 0.5, 1.0):
    n, e, d = dc.dead_reckon(back, dt)
    print(f"dead-reckoned +{dt:.1f}s: north {n:8.1f}  east {e:7.1f}  down {d:8.1f}")

# The command frame is the compact 64-byte sibling.
action = dc.ActionDataPdu(
    header=dc.make_header(1, dc.PDU_TYPE_DATA),
    entity_id=dc.EntityId(1, 1, 7),
    throttle=0.85, pitch_cmd=0.1, roll_cmd=-0.3, fire=1, request_id=42,
)
print(f"action frame:       {len(dc.encode(action))} bytes")
